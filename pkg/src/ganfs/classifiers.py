"""From-scratch binary classifiers: logistic regression and a random forest.

Logistic regression is full-batch gradient descent on mean BCE with a
gradient-norm stopping rule. The forest grows CART trees on bootstrap
resamples, choosing Gini-optimal midpoint thresholds over a random
feature subset per node, and accumulates Gini importance per feature.
Both expose sklearn-style fit/predict plus JSON persistence.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .nets import sigmoid


class LogisticRegression:
    """Binary logistic regression, zero-initialized, full-batch descent."""

    def __init__(self, lr=0.1, max_iter=1000, tol=1e-6):
        self.lr = lr
        self.max_iter = max_iter
        self.tol = tol
        self.w = None
        self.b = 0.0
        self.n_iter_ = 0

    def fit(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.ndim != 2 or len(x) != len(y):
            raise ValueError("x must be (n, d) with matching labels")
        n = len(x)
        self.w = np.zeros(x.shape[1])
        self.b = 0.0
        self.n_iter_ = 0
        for _ in range(self.max_iter):
            p = sigmoid(x @ self.w + self.b)
            gw = x.T @ (p - y) / n
            gb = float(np.mean(p - y))
            if max(np.abs(gw).max(initial=0.0), abs(gb)) < self.tol:
                break
            self.w -= self.lr * gw
            self.b -= self.lr * gb
            self.n_iter_ += 1
        return self

    def predict_proba(self, x):
        if self.w is None:
            raise ValueError("fit before predict")
        return sigmoid(np.asarray(x, dtype=np.float64) @ self.w + self.b)

    def predict(self, x):
        return (self.predict_proba(x) >= 0.5).astype(np.int64)

    def to_doc(self):
        return {"kind": "logreg", "lr": self.lr, "max_iter": self.max_iter,
                "tol": self.tol, "w": self.w.tolist(), "b": self.b,
                "n_iter": self.n_iter_}

    @classmethod
    def from_doc(cls, doc):
        model = cls(lr=doc["lr"], max_iter=doc["max_iter"], tol=doc["tol"])
        model.w = np.asarray(doc["w"], dtype=np.float64)
        model.b = float(doc["b"])
        model.n_iter_ = int(doc["n_iter"])
        return model


@dataclass
class TreeNode:
    prob: float  # class-1 probability at this node
    feature: int = -1  # -1 marks a leaf
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self):
        return self.feature < 0


def gini(pos, n):
    """Gini impurity of a node with ``pos`` positives out of ``n``."""
    if n == 0:
        return 0.0
    p = pos / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _best_split(x, y, features):
    """Best (decrease, feature, threshold) over the given features.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; split quality is the decrease in Gini impurity, computed for
    all candidates of a feature at once via prefix sums. Returns None when
    no split strictly decreases impurity.
    """
    n = len(y)
    total_pos = int(y.sum())
    parent = gini(total_pos, n)
    best = None
    for f in features:
        col = x[:, f]
        order = np.argsort(col, kind="stable")
        cs = col[order]
        ys = y[order]
        distinct = np.flatnonzero(cs[:-1] < cs[1:])  # split after these
        if distinct.size == 0:
            continue
        left_n = distinct + 1
        left_pos = np.cumsum(ys)[distinct]
        right_n = n - left_n
        right_pos = total_pos - left_pos
        pl = left_pos / left_n
        pr = right_pos / right_n
        gl = 1.0 - pl * pl - (1.0 - pl) * (1.0 - pl)
        gr = 1.0 - pr * pr - (1.0 - pr) * (1.0 - pr)
        weighted = (left_n * gl + right_n * gr) / n
        k = int(np.argmin(weighted))
        decrease = parent - float(weighted[k])
        if decrease > 0.0 and (best is None or decrease > best[0]):
            threshold = (cs[distinct[k]] + cs[distinct[k] + 1]) / 2.0
            best = (decrease, f, threshold)
    return best


def fit_tree(x, y, rng=None, max_features=None, min_samples_split=2,
             max_depth=None):
    """Grow a CART tree; returns (root, raw Gini importance per feature).

    ``max_features`` limits each node's split search to that many randomly
    drawn features; a node whose drawn features admit no impurity-reducing
    split becomes a leaf. Importance accumulates
    (n_node / n_root) * impurity_decrease at every split.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n_root, d = x.shape
    if max_features is None or max_features >= d:
        max_features = d
    if max_features < 1:
        raise ValueError("max_features must be >= 1")
    if max_features < d and rng is None:
        raise ValueError("random feature subsets need an rng")
    importance = np.zeros(d)

    def grow(idx, depth):
        ys = y[idx]
        pos = int(ys.sum())
        node = TreeNode(prob=pos / len(idx))
        if (pos == 0 or pos == len(idx) or len(idx) < min_samples_split
                or (max_depth is not None and depth >= max_depth)):
            return node
        if max_features < d:
            features = rng.choice(d, size=max_features, replace=False)
        else:
            features = np.arange(d)
        found = _best_split(x[idx], ys, features)
        if found is None:
            return node
        decrease, f, threshold = found
        importance[f] += (len(idx) / n_root) * decrease
        node.feature = int(f)
        node.threshold = float(threshold)
        mask = x[idx, f] <= threshold
        node.left = grow(idx[mask], depth + 1)
        node.right = grow(idx[~mask], depth + 1)
        return node

    root = grow(np.arange(n_root), 0)
    return root, importance


def tree_predict_proba(root: TreeNode, x):
    """Class-1 probability per row, routing index blocks down the tree."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(len(x))
    stack = [(root, np.arange(len(x)))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = node.prob
        else:
            mask = x[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
    return out


class RandomForest:
    """Bagged CART trees with sqrt-of-d feature subsets per split."""

    def __init__(self, n_trees=100, max_features="sqrt", max_depth=None,
                 seed=0):
        self.n_trees = n_trees
        self.max_features = max_features
        self.max_depth = max_depth
        self.seed = seed
        self.trees = []
        self.feature_importances_ = None

    def _resolve_max_features(self, d):
        if self.max_features == "sqrt":
            return min(d, math.ceil(math.sqrt(d)))
        if self.max_features is None:
            return d
        return min(d, int(self.max_features))

    def fit(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, d = x.shape
        mf = self._resolve_max_features(d)
        self.trees = []
        importances = np.zeros(d)
        for ss in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            rng = np.random.default_rng(ss)
            boot = rng.integers(0, n, size=n)
            root, imp = fit_tree(x[boot], y[boot], rng=rng, max_features=mf,
                                 max_depth=self.max_depth)
            self.trees.append(root)
            total = imp.sum()
            if total > 0.0:
                importances += imp / total
        total = importances.sum()
        self.feature_importances_ = (importances / total if total > 0.0
                                     else importances)
        return self

    def predict_proba(self, x):
        if not self.trees:
            raise ValueError("fit before predict")
        probs = np.zeros(len(x))
        for root in self.trees:
            probs += tree_predict_proba(root, x)
        return probs / len(self.trees)

    def predict(self, x):
        return (self.predict_proba(x) >= 0.5).astype(np.int64)

    def to_doc(self):
        return {"kind": "forest", "n_trees": self.n_trees,
                "max_features": self.max_features, "max_depth": self.max_depth,
                "seed": self.seed,
                "importances": self.feature_importances_.tolist(),
                "trees": [_tree_doc(t) for t in self.trees]}

    @classmethod
    def from_doc(cls, doc):
        model = cls(n_trees=doc["n_trees"], max_features=doc["max_features"],
                    max_depth=doc["max_depth"], seed=doc["seed"])
        model.trees = [_tree_from_doc(t) for t in doc["trees"]]
        model.feature_importances_ = np.asarray(doc["importances"])
        return model


def _tree_doc(node):
    if node.is_leaf:
        return {"prob": node.prob}
    return {"prob": node.prob, "feature": node.feature,
            "threshold": node.threshold,
            "left": _tree_doc(node.left), "right": _tree_doc(node.right)}


def _tree_from_doc(doc):
    node = TreeNode(prob=doc["prob"])
    if "feature" in doc:
        node.feature = doc["feature"]
        node.threshold = doc["threshold"]
        node.left = _tree_from_doc(doc["left"])
        node.right = _tree_from_doc(doc["right"])
    return node


def save_classifier(model, path):
    with open(path, "w") as fh:
        json.dump(model.to_doc(), fh)
        fh.write("\n")


def load_classifier(path):
    with open(path) as fh:
        doc = json.load(fh)
    kinds = {"logreg": LogisticRegression, "forest": RandomForest}
    if doc.get("kind") not in kinds:
        raise ValueError(f"{path}: unknown classifier kind {doc.get('kind')!r}")
    return kinds[doc["kind"]].from_doc(doc)
