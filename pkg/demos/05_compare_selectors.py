"""Benchmark the adversarial ranking against classical selectors.

Five supervised selectors see the labels; the adversarial one never
does. Each proposes a top-k subset, and both classifiers are scored on
held-out rows using only that subset.
"""

import numpy as np

from ganfs.baselines import METHODS, baseline_scores
from ganfs.classifiers import LogisticRegression, RandomForest
from ganfs.data import FlowDataset, SplitSpec, apply_scaler, filter_attacks, \
    normalize, split
from ganfs.gan import GanConfig, train_gan
from ganfs.metrics import ConfusionCounts, prf_scores
from ganfs.sensitivity import PerturbConfig, rank_features, sensitivity_scores

rng = np.random.default_rng(2)
n_attack = n_benign = 2000
d, k = 12, 4
x = rng.uniform(0, 1, size=(n_attack + n_benign, d))
for i in (1, 5, 9):  # attack signatures on three discrete columns
    x[:n_attack, i] = rng.choice([0.7, 0.9], size=n_attack)
    x[n_attack:, i] = rng.choice([0.1, 0.3], size=n_benign)
y = np.concatenate([np.ones(n_attack), np.zeros(n_benign)])
ds = FlowDataset(x, [f"f{i:02d}" for i in range(d)], y)

train, test = split(ds, SplitSpec(seed=3))
train = normalize(train)
test = apply_scaler(test, train.scaler)

rankings = {}
for method in METHODS:
    scores = baseline_scores(method, train.features, train.labels)
    rankings[method] = rank_features(scores)

attacks = filter_attacks(train)
model, _ = train_gan(attacks.features, GanConfig(epochs=60, seed=4))
gan_scores = sensitivity_scores(model.discriminator, attacks.features,
                                PerturbConfig(seed=5))
rankings["adversarial"] = rank_features(gan_scores)

print(f"top-{k} subsets and held-out F1")
print(f"{'selector':12s} {'top features':28s} {'logreg':>7s} {'forest':>7s}")
for name, order in rankings.items():
    cols = order[:k]
    row = [name, " ".join(train.feature_names[i] for i in cols)]
    for make in (lambda: LogisticRegression(), lambda: RandomForest(seed=6)):
        clf = make().fit(train.features[:, cols], train.labels)
        pred = clf.predict(test.features[:, cols])
        counts = ConfusionCounts.from_predictions(test.labels, pred)
        row.append(f"{prf_scores(counts).f1:.3f}")
    print(f"{row[0]:12s} {row[1]:28s} {row[2]:>7s} {row[3]:>7s}")
