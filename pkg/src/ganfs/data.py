"""Loading, cleaning and splitting of network flow-record datasets.

Raw CSVs (CICFlowMeter column convention) are parsed into string tables,
cleaned into numeric matrices with binary labels, min-max normalized, and
split for training. A seeded synthetic generator with planted informative
features provides desk-scale fixtures.
"""

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

# Columns that carry flow identity rather than flow behaviour.
DEFAULT_DROP_COLS = (
    "Timestamp",
    "Source IP",
    "Destination IP",
    "Flow ID",
    "SimillarHTTP",
    "Unnamed: 0",
)

LABEL_COL = "Label"
BENIGN_LABEL = "BENIGN"
ATTACK_LABEL = "ATTACK"


class DataError(ValueError):
    """Malformed input data: ragged rows, missing columns, unparseable cells."""


@dataclass
class RawTable:
    """A parsed CSV: trimmed header names plus rows of string cells."""

    headers: list
    rows: list


@dataclass
class FlowDataset:
    """Numeric feature matrix with column names and binary labels.

    ``scaler`` holds per-column (min, max) pairs once fitted; ``normalized``
    marks whether ``features`` is already mapped into [0, 1].
    """

    features: np.ndarray
    feature_names: list
    labels: np.ndarray
    normalized: bool = False
    scaler: np.ndarray | None = None

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def take(self, idx):
        """New dataset restricted to the given row indices."""
        idx = np.asarray(idx)
        return replace(self, features=self.features[idx].copy(),
                       labels=self.labels[idx].copy())


@dataclass
class SplitSpec:
    train_fraction: float = 0.8
    stratified: bool = True
    seed: int = 0


@dataclass
class SyntheticSpec:
    n_attack: int
    n_benign: int
    d: int
    informative_idx: tuple
    noise_scale: float = 0.05
    seed: int = 0


def load_csv(path) -> RawTable:
    """Read a comma-delimited file with a header row; cells stay strings.

    Header names are whitespace-trimmed. A row whose cell count differs
    from the header is a hard error naming the offending line.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            headers = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row")
        headers = [h.strip() for h in headers]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(headers):
                raise DataError(
                    f"{path}: line {lineno} has {len(row)} cells, "
                    f"expected {len(headers)}")
            rows.append(row)
    return RawTable(headers=headers, rows=rows)


def concat_tables(tables) -> RawTable:
    """Concatenate tables row-wise; all must share the same header."""
    if not tables:
        raise DataError("no tables to concatenate")
    first = tables[0]
    rows = list(first.rows)
    for t in tables[1:]:
        if t.headers != first.headers:
            raise DataError("cannot concatenate tables with differing headers")
        rows.extend(t.rows)
    return RawTable(headers=list(first.headers), rows=rows)


def _parse_cell(cell):
    """Numeric value of a cell; empty and non-finite tokens map to 0."""
    s = cell.strip()
    if s == "":
        return 0.0
    try:
        v = float(s)
    except ValueError:
        return None
    # Infinity/NaN tokens (and numeric overflow) are treated as invalid
    # measurements, zeroed like the rate columns they typically come from.
    return v if math.isfinite(v) else 0.0


def preprocess(raw: RawTable, drop_cols=None) -> FlowDataset:
    """Turn a raw string table into a numeric FlowDataset.

    Drops identity columns (those of ``drop_cols`` that are present), parses
    every remaining non-Label cell as a float with invalid tokens zeroed,
    and encodes BENIGN as label 0 and every other label string as 1.
    """
    headers = [h.strip() for h in raw.headers]
    if LABEL_COL not in headers:
        raise DataError(f"no '{LABEL_COL}' column in input")
    drop = set(DEFAULT_DROP_COLS if drop_cols is None else drop_cols)
    keep_idx = [i for i, h in enumerate(headers)
                if h not in drop and h != LABEL_COL]
    label_idx = headers.index(LABEL_COL)
    names = [headers[i] for i in keep_idx]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DataError(f"duplicate feature columns: {dupes}")

    n = len(raw.rows)
    features = np.empty((n, len(keep_idx)), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    for r, row in enumerate(raw.rows):
        for c, i in enumerate(keep_idx):
            v = _parse_cell(row[i])
            if v is None:
                raise DataError(
                    f"unparseable cell {row[i]!r} in column "
                    f"'{headers[i]}', data row {r + 1}")
            features[r, c] = v
        labels[r] = 0 if row[label_idx].strip() == BENIGN_LABEL else 1
    return FlowDataset(features=features, feature_names=names, labels=labels)


def normalize(ds: FlowDataset) -> FlowDataset:
    """Min-max scale every column to [0, 1], fitting the scaler on ``ds``.

    Constant columns map to all-zeros. The fitted per-column (min, max)
    pairs are stored on the result for reuse on held-out data.
    """
    if ds.normalized:
        raise ValueError("dataset is already normalized")
    mins = ds.features.min(axis=0)
    maxs = ds.features.max(axis=0)
    scaler = np.stack([mins, maxs], axis=1)
    return replace(ds, features=_scale(ds.features, scaler),
                   normalized=True, scaler=scaler)


def apply_scaler(ds: FlowDataset, scaler: np.ndarray) -> FlowDataset:
    """Scale ``ds`` with an already-fitted scaler (e.g. on held-out data).

    Values outside the fitted range are clipped so the normalized-range
    invariant holds on test data too.
    """
    if ds.normalized:
        raise ValueError("dataset is already normalized")
    scaler = np.asarray(scaler, dtype=np.float64)
    if scaler.shape != (ds.n_features, 2):
        raise ValueError(f"scaler shape {scaler.shape} does not match "
                         f"{ds.n_features} features")
    return replace(ds, features=_scale(ds.features, scaler, clip=True),
                   normalized=True, scaler=scaler)


def _scale(x, scaler, clip=False):
    mins, maxs = scaler[:, 0], scaler[:, 1]
    span = maxs - mins
    safe = np.where(span == 0.0, 1.0, span)
    out = (x - mins) / safe
    out[:, span == 0.0] = 0.0
    if clip:
        out = np.clip(out, 0.0, 1.0)
    return out


def filter_attacks(ds: FlowDataset) -> FlowDataset:
    """Keep only label-1 rows, preserving order; empty result is an error."""
    mask = ds.labels == 1
    if not mask.any():
        raise ValueError("no attack rows (label 1) in dataset")
    return ds.take(np.flatnonzero(mask))


def cap_per_class(ds: FlowDataset, cap: int, group_key="label",
                  seed: int = 0) -> FlowDataset:
    """Subsample each group down to at most ``cap`` rows, seeded.

    ``group_key`` is either "label" or a feature-column name; groups
    smaller than the cap are kept whole. Kept rows stay in original order.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    if group_key == "label":
        values = ds.labels
    else:
        if group_key not in ds.feature_names:
            raise ValueError(f"unknown group column '{group_key}'")
        values = ds.features[:, ds.feature_names.index(group_key)]
    rng = np.random.default_rng(seed)
    keep = []
    for v in _stable_unique(values):
        idx = np.flatnonzero(values == v)
        if len(idx) > cap:
            idx = idx[rng.choice(len(idx), size=cap, replace=False)]
        keep.append(np.sort(idx))
    return ds.take(np.sort(np.concatenate(keep)))


def _stable_unique(values):
    """Unique values in order of first appearance."""
    uniq, first = np.unique(values, return_index=True)
    return uniq[np.argsort(first)]


def split(ds: FlowDataset, spec: SplitSpec):
    """Partition into (train, test); stratified by label when requested."""
    if not 0.0 < spec.train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(spec.seed)
    train_idx = []
    if spec.stratified:
        for c in _stable_unique(ds.labels):
            idx = np.flatnonzero(ds.labels == c)
            if len(idx) < 2:
                raise ValueError(
                    f"class {c} has {len(idx)} row(s); need at least 2 "
                    "for a stratified split")
            n_train = int(spec.train_fraction * len(idx))
            n_train = min(max(n_train, 1), len(idx) - 1)
            perm = idx[rng.permutation(len(idx))]
            train_idx.append(perm[:n_train])
        train_idx = np.concatenate(train_idx)
    else:
        n = ds.n_rows
        if n < 2:
            raise ValueError("need at least 2 rows to split")
        n_train = min(max(int(spec.train_fraction * n), 1), n - 1)
        train_idx = rng.permutation(n)[:n_train]
    train_mask = np.zeros(ds.n_rows, dtype=bool)
    train_mask[train_idx] = True
    return ds.take(np.flatnonzero(train_mask)), ds.take(np.flatnonzero(~train_mask))


def make_synthetic(spec: SyntheticSpec) -> FlowDataset:
    """Seeded two-class dataset with planted informative features.

    Informative columns get class-conditional Gaussian means separated by
    0.3 + 3*noise_scale (so separation never vanishes and always exceeds
    three noise standard deviations); all other columns are drawn from one
    shared distribution for both classes. Attack rows come first.
    """
    if spec.n_attack <= 0 or spec.n_benign <= 0:
        raise ValueError("sample counts must be positive")
    if spec.noise_scale < 0:
        raise ValueError("noise_scale must be >= 0")
    informative = sorted(set(spec.informative_idx))
    if informative and not (0 <= informative[0] and informative[-1] < spec.d):
        raise ValueError("informative_idx out of range")
    rng = np.random.default_rng(spec.seed)
    n = spec.n_attack + spec.n_benign
    features = rng.normal(0.5, spec.noise_scale, size=(n, spec.d))
    half_sep = (0.3 + 3.0 * spec.noise_scale) / 2.0
    for i in informative:
        features[:spec.n_attack, i] += half_sep
        features[spec.n_attack:, i] -= half_sep
    labels = np.concatenate([np.ones(spec.n_attack, dtype=np.int64),
                             np.zeros(spec.n_benign, dtype=np.int64)])
    names = [f"f{i:02d}" for i in range(spec.d)]
    return FlowDataset(features=features, feature_names=names, labels=labels)


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def save_dataset(ds: FlowDataset, path, extra=None):
    """Write a dataset as CSV plus a sidecar metadata document.

    Cells are serialized with full round-trip precision (repr); labels are
    written as BENIGN/ATTACK strings so re-preprocessing the file recovers
    the exact same dataset.
    """
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(ds.feature_names) + [LABEL_COL])
        for row, label in zip(ds.features, ds.labels):
            cells = [repr(float(v)) for v in row]
            cells.append(ATTACK_LABEL if label == 1 else BENIGN_LABEL)
            writer.writerow(cells)
    meta = {
        "feature_names": list(ds.feature_names),
        "n_rows": int(ds.n_rows),
        "normalized": bool(ds.normalized),
        "scaler": None if ds.scaler is None else
                  [[float(a), float(b)] for a, b in ds.scaler],
    }
    if extra:
        meta.update(extra)
    with open(meta_path(path), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_dataset(path) -> FlowDataset:
    """Load a dataset saved by :func:`save_dataset`, restoring its metadata."""
    ds = preprocess(load_csv(path), drop_cols=())
    mp = meta_path(path)
    if mp.exists():
        with open(mp) as fh:
            meta = json.load(fh)
        if meta.get("feature_names") != ds.feature_names:
            raise DataError(f"{mp}: feature names disagree with {path}")
        ds.normalized = bool(meta.get("normalized", False))
        scaler = meta.get("scaler")
        if scaler is not None:
            ds.scaler = np.asarray(scaler, dtype=np.float64)
    return ds
