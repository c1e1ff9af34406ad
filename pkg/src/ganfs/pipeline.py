"""Stage orchestration: artifacts, manifests, seeds and locking.

Each stage reads its inputs from the run directory, writes its artifacts
there, and records what it did (derived seed, wall time, sha256 of every
artifact) in manifest.json. Stage seeds are derived from the master seed
by hashing "master:stage", so any stage is reproducible in isolation and
no stage consumes another's random stream.
"""

import hashlib
import json
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, data
from .baselines import DEFAULT_BINS, METHODS, baseline_scores
from .classifiers import LogisticRegression, RandomForest
from .gan import GanConfig, load_gan, save_gan, train_gan, write_training_log
from .metrics import (
    ConfusionCounts, MetricRow, prf_scores, read_metrics_csv, roc_auc,
    time_block, write_metrics_csv,
)
from .nets import forward
from .sensitivity import (
    DEFAULT_FACTORS, PerturbConfig, make_report, read_ranking_csv,
    sensitivity_scores, write_report_csv,
)

MANIFEST_NAME = "manifest.json"
LOCK_NAME = ".lock"


class ConfigError(ValueError):
    """Bad run configuration: unknown keys, wrong types, missing file."""


@dataclass
class RunConfig:
    seed: int = 0
    out_dir: str = "out"
    threads: int | None = None
    # data handling
    drop_cols: tuple = data.DEFAULT_DROP_COLS
    cap_per_class: int | None = None
    train_fraction: float = 0.8
    stratified: bool = True
    # adversarial training
    epochs: int = 500
    batch_size: int = 4096
    lr: float = 0.001
    latent_dim: int | None = None
    # sensitivity scoring
    factors: tuple = DEFAULT_FACTORS
    sample_cap: int | None = None
    # baseline selectors
    bins: int = DEFAULT_BINS
    rf_trees: int = 100
    # evaluation
    k_values: tuple | None = None  # None: 5/10/20/40/d, trimmed to d


_TUPLE_FIELDS = {"drop_cols", "factors", "k_values"}


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return doc


def resolve_config(file_values: dict | None = None,
                   overrides: dict | None = None) -> RunConfig:
    """Defaults, overlaid with config-file values, overlaid with flags."""
    known = {f.name for f in fields(RunConfig)}
    merged = {}
    for source, name in ((file_values, "config file"), (overrides, "flags")):
        for key, value in (source or {}).items():
            if key not in known:
                raise ConfigError(f"unknown {name} setting '{key}'")
            if key in _TUPLE_FIELDS and value is not None:
                value = tuple(value)
            merged[key] = value
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def stage_seed(master_seed: int, stage: str) -> int:
    """Stable 64-bit seed for one named stage of one run."""
    digest = hashlib.blake2b(f"{master_seed}:{stage}".encode(),
                             digest_size=8).digest()
    return int.from_bytes(digest, "big")


def set_thread_limit(n: int):
    """Cap BLAS/OpenMP pools; effective only before their first use."""
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


@contextmanager
def run_lock(out_dir):
    """One stage at a time per run directory, via an exclusive lockfile."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(
            f"{lock} exists: another stage is running in this directory "
            "(delete the file if that run crashed)") from None
    try:
        os.write(fd, f"pid {os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _record_stage(cfg: RunConfig, stage: str, seed, seconds, artifacts):
    """Append one stage entry (seed, timing, artifact hashes) to the manifest."""
    out_dir = Path(cfg.out_dir)
    path = out_dir / MANIFEST_NAME
    if path.exists():
        with open(path) as fh:
            manifest = json.load(fh)
    else:
        manifest = {"tool_version": __version__, "master_seed": cfg.seed,
                    "config": asdict(cfg), "stages": {}}
    manifest["stages"][stage] = {
        "seed": seed,
        "seconds": seconds,
        "finished_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "artifacts": {Path(a).name: sha256_file(a) for a in artifacts},
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def _require(path, hint):
    if not Path(path).exists():
        raise RuntimeError(f"{path} not found; run `{hint}` first")
    return path


def preprocess_stage(cfg: RunConfig, inputs) -> list:
    """Clean, cap, split and normalize raw CSVs into train/test artifacts."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = stage_seed(cfg.seed, "preprocess")
    with time_block() as t:
        tables = [data.load_csv(p) for p in inputs]
        ds = data.preprocess(data.concat_tables(tables),
                             drop_cols=cfg.drop_cols)
        if cfg.cap_per_class is not None:
            ds = data.cap_per_class(ds, cfg.cap_per_class, seed=seed)
        train, test = data.split(ds, data.SplitSpec(
            train_fraction=cfg.train_fraction, stratified=cfg.stratified,
            seed=seed))
        train = data.normalize(train)
        test = data.apply_scaler(test, train.scaler)
        extra = {"drop_cols": list(cfg.drop_cols), "seed": seed}
        train_path = out_dir / "train.csv"
        test_path = out_dir / "test.csv"
        data.save_dataset(train, train_path, extra=extra)
        data.save_dataset(test, test_path, extra=extra)
    artifacts = [train_path, data.meta_path(train_path),
                 test_path, data.meta_path(test_path)]
    _record_stage(cfg, "preprocess", seed, t.seconds, artifacts)
    return artifacts


def train_gan_stage(cfg: RunConfig, progress=None) -> list:
    """Adversarially train on the attack rows of the prepared train set.

    If training diverges mid-run, the epochs completed so far are still
    written to the log before the error propagates.
    """
    out_dir = Path(cfg.out_dir)
    train_path = _require(out_dir / "train.csv", "preprocess")
    seed = stage_seed(cfg.seed, "train-gan")
    log_path = out_dir / "training_log.csv"
    seen = []

    def keep(log):
        seen.append(log)
        if progress is not None:
            progress(log)

    with time_block() as t:
        train = data.load_dataset(train_path)
        attacks = data.filter_attacks(train)
        gan_cfg = GanConfig(epochs=cfg.epochs, batch_size=cfg.batch_size,
                            lr=cfg.lr, latent_dim=cfg.latent_dim, seed=seed)
        try:
            model, logs = train_gan(attacks.features, gan_cfg, progress=keep)
        except Exception:
            write_training_log(seen, log_path)
            raise
        model_path = out_dir / "gan.json"
        save_gan(model, model_path)
        write_training_log(logs, log_path)
    _record_stage(cfg, "train-gan", seed, t.seconds, [model_path, log_path])
    return [model_path, log_path]


def rank_stage(cfg: RunConfig) -> Path:
    """Score features by discriminator sensitivity; write the ranking."""
    out_dir = Path(cfg.out_dir)
    train_path = _require(out_dir / "train.csv", "preprocess")
    model_path = _require(out_dir / "gan.json", "train-gan")
    seed = stage_seed(cfg.seed, "rank")
    with time_block() as t:
        train = data.load_dataset(train_path)
        attacks = data.filter_attacks(train)
        model = load_gan(model_path)
        scores = sensitivity_scores(
            model.discriminator, attacks.features,
            PerturbConfig(factors=cfg.factors, sample_cap=cfg.sample_cap,
                          seed=seed))
        report = make_report(attacks.feature_names, scores)
        out = out_dir / "sensitivity_ranking.csv"
        write_report_csv(report, out)
    _record_stage(cfg, "rank", seed, t.seconds, [out])
    return out


def baseline_stage(cfg: RunConfig, method: str) -> Path:
    """Rank features with one classical selector on the train set."""
    if method not in METHODS:
        raise ConfigError(f"unknown selector '{method}', "
                          f"expected one of {METHODS}")
    out_dir = Path(cfg.out_dir)
    train_path = _require(out_dir / "train.csv", "preprocess")
    seed = stage_seed(cfg.seed, f"baseline:{method}")
    with time_block() as t:
        train = data.load_dataset(train_path)
        scores = baseline_scores(method, train.features, train.labels,
                                 bins=cfg.bins, rf_trees=cfg.rf_trees,
                                 seed=seed)
        report = make_report(train.feature_names, scores)
        out = out_dir / f"{method}_ranking.csv"
        write_report_csv(report, out, score_col="Score")
    _record_stage(cfg, f"baseline:{method}", seed, t.seconds, [out])
    return out


def resolve_k_values(cfg: RunConfig, d: int) -> list:
    """Subset sizes to sweep: default ladder trimmed to d, or the
    configured list with oversized entries warned about and skipped."""
    if cfg.k_values is None:
        ladder = [k for k in (5, 10, 20, 40, d) if k <= d]
        return sorted(set(ladder))
    ks = []
    for k in cfg.k_values:
        if not 1 <= k <= d:
            print(f"warning: k={k} outside 1..{d}, skipped", file=sys.stderr)
        else:
            ks.append(int(k))
    if not ks:
        raise ConfigError(f"no usable k values in {cfg.k_values} for d={d}")
    return sorted(set(ks))


def discover_rankings(out_dir) -> dict:
    """Selector name -> ranking path for every ranking in the run dir."""
    found = {}
    for p in sorted(Path(out_dir).glob("*_ranking.csv")):
        found[p.name[: -len("_ranking.csv")]] = p
    return found


def evaluate_stage(cfg: RunConfig) -> Path:
    """Benchmark every ranked subset with both classifiers on the test set."""
    out_dir = Path(cfg.out_dir)
    train_path = _require(out_dir / "train.csv", "preprocess")
    test_path = _require(out_dir / "test.csv", "preprocess")
    rankings = discover_rankings(out_dir)
    if not rankings:
        raise RuntimeError(f"no *_ranking.csv in {out_dir}; "
                           "run `rank` or `baseline` first")
    train = data.load_dataset(train_path)
    test = data.load_dataset(test_path)
    ks = resolve_k_values(cfg, train.n_features)
    name_to_col = {n: i for i, n in enumerate(train.feature_names)}
    rows = []
    with time_block() as t_all:
        for selector, path in sorted(rankings.items()):
            names, _ = read_ranking_csv(path)
            unknown = [n for n in names if n not in name_to_col]
            if unknown:
                raise RuntimeError(
                    f"{path} ranks features missing from the train set: "
                    f"{unknown[:3]}")
            for k in ks:
                if k > len(names):
                    print(f"warning: {selector} ranks only {len(names)} "
                          f"features, skipping k={k}", file=sys.stderr)
                    continue
                cols = [name_to_col[n] for n in names[:k]]
                xtr, xte = train.features[:, cols], test.features[:, cols]
                seed = stage_seed(cfg.seed, f"evaluate:{selector}:{k}")
                for clf_name, clf in (
                        ("logreg", LogisticRegression()),
                        ("forest", RandomForest(n_trees=cfg.rf_trees,
                                                seed=seed))):
                    with time_block() as t:
                        clf.fit(xtr, train.labels)
                    proba = clf.predict_proba(xte)
                    pred = (proba >= 0.5).astype(np.int64)
                    counts = ConfusionCounts.from_predictions(test.labels, pred)
                    prf = prf_scores(counts)
                    rows.append(MetricRow(
                        selector=selector, classifier=clf_name, k=k,
                        accuracy=prf.accuracy, precision=prf.precision,
                        recall=prf.recall, f1=prf.f1,
                        auc=roc_auc(test.labels, proba),
                        train_seconds=t.seconds))
        out = out_dir / "metrics.csv"
        write_metrics_csv(rows, out)
    _record_stage(cfg, "evaluate", cfg.seed, t_all.seconds, [out])
    return out


SERIES_METRICS = ("accuracy", "precision", "recall", "f1")


def write_series_files(rows, series_dir: Path):
    """Emit one metric-vs-k CSV per (selector, classifier) pair.

    Plot-ready data; rendering is left to external tools. Returns the
    written paths in a deterministic order.
    """
    series_dir.mkdir(parents=True, exist_ok=True)
    pairs = sorted({(r.selector, r.classifier) for r in rows})
    paths = []
    for metric in SERIES_METRICS:
        for selector, classifier in pairs:
            picked = sorted((r.k, getattr(r, metric)) for r in rows
                            if r.selector == selector
                            and r.classifier == classifier)
            path = series_dir / f"{metric}_{selector}_{classifier}.csv"
            lines = [f"k,{metric}"]
            lines += [f"{k},{repr(float(v))}" for k, v in picked]
            path.write_text("\n".join(lines) + "\n")
            paths.append(path)
    return paths


def report_stage(cfg: RunConfig) -> Path:
    """Condense rankings and metrics into a markdown report plus plot data."""
    out_dir = Path(cfg.out_dir)
    metrics_path = _require(out_dir / "metrics.csv", "evaluate")
    rows = read_metrics_csv(metrics_path)
    if not rows:
        raise RuntimeError("metrics table is empty; rerun `evaluate` with "
                           "at least one ranking present")
    rankings = discover_rankings(out_dir)
    with time_block() as t:
        lines = ["# Feature selection benchmark", ""]
        if rankings:
            lines.append("## Top 10 features per selector")
            lines.append("")
            for selector, path in sorted(rankings.items()):
                names, scores = read_ranking_csv(path)
                lines.append(f"### {selector}")
                lines.append("")
                lines.append("| rank | feature | score |")
                lines.append("|---|---|---|")
                for i, (n, s) in enumerate(zip(names[:10], scores[:10]), 1):
                    lines.append(f"| {i} | {n} | {s:.6g} |")
                lines.append("")
        lines.append("## Metrics by selector, classifier and subset size")
        lines.append("")
        lines.append("| selector | classifier | k | accuracy | precision "
                     "| recall | f1 | auc |")
        lines.append("|---|---|---|---|---|---|---|---|")
        for r in rows:
            lines.append(f"| {r.selector} | {r.classifier} | {r.k} "
                         f"| {r.accuracy:.4f} | {r.precision:.4f} "
                         f"| {r.recall:.4f} | {r.f1:.4f} | {r.auc:.4f} |")
        lines.append("")
        best = max(rows, key=lambda r: r.f1)
        lines.append(f"Best F1 {best.f1:.4f}: {best.selector} top-{best.k} "
                     f"with {best.classifier}.")
        lines.append("")
        series = write_series_files(rows, out_dir / "series")
        lines.append(f"Per-k series data: {len(series)} files under "
                     f"`series/`.")
        lines.append("")
        out = out_dir / "report.md"
        out.write_text("\n".join(lines))
    _record_stage(cfg, "report", cfg.seed, t.seconds, [out] + series)
    return out


def synth_stage(cfg: RunConfig, n: int) -> Path:
    """Sample records from the trained generator, mapped to raw units."""
    if n < 1:
        raise ConfigError("need n >= 1 synthetic records")
    out_dir = Path(cfg.out_dir)
    model_path = _require(out_dir / "gan.json", "train-gan")
    train_path = _require(out_dir / "train.csv", "preprocess")
    seed = stage_seed(cfg.seed, "synth")
    with time_block() as t:
        train = data.load_dataset(train_path)
        model = load_gan(model_path)
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((n, model.latent_dim))
        fake = forward(model.generator, z)
        if fake.shape[1] != train.n_features:
            raise RuntimeError(
                f"generator emits {fake.shape[1]} features but the train "
                f"set has {train.n_features}; artifacts are mismatched")
        if train.scaler is not None:
            mins, maxs = train.scaler[:, 0], train.scaler[:, 1]
            fake = mins + fake * (maxs - mins)
        ds = data.FlowDataset(features=fake,
                              feature_names=train.feature_names,
                              labels=np.ones(n, dtype=np.int64))
        out = out_dir / "synthetic.csv"
        data.save_dataset(ds, out, extra={"seed": seed, "generated": True})
    _record_stage(cfg, "synth", seed, t.seconds, [out, data.meta_path(out)])
    return out
