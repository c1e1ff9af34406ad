"""Adversarial training of a generator/discriminator pair on attack flows.

The generator maps standard-normal noise to synthetic flow records in
[0, 1]; the discriminator scores records as real vs generated. Training
uses one-sided label smoothing (real 0.9, fake 0.1) for the discriminator
and an unsmoothed target of 1 for the generator, with Adam on both sides.
After training only the discriminator is kept for sensitivity scoring;
the generator survives in the checkpoint for record synthesis.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .nets import (
    AdamState, DenseNetwork, adam_init, adam_step, backward,
    backward_from_output, bce_loss, forward, init_network, network_doc,
    network_from_doc,
)

GEN_HIDDEN = (64, 128)
DISC_HIDDEN = (128, 64)


@dataclass
class GanConfig:
    epochs: int = 500
    batch_size: int = 4096
    lr: float = 0.001
    latent_dim: int | None = None  # defaults to the feature count
    real_label: float = 0.9
    fake_label: float = 0.1
    gen_target: float = 1.0
    seed: int = 0


@dataclass
class GanModel:
    generator: DenseNetwork
    discriminator: DenseNetwork
    latent_dim: int
    g_adam: AdamState | None = None
    d_adam: AdamState | None = None


@dataclass
class EpochLog:
    epoch: int
    d_loss_real: float
    d_loss_fake: float
    g_loss: float
    d_accuracy: float


def build_gan(d: int, cfg: GanConfig, rng=None) -> GanModel:
    """Fresh pair: generator latent->64->128->d, discriminator d->128->64->1."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    latent = cfg.latent_dim if cfg.latent_dim is not None else d
    gen = init_network([latent, *GEN_HIDDEN, d],
                       ["relu", "relu", "sigmoid"], rng)
    disc = init_network([d, *DISC_HIDDEN, 1],
                        ["relu", "relu", "sigmoid"], rng)
    model = GanModel(generator=gen, discriminator=disc, latent_dim=latent)
    model.g_adam = adam_init(gen, lr=cfg.lr)
    model.d_adam = adam_init(disc, lr=cfg.lr)
    return model


def sample_noise(rng, n: int, latent_dim: int) -> np.ndarray:
    return rng.standard_normal((n, latent_dim))


def discriminator_step(model: GanModel, real: np.ndarray, z: np.ndarray,
                       cfg: GanConfig):
    """One Adam update of the discriminator on a real plus generated batch.

    Returns (loss_real, loss_fake, accuracy), all measured at the
    pre-update weights. Generated records are detached: the generator
    receives no gradient here.
    """
    fake = forward(model.generator, z)
    x = np.vstack([real, fake])
    t = np.concatenate([np.full(len(real), cfg.real_label),
                        np.full(len(fake), cfg.fake_label)]).reshape(-1, 1)
    p = forward(model.discriminator, x)
    loss_real = bce_loss(p[:len(real)], cfg.real_label)
    loss_fake = bce_loss(p[len(real):], cfg.fake_label)
    correct = np.sum(p[:len(real)] >= 0.5) + np.sum(p[len(real):] < 0.5)
    accuracy = float(correct) / len(x)
    _, grads, _ = backward(model.discriminator, x, t)
    adam_step(model.discriminator, grads, model.d_adam)
    return loss_real, loss_fake, accuracy


def generator_step(model: GanModel, z: np.ndarray, cfg: GanConfig) -> float:
    """One Adam update of the generator through the frozen discriminator.

    The loss is BCE of the discriminator's score on generated records
    against the target 1; discriminator gradients are computed and
    discarded, only its input gradient flows back into the generator.
    """
    fake = forward(model.generator, z)
    target = np.full((len(fake), 1), cfg.gen_target)
    loss, _, input_grad = backward(model.discriminator, fake, target)
    grads, _ = backward_from_output(model.generator, z, input_grad)
    adam_step(model.generator, grads, model.g_adam)
    return loss


def train_gan(x: np.ndarray, cfg: GanConfig, progress=None):
    """Train a fresh pair on normalized records; returns (model, epoch logs).

    One discriminator update then one generator update per minibatch,
    rows reshuffled every epoch. Per-epoch log values are row-weighted
    means over the epoch's batches. ``progress`` is called with each
    EpochLog as it is produced.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("training data must be a non-empty 2-d array")
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("training data must be normalized to [0, 1]")
    if cfg.epochs < 0 or cfg.batch_size < 1:
        raise ValueError("epochs must be >= 0 and batch_size >= 1")
    rng = np.random.default_rng(cfg.seed)
    n, d = x.shape
    model = build_gan(d, cfg, rng)
    logs = []
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n)
        sums = np.zeros(4)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            real = x[idx]
            z_d = sample_noise(rng, len(idx), model.latent_dim)
            lr_, lf_, acc = discriminator_step(model, real, z_d, cfg)
            z_g = sample_noise(rng, len(idx), model.latent_dim)
            gl = generator_step(model, z_g, cfg)
            sums += len(idx) * np.array([lr_, lf_, gl, acc])
        log = EpochLog(epoch, *(float(v) for v in sums / n))
        logs.append(log)
        if progress is not None:
            progress(log)
    return model, logs


def write_training_log(logs, path):
    """CSV log, one row per epoch, floats at full round-trip precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "d_loss_real", "d_loss_fake",
                         "g_loss", "d_accuracy"])
        for l in logs:
            writer.writerow([l.epoch, repr(l.d_loss_real), repr(l.d_loss_fake),
                             repr(l.g_loss), repr(l.d_accuracy)])


def save_gan(model: GanModel, path):
    """One JSON checkpoint holding both networks and their Adam state."""
    doc = {
        "latent_dim": model.latent_dim,
        "generator": network_doc(model.generator, model.g_adam),
        "discriminator": network_doc(model.discriminator, model.d_adam),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_gan(path) -> GanModel:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        gen, g_adam = network_from_doc(doc["generator"])
        disc, d_adam = network_from_doc(doc["discriminator"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: bad model checkpoint ({exc})") from None
    return GanModel(generator=gen, discriminator=disc,
                    latent_dim=doc["latent_dim"], g_adam=g_adam, d_adam=d_adam)
