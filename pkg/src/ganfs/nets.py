"""Small dense-network engine: forward, backprop, Adam, JSON checkpoints.

Everything runs in float64 numpy. Layers are fully connected with relu,
sigmoid or identity activations. The binary cross-entropy output gradient
is fused with the sigmoid derivative for numerical stability, and an
upstream-gradient entry point supports chaining two networks (a generator
updated through a frozen discriminator).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

BCE_CLAMP = 1e-7

ACTIVATIONS = ("relu", "sigmoid", "identity")


@dataclass
class DenseLayer:
    w: np.ndarray  # (fan_in, fan_out)
    b: np.ndarray  # (fan_out,)
    activation: str


@dataclass
class DenseNetwork:
    layers: list

    @property
    def sizes(self):
        return [self.layers[0].w.shape[0]] + [l.w.shape[1] for l in self.layers]

    @property
    def activations(self):
        return [l.activation for l in self.layers]

    def parameter_count(self):
        return sum(l.w.size + l.b.size for l in self.layers)


def init_network(sizes, activations, rng) -> DenseNetwork:
    """Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases."""
    if len(activations) != len(sizes) - 1:
        raise ValueError("need one activation per layer")
    for a in activations:
        if a not in ACTIVATIONS:
            raise ValueError(f"unknown activation '{a}'")
    layers = []
    for fan_in, fan_out, act in zip(sizes, sizes[1:], activations):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append(DenseLayer(w=w, b=np.zeros(fan_out), activation=act))
    return DenseNetwork(layers=layers)


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return sigmoid(z)
    return z


def _activation_grad(z, a, kind):
    """Derivative of the activation, using the cached output where cheap."""
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    if kind == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


def forward(net: DenseNetwork, x: np.ndarray) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    for layer in net.layers:
        a = _activate(a @ layer.w + layer.b, layer.activation)
    return a


def _forward_cache(net, x):
    """Forward pass keeping pre-activations and activations for backprop."""
    a = np.asarray(x, dtype=np.float64)
    zs, acts = [], [a]
    for layer in net.layers:
        z = a @ layer.w + layer.b
        a = _activate(z, layer.activation)
        zs.append(z)
        acts.append(a)
    return zs, acts


def bce_loss(p, t) -> float:
    """Mean binary cross-entropy with predictions clamped away from {0, 1}."""
    p = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    t = np.asarray(t, dtype=np.float64)
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))))


def _chain(net, zs, acts, delta):
    """Backpropagate dL/dz of the last layer; return (grads, input grad)."""
    grads = [None] * len(net.layers)
    for l in range(len(net.layers) - 1, -1, -1):
        grads[l] = (acts[l].T @ delta, delta.sum(axis=0))
        upstream = delta @ net.layers[l].w.T
        if l > 0:
            delta = upstream * _activation_grad(
                zs[l - 1], acts[l], net.layers[l - 1].activation)
    for dw, db in grads:
        if not (np.isfinite(dw).all() and np.isfinite(db).all()):
            raise ValueError("non-finite gradient; aborting instead of "
                             "training on garbage")
    return grads, upstream


def backward(net: DenseNetwork, x, targets):
    """Loss and gradients for BCE on a sigmoid output layer.

    Returns (loss, grads, input_grad) where grads is a per-layer list of
    (dw, db). The output-layer gradient uses the fused sigmoid+BCE form
    dL/dz = (p - t) / n, which stays exact even where the clamped loss
    itself saturates.
    """
    if net.layers[-1].activation != "sigmoid":
        raise ValueError("BCE backward expects a sigmoid output layer")
    zs, acts = _forward_cache(net, x)
    p = acts[-1]
    t = np.asarray(targets, dtype=np.float64).reshape(p.shape)
    loss = bce_loss(p, t)
    delta = (p - t) / p.size
    grads, input_grad = _chain(net, zs, acts, delta)
    return loss, grads, input_grad


def backward_from_output(net: DenseNetwork, x, upstream):
    """Gradients given dL/d(output) from some downstream computation.

    Used to push a loss taken on a frozen downstream network back into
    this one. Returns (grads, input_grad).
    """
    zs, acts = _forward_cache(net, x)
    delta = np.asarray(upstream) * _activation_grad(
        zs[-1], acts[-1], net.layers[-1].activation)
    return _chain(net, zs, acts, delta)


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_init(net: DenseNetwork, lr=0.001, beta1=0.9, beta2=0.999,
              eps=1e-8) -> AdamState:
    zeros = [(np.zeros_like(l.w), np.zeros_like(l.b)) for l in net.layers]
    return AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps, t=0,
                     m=[(mw.copy(), mb.copy()) for mw, mb in zeros], v=zeros)


def adam_step(net: DenseNetwork, grads, state: AdamState):
    """One Adam update with bias correction; mutates net and state."""
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for layer, (dw, db), m, v in zip(net.layers, grads, state.m, state.v):
        for param, g, mom, sec in ((layer.w, dw, m[0], v[0]),
                                   (layer.b, db, m[1], v[1])):
            mom *= state.beta1
            mom += (1.0 - state.beta1) * g
            sec *= state.beta2
            sec += (1.0 - state.beta2) * g * g
            param -= state.lr * (mom / c1) / (np.sqrt(sec / c2) + state.eps)


def network_doc(net: DenseNetwork, adam: AdamState | None = None) -> dict:
    """Self-describing JSON-ready dict; floats survive json exactly."""
    doc = {
        "sizes": net.sizes,
        "activations": net.activations,
        "weights": [l.w.tolist() for l in net.layers],
        "biases": [l.b.tolist() for l in net.layers],
    }
    if adam is not None:
        doc["adam"] = {
            "lr": adam.lr, "beta1": adam.beta1, "beta2": adam.beta2,
            "eps": adam.eps, "t": adam.t,
            "m": [[mw.tolist(), mb.tolist()] for mw, mb in adam.m],
            "v": [[vw.tolist(), vb.tolist()] for vw, vb in adam.v],
        }
    return doc


def network_from_doc(doc: dict):
    """Inverse of network_doc; returns (net, adam_state_or_None)."""
    layers = []
    for w, b, act in zip(doc["weights"], doc["biases"], doc["activations"]):
        layers.append(DenseLayer(w=np.asarray(w, dtype=np.float64),
                                 b=np.asarray(b, dtype=np.float64),
                                 activation=act))
    net = DenseNetwork(layers=layers)
    if net.sizes != doc["sizes"]:
        raise ValueError("weight shapes disagree with declared sizes")
    adam = None
    if "adam" in doc:
        a = doc["adam"]
        adam = AdamState(
            lr=a["lr"], beta1=a["beta1"], beta2=a["beta2"], eps=a["eps"],
            t=a["t"],
            m=[(np.asarray(mw), np.asarray(mb)) for mw, mb in a["m"]],
            v=[(np.asarray(vw), np.asarray(vb)) for vw, vb in a["v"]])
    return net, adam


def save_network(net: DenseNetwork, path, adam: AdamState | None = None):
    with open(path, "w") as fh:
        json.dump(network_doc(net, adam), fh)
        fh.write("\n")


def load_network(path):
    """Returns (net, adam_state_or_None)."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        return network_from_doc(doc)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
