"""Fully connected networks with per-layer activations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "linear", "tanh")


@dataclass
class MlpParams:
    """Layer ``l`` maps ``N_l -> N_{l+1}``: ``weights[l]`` is ``(N_{l+1}, N_l)``."""

    weights: list
    biases: list
    activations: list

    def __post_init__(self):
        if not self.weights:
            raise ValueError("an MLP needs at least one layer")
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("weights, biases and activations must have equal length")
        for l, (w, b, a) in enumerate(zip(self.weights, self.biases, self.activations)):
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {l}: bad weight/bias shapes {w.shape}, {b.shape}")
            if l and w.shape[1] != self.weights[l - 1].shape[0]:
                raise ValueError(f"layer {l}: input width {w.shape[1]} does not chain")

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def arrays(self) -> list:
        return [*self.weights, *self.biases]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                         list(self.activations))


def init_mlp(sizes, rng, hidden_activation: str = "relu") -> MlpParams:
    """He/Glorot-uniform initialisation; the output layer is linear."""
    sizes = list(sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output sizes")
    weights, biases, acts = [], [], []
    for l, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        last = l == len(sizes) - 2
        if not last and hidden_activation == "relu":
            limit = np.sqrt(6.0 / max(n_in, 1))
        else:
            limit = np.sqrt(6.0 / max(n_in + n_out, 1))
        weights.append(rng.uniform(-limit, limit, (n_out, n_in)))
        biases.append(np.zeros(n_out))
        acts.append("linear" if last else hidden_activation)
    return MlpParams(weights, biases, acts)


def _act(a, z):
    if a == "relu":
        return np.maximum(z, 0.0)
    if a == "tanh":
        return np.tanh(z)
    return z


def _act_grad(a, z, out):
    if a == "relu":
        return (z > 0).astype(z.dtype)
    if a == "tanh":
        return 1.0 - out ** 2
    return np.ones_like(z)


def mlp_forward(x, params: MlpParams) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.in_dim:
        raise ValueError(f"input width {x.shape[-1]} != {params.in_dim}")
    for w, b, a in zip(params.weights, params.biases, params.activations):
        x = _act(a, x @ w.T + b)
    return x


def mlp_forward_cache(x, params: MlpParams):
    """Forward on a 2-D batch keeping what the backward pass needs."""
    if x.shape[-1] != params.in_dim:
        raise ValueError(f"input width {x.shape[-1]} != {params.in_dim}")
    inputs, pre, outs = [], [], []
    for w, b, a in zip(params.weights, params.biases, params.activations):
        inputs.append(x)
        z = x @ w.T + b
        x = _act(a, z)
        pre.append(z)
        outs.append(x)
    return x, (inputs, pre, outs)


def mlp_backward(dout, cache, params: MlpParams):
    """Return ``(grads, dx)``; ``grads`` is aligned with ``params.arrays()``."""
    inputs, pre, outs = cache
    n = len(params.weights)
    dw, db = [None] * n, [None] * n
    d = dout
    for l in range(n - 1, -1, -1):
        d = d * _act_grad(params.activations[l], pre[l], outs[l])
        dw[l] = d.T @ inputs[l]
        db[l] = d.sum(axis=0)
        d = d @ params.weights[l]
    return [*dw, *db], d


def mlp_loss_grad(params: MlpParams, x, y):
    """Mean-squared error over all output entries, and its gradient."""
    out, cache = mlp_forward_cache(x, params)
    err = out - y
    loss = float(np.mean(err ** 2))
    grads, _ = mlp_backward(2.0 * err / err.size, cache, params)
    return loss, grads
