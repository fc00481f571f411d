"""ADAM training on mean-squared error, and finite-difference gradient checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from vchest.neural.lstm import LstmParams, seq_loss_grad
from vchest.neural.mlp import MlpParams, mlp_loss_grad

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    """Training recipe; defaults are the reference LSTM recipe.

    ``batch_size`` counts sequences (frames) for recurrent models and
    samples for MLPs.  ``n_frames`` is 320 so that 320 frames of 50 symbols
    give the 16000 training samples.
    """

    epochs: int = 500
    batch_size: int = 128
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    loss: str = "mse"
    snr_db: float = 40.0
    n_frames: int = 320
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.n_frames < 0:
            raise ValueError("epochs, batch_size and n_frames must be positive counts")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")
        if self.loss != "mse":
            raise ValueError("only the MSE loss is supported")


@dataclass
class Dataset:
    """Inputs/targets; 3-D ``(N, T, D)`` for sequences, 2-D for MLP samples."""

    inputs: np.ndarray
    targets: np.ndarray
    kind: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.inputs.shape[0]

    def save(self, path):
        np.savez(path, inputs=self.inputs, targets=self.targets, kind=np.array(self.kind))

    @classmethod
    def load(cls, path) -> "Dataset":
        with np.load(path) as z:
            return cls(z["inputs"], z["targets"], str(z["kind"]))


def loss_and_grad(model, X, Y):
    if isinstance(model, LstmParams):
        return seq_loss_grad(model, X, Y)
    if isinstance(model, MlpParams):
        return mlp_loss_grad(model, X, Y)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def evaluate_loss(model, X, Y) -> float:
    return loss_and_grad(model, X, Y)[0]


class Adam:
    def __init__(self, params: list, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


def train(model, dataset: Dataset, cfg: TrainConfig, callback=None):
    """Mini-batch ADAM on MSE.  Returns ``(trained_copy, per_epoch_loss)``.

    The reported loss of an epoch is the sample-weighted mean of its
    mini-batch losses.  ``callback(epoch, loss)`` is called after each epoch.
    """
    model = model.copy()
    X, Y = dataset.inputs, dataset.targets
    n = X.shape[0]
    if n == 0:
        raise TrainingError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(model.arrays(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = loss_and_grad(model, X[idx], Y[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss {loss} at epoch {epoch + 1}, "
                                    f"batch starting at {start}")
            opt.step(grads)
            total += loss * idx.size
        history.append(total / n)
        if callback is not None:
            callback(epoch, history[-1])
        log.debug("epoch %d loss %.6g", epoch + 1, history[-1])
    return model, history


@dataclass
class GradCheckReport:
    max_rel_error: float
    n_checked: int
    worst: tuple  # (array index, flat index)

    def ok(self, tol: float) -> bool:
        return self.max_rel_error < tol


def grad_check(model, X, Y, n_params: int = 40, step: float = 1e-6, rng=None,
               floor: float = 1e-6) -> GradCheckReport:
    """Compare analytic gradients with central differences on a random subset.

    The relative error of one entry is ``|a - n| / max(|a|, |n|, floor)``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    model = model.copy()
    arrays = model.arrays()
    _, grads = loss_and_grad(model, X, Y)
    sizes = np.array([a.size for a in arrays])
    picks = rng.choice(sizes.sum(), size=min(n_params, sizes.sum()), replace=False)
    bounds = np.cumsum(sizes)
    worst, worst_at = 0.0, (-1, -1)
    for p in picks:
        k = int(np.searchsorted(bounds, p, side="right"))
        j = int(p - (bounds[k - 1] if k else 0))
        flat = arrays[k].reshape(-1)
        old = flat[j]
        flat[j] = old + step
        lp = evaluate_loss(model, X, Y)
        flat[j] = old - step
        lm = evaluate_loss(model, X, Y)
        flat[j] = old
        num = (lp - lm) / (2 * step)
        ana = grads[k].reshape(-1)[j]
        rel = abs(ana - num) / max(abs(ana), abs(num), floor)
        if rel > worst:
            worst, worst_at = rel, (k, j)
    return GradCheckReport(float(worst), int(picks.size), worst_at)
