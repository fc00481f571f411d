"""Classical LSTM unit (forget, input, candidate, output gates) with an MLP head.

Gates are stacked along the first axis in the order ``f, i, c, o``.  All
functions accept a leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vchest.neural.mlp import (MlpParams, init_mlp, mlp_backward, mlp_forward,
                               mlp_forward_cache)

GATES = ("f", "i", "c", "o")


@dataclass
class LstmParams:
    W: np.ndarray  # (4, P, K_in) input weights
    U: np.ndarray  # (4, P, P) recurrent weights
    b: np.ndarray  # (4, P)
    head: MlpParams  # readout from the hidden state

    def __post_init__(self):
        P = self.b.shape[1]
        if self.W.shape[:2] != (4, P) or self.U.shape != (4, P, P) or self.b.shape != (4, P):
            raise ValueError(f"inconsistent gate shapes {self.W.shape}, {self.U.shape}, "
                             f"{self.b.shape}")
        if self.head.in_dim != P:
            raise ValueError(f"head input {self.head.in_dim} != hidden size {P}")

    @property
    def hidden(self) -> int:
        return self.b.shape[1]

    @property
    def in_dim(self) -> int:
        return self.W.shape[2]

    @property
    def out_dim(self) -> int:
        return self.head.out_dim

    def arrays(self) -> list:
        return [self.W, self.U, self.b, *self.head.arrays()]

    def copy(self) -> "LstmParams":
        return LstmParams(self.W.copy(), self.U.copy(), self.b.copy(), self.head.copy())


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden: int, batch=()) -> "LstmState":
        shape = (*batch, hidden)
        return cls(np.zeros(shape), np.zeros(shape))


def init_lstm(in_dim: int, hidden: int, out_dim: int, rng, head_hidden=(),
              forget_bias: float = 1.0) -> LstmParams:
    """Uniform(+-1/sqrt(P)) gate weights; the head is an MLP ``P -> ... -> out_dim``."""
    k = 1.0 / np.sqrt(hidden)
    W = rng.uniform(-k, k, (4, hidden, in_dim))
    U = rng.uniform(-k, k, (4, hidden, hidden))
    b = np.zeros((4, hidden))
    b[0] = forget_bias
    head = init_mlp([hidden, *head_hidden, out_dim], rng)
    return LstmParams(W, U, b, head)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _gates(x, h, params: LstmParams):
    P = params.hidden
    z = x @ params.W.reshape(4 * P, -1).T + h @ params.U.reshape(4 * P, P).T \
        + params.b.reshape(-1)
    z = z.reshape(*z.shape[:-1], 4, P)
    f = sigmoid(z[..., 0, :])
    i = sigmoid(z[..., 1, :])
    g = np.tanh(z[..., 2, :])
    o = sigmoid(z[..., 3, :])
    return f, i, g, o


def lstm_cell(x, state: LstmState, params: LstmParams):
    """One time step; returns ``(h_t, new_state)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.in_dim:
        raise ValueError(f"input width {x.shape[-1]} != {params.in_dim}")
    if state.h.shape[-1] != params.hidden or state.c.shape[-1] != params.hidden:
        raise ValueError("state width does not match the hidden size")
    f, i, g, o = _gates(x, state.h, params)
    c = f * state.c + i * g
    h = o * np.tanh(c)
    return h, LstmState(h, c)


def lstm_step(x, state: LstmState, params: LstmParams):
    """Cell plus readout; returns ``(output, new_state)``."""
    h, state = lstm_cell(x, state, params)
    return mlp_forward(h, params.head), state


def lstm_forward_seq(inputs, params: LstmParams) -> np.ndarray:
    """Run a sequence from the zero state.

    ``inputs`` is ``(T, K_in)`` or ``(N, T, K_in)``; outputs have the same
    leading shape with ``out_dim`` columns.
    """
    x = np.asarray(inputs, dtype=float)
    if x.ndim < 2 or x.shape[-2] == 0:
        raise ValueError("need a non-empty sequence")
    if x.shape[-1] != params.in_dim:
        raise ValueError(f"input width {x.shape[-1]} != {params.in_dim}")
    state = LstmState.zeros(params.hidden, x.shape[:-2])
    hs = []
    for t in range(x.shape[-2]):
        h, state = lstm_cell(x[..., t, :], state, params)
        hs.append(h)
    return mlp_forward(np.stack(hs, axis=-2), params.head)


def seq_loss_grad(params: LstmParams, X, Y):
    """MSE over all outputs of a batch of sequences, with full BPTT gradients.

    ``X`` is ``(N, T, K_in)``, ``Y`` is ``(N, T, out_dim)``.  Gradients are
    aligned with ``params.arrays()``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    N, T, _ = X.shape
    P = params.hidden
    Wf = params.W.reshape(4 * P, -1)
    Uf = params.U.reshape(4 * P, P)

    h = np.zeros((N, P))
    c = np.zeros((N, P))
    hs = np.empty((T + 1, N, P))
    cs = np.empty((T + 1, N, P))
    hs[0] = h
    cs[0] = c
    acts = np.empty((T, 4, N, P))
    for t in range(T):
        f, i, g, o = _gates(X[:, t], h, params)
        c = f * c + i * g
        h = o * np.tanh(c)
        acts[t] = (f, i, g, o)
        hs[t + 1] = h
        cs[t + 1] = c

    H = hs[1:].transpose(1, 0, 2).reshape(N * T, P)
    out, cache = mlp_forward_cache(H, params.head)
    err = out - Y.reshape(N * T, -1)
    loss = float(np.mean(err ** 2))
    head_grads, dH = mlp_backward(2.0 * err / err.size, cache, params.head)
    dH = dH.reshape(N, T, P)

    dW = np.zeros_like(Wf)
    dU = np.zeros_like(Uf)
    db = np.zeros(4 * P)
    dh_next = np.zeros((N, P))
    dc_next = np.zeros((N, P))
    dz = np.empty((N, 4, P))
    for t in range(T - 1, -1, -1):
        f, i, g, o = acts[t]
        tc = np.tanh(cs[t + 1])
        dh = dH[:, t] + dh_next
        dc = dh * o * (1.0 - tc ** 2) + dc_next
        dz[:, 0] = dc * cs[t] * f * (1.0 - f)
        dz[:, 1] = dc * g * i * (1.0 - i)
        dz[:, 2] = dc * i * (1.0 - g ** 2)
        dz[:, 3] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dzf = dz.reshape(N, 4 * P)
        dW += dzf.T @ X[:, t]
        dU += dzf.T @ hs[t]
        db += dzf.sum(axis=0)
        dh_next = dzf @ Uf
    grads = [dW.reshape(params.W.shape), dU.reshape(params.U.shape), db.reshape(4, P),
             *head_grads]
    return loss, grads
