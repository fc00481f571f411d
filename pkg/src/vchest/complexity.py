"""Real-valued operation counts per received OFDM symbol.

Counts split into multiplications/divisions and summations/subtractions.
The LSTM and DPA/TA itemisation is the standard per-gate breakdown; a fully
connected layer ``N_{l-1} -> N_l`` costs ``N_{l-1} N_l`` of each kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

# Fixed configuration of the LSTM-DNN-DPA reference: P = 128, one 40-neuron layer.
LSTM_DNN_DPA_HIDDEN = 128
LSTM_DNN_DPA_DNN = 40


@dataclass(frozen=True)
class OpCount:
    mul_div: int
    add_sub: int

    def __post_init__(self):
        if self.mul_div < 0 or self.add_sub < 0:
            raise ValueError("operation counts are non-negative")

    def __add__(self, other: "OpCount") -> "OpCount":
        return OpCount(self.mul_div + other.mul_div, self.add_sub + other.add_sub)

    @property
    def total(self) -> int:
        return self.mul_div + self.add_sub


def dnn_ops(sizes) -> OpCount:
    sizes = list(sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output layer sizes")
    s = sum(a * b for a, b in zip(sizes[:-1], sizes[1:]))
    return OpCount(s, s)


def lstm_gate_ops(P: int, K_in: int) -> OpCount:
    """One gate: ``P^2 + P K_in`` multiplications, ``3P + K_in - 2`` summations."""
    return OpCount(P * P + P * K_in, 3 * P + K_in - 2)


def lstm_ops(P: int, K_in: int) -> OpCount:
    if P < 1 or K_in < 1:
        raise ValueError("P and K_in must be >= 1")
    gate = lstm_gate_ops(P, K_in)
    # Cell and hidden-state updates add 3P multiplications and P summations.
    return OpCount(4 * gate.mul_div + 3 * P, 4 * gate.add_sub + P)


def lstm_ops_total(P: int, K_in: int) -> int:
    """Single-number LSTM cost ``4(P^2 + P K_in + 3P + K_in - 2) + 4P``."""
    return 4 * (P * P + P * K_in + 3 * P + K_in - 2) + 4 * P


def dpa_ops(K_d: int) -> OpCount:
    return OpCount(18 * K_d, 8 * K_d)


def ta_ops(K_on: int) -> OpCount:
    return OpCount(2 * K_on, 2 * K_on)


def estimator_total(kind: str, P: int = 128, K_in: int | None = None, K_on: int = 52,
                    K_d: int = 48) -> OpCount:
    """Closed-form per-symbol totals of the two LSTM estimators."""
    if kind == "LSTM-DNN-DPA":
        K_in = 112 if K_in is None else K_in
        if P != LSTM_DNN_DPA_HIDDEN:
            raise ValueError("the LSTM-DNN-DPA total is only defined for P = 128")
        return OpCount(512 * K_in + 98 * K_d + 71040, 4 * K_in + 88 * K_d + 6776)
    if kind == "LSTM-DPA-TA":
        if K_in is not None and K_in != 2 * K_on:
            raise ValueError("LSTM-DPA-TA uses K_in = 2 K_on")
        return OpCount(4 * P * P + P * (8 * K_on + 3) + 18 * K_d + 2 * K_on,
                       13 * P + 10 * K_on + 8 * K_d - 8)
    raise ValueError(f"no operation count for {kind!r}")


def itemised_total(kind: str, P: int = 128, K_in: int | None = None, K_on: int = 52,
                   K_d: int = 48) -> OpCount:
    """The same totals rebuilt from LSTM, DNN, DPA and TA components."""
    if kind == "LSTM-DNN-DPA":
        K_in = 112 if K_in is None else K_in
        return (lstm_ops(P, K_in) + dnn_ops([P, LSTM_DNN_DPA_DNN, 2 * K_d]) + dpa_ops(K_d))
    if kind == "LSTM-DPA-TA":
        return lstm_ops(P, 2 * K_on) + dpa_ops(K_d) + ta_ops(K_on)
    raise ValueError(f"no operation count for {kind!r}")


def readout_inclusive_total(P: int, K_on: int = 52, K_d: int = 48) -> OpCount:
    """LSTM-DPA-TA including the affine ``P -> 2 K_d`` readout layer."""
    return estimator_total("LSTM-DPA-TA", P, K_on=K_on, K_d=K_d) + dnn_ops([P, 2 * K_d])


def _reduction_pct(new: int, ref: int) -> float:
    # Exact ratio truncated (not rounded) to two decimals.
    return math.floor((1 - Fraction(new, ref)) * 10000) / 100


def reduction_report(K_on: int = 52, K_d: int = 48) -> dict:
    """Percentage reductions of LSTM-DPA-TA (P = 128, 64) against LSTM-DNN-DPA."""
    ref = estimator_total("LSTM-DNN-DPA", K_d=K_d)
    out = {}
    for P in (128, 64):
        t = estimator_total("LSTM-DPA-TA", P, K_on=K_on, K_d=K_d)
        out[P] = (_reduction_pct(t.mul_div, ref.mul_div), _reduction_pct(t.add_sub, ref.add_sub))
    return out


def figure_rows(K_on: int = 52, K_d: int = 48):
    """``(label, mul_div, add_sub)`` rows of the complexity bar chart."""
    rows = [("LSTM-DNN-DPA", estimator_total("LSTM-DNN-DPA", K_d=K_d))]
    for P in (128, 64):
        rows.append((f"LSTM-DPA-TA (P={P})", estimator_total("LSTM-DPA-TA", P, K_on=K_on, K_d=K_d)))
    return [(label, c.mul_div, c.add_sub) for label, c in rows]
