"""Per-frame channel estimators for 802.11p.

All estimators start from the preamble LS estimate and then track the
channel symbol by symbol.  Vectors are laid out over Kon in frequency order
(see :class:`vchest.frame.FrameLayout`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from vchest.frame import QPSK, Constellation, FrameGrid, FrameLayout, demap_nearest
from vchest.neural.lstm import LstmParams, LstmState, lstm_step
from vchest.neural.mlp import MlpParams, mlp_forward
from vchest.spline import natural_cubic

EPS = 1e-12

CONVENTIONAL = ("LS", "DPA", "STA", "TRFI")
LEARNED = ("STA-DNN", "TRFI-DNN", "LSTM-DNN-DPA", "LSTM-DPA-TA")
KINDS = CONVENTIONAL + LEARNED


class MissingModelError(KeyError):
    pass


@dataclass
class EstimateTrace:
    """Estimates for one frame.  Row 0 is the LS preamble estimate, row i the
    estimate for data symbol i."""

    name: str
    h: np.ndarray  # (I + 1, n_on)
    decisions: np.ndarray  # (I + 1, n_on); row 0 holds the preamble
    flags: np.ndarray  # (I + 1, n_on) bool, division guard engaged
    reliable: np.ndarray | None = None  # TRFI RS mask, (I + 1, n_on)
    extra: dict = field(default_factory=dict)

    @property
    def data(self) -> np.ndarray:
        return self.h[1:]

    @property
    def n_flagged(self) -> int:
        return int(self.flags.sum())


@dataclass(frozen=True)
class StaConfig:
    alpha: float = 2.0
    beta: int = 2

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("STA alpha must be >= 1")
        if self.beta < 0:
            raise ValueError("STA beta must be >= 0")


def ls_estimate(y_p1, y_p2, p) -> np.ndarray:
    p = np.asarray(p)
    if np.any(np.abs(p) == 0):
        raise ValueError("preamble has zero entries")
    return (np.asarray(y_p1) + np.asarray(y_p2)) / (2 * p)


def _guard(v, eps=EPS):
    """Clamp magnitudes below ``eps`` up to ``eps`` (phase kept)."""
    mag = np.abs(v)
    small = mag < eps
    if not small.any():
        return v, small
    phase = np.where(mag > 0, v / np.where(mag > 0, mag, 1), 1.0)
    return np.where(small, eps * phase, v), small


def dpa_step(y, h_prev, c: Constellation, layout: FrameLayout, pilots=None, decisions=None,
             eps=EPS):
    """Demap ``y / h_prev`` and reuse the decisions as pilots.

    Returns ``(d, h, flags)``.  ``decisions`` overrides the data-subcarrier
    decisions (genie mode).  Works on a trailing Kon axis.
    """
    y = np.asarray(y)
    pilots = np.ones(layout.n_pilot) if pilots is None else pilots
    div, flag_h = _guard(np.asarray(h_prev), eps)
    d = np.empty(np.broadcast_shapes(y.shape, div.shape), dtype=complex)
    if decisions is None:
        d[..., layout.data_pos] = demap_nearest(y[..., layout.data_pos] / div[..., layout.data_pos], c)
    else:
        d[..., layout.data_pos] = np.asarray(decisions)[..., layout.data_pos]
    d[..., layout.pilot_pos] = pilots
    d_safe, flag_d = _guard(d, eps)
    return d, y / d_safe, flag_h | flag_d


def freq_average(h, beta: int) -> np.ndarray:
    """Moving average over ``2*beta + 1`` neighbours along the last axis.

    Near the band edges the window is cut to the available subcarriers and
    the weights are renormalised.
    """
    h = np.asarray(h)
    if beta == 0:
        return h.copy()
    n = h.shape[-1]
    csum = np.concatenate([np.zeros(h.shape[:-1] + (1,), h.dtype), np.cumsum(h, axis=-1)], axis=-1)
    k = np.arange(n)
    lo = np.clip(k - beta, 0, n)
    hi = np.clip(k + beta + 1, 0, n)
    return (csum[..., hi] - csum[..., lo]) / (hi - lo)


def sta_step(h_dpa, h_sta_prev, cfg: StaConfig) -> np.ndarray:
    fd = freq_average(h_dpa, cfg.beta)
    return (1 - 1 / cfg.alpha) * np.asarray(h_sta_prev) + fd / cfg.alpha


def trfi_estimate(y_prev, h_trfi_prev, h_dpa, c: Constellation, layout: FrameLayout,
                  pilots=None):
    """Reliability split and cubic interpolation.  Returns ``(h, rs_mask)``.

    Subcarriers where demapping ``y_prev`` with the current DPA estimate and
    with the previous TRFI estimate agree are reliable and keep the DPA
    value; the rest are interpolated with a natural cubic spline over the
    reliable ones.  With fewer than four reliable subcarriers the DPA
    estimate is returned unchanged.
    """
    h_dpa = np.asarray(h_dpa)
    d1, _, _ = dpa_step(y_prev, h_dpa, c, layout, pilots)
    d2, _, _ = dpa_step(y_prev, h_trfi_prev, c, layout, pilots)
    rs = d1 == d2
    if rs.all() or rs.sum() < 4:
        return h_dpa.copy(), rs
    f = layout.freq
    out = h_dpa.copy()
    out[~rs] = natural_cubic(f[rs], h_dpa[rs], f[~rs], extrapolate="clamp")
    return out, rs


def ta_step(h_ta_prev, h_new, alpha: float = 2.0) -> np.ndarray:
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    return (1 - 1 / alpha) * np.asarray(h_ta_prev) + np.asarray(h_new) / alpha


def ta_noise_ratio(q: int) -> Fraction:
    """Closed-form AWGN power ratio after ``q - 1`` averaging steps (alpha = 2)."""
    if q < 1:
        raise ValueError("q must be >= 1")
    p = Fraction(4) ** (q - 1)
    return (p + 2) / (3 * p)


def ta_noise_ratio_recursive(q: int) -> Fraction:
    if q < 1:
        raise ValueError("q must be >= 1")
    r = Fraction(1)
    for _ in range(q - 1):
        r = r / 4 + Fraction(1, 4)
    return r


def ta_noise_experiment(n_samples: int, snr_db: float, n_symbols: int, rng, alpha: float = 2.0,
                        init: str = "single") -> np.ndarray:
    """Monte-Carlo noise power of genie-decision DPA followed by TA.

    Flat unit channel, QPSK data, AWGN.  Returns ``ratio[q - 1]`` = measured
    estimate noise power / sigma^2 for ``q = 1 .. n_symbols + 1``, where
    ``q = 1`` is the initial estimate.  ``init="single"`` starts from one
    preamble observation (noise sigma^2); ``"ls"`` from the two-preamble
    average.
    """
    layout = FrameLayout(symbols_per_frame=1)
    rows = -(-n_samples // layout.n_on)
    var = 10.0 ** (-snr_db / 10.0)

    def noise(shape):
        return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    shape = (rows, layout.n_on)
    p = layout.preamble()
    if init == "single":
        est = (p + noise(shape)) / p
    elif init == "ls":
        est = ls_estimate(p + noise(shape), p + noise(shape), p)
    else:
        raise ValueError(f"unknown init {init!r}")
    powers = [np.mean(np.abs(est - 1) ** 2)]
    for _ in range(n_symbols):
        x = QPSK.points[rng.integers(0, 4, shape)]
        x[:, layout.pilot_pos] = 1.0
        y = x + noise(shape)
        _, h_dpa, _ = dpa_step(y, est, QPSK, layout, decisions=x)
        est = ta_step(est, h_dpa, alpha)
        powers.append(np.mean(np.abs(est - 1) ** 2))
    return np.array(powers) / var


# ---------------------------------------------------------------------------
# Learned-model plumbing

def to_real(z) -> np.ndarray:
    z = np.asarray(z)
    return np.concatenate([z.real, z.imag], axis=-1)


def to_complex(v) -> np.ndarray:
    v = np.asarray(v)
    n = v.shape[-1] // 2
    return v[..., :n] + 1j * v[..., n:]


def pilot_ls(y, layout: FrameLayout, pilots=None) -> np.ndarray:
    pilots = np.ones(layout.n_pilot) if pilots is None else pilots
    return np.asarray(y)[..., layout.pilot_pos] / pilots


def lstm_ta_input(prev, y, layout: FrameLayout, pilots=None) -> np.ndarray:
    """Real-stacked ``2*Kon`` input: ``prev`` on Kd, current pilot LS on Kp."""
    prev = np.asarray(prev)
    x = np.empty(np.broadcast_shapes(prev.shape[:-1], np.shape(y)[:-1]) + (layout.n_on,),
                 dtype=complex)
    x[..., layout.data_pos] = prev[..., layout.data_pos]
    x[..., layout.pilot_pos] = pilot_ls(y, layout, pilots)
    return to_real(x)


def lstm_dnn_input(prev, y, layout: FrameLayout, pilots=None) -> np.ndarray:
    """Real-stacked ``2*Kon + 2*Kp`` input: full previous estimate plus pilot LS."""
    return np.concatenate([to_real(prev), to_real(pilot_ls(y, layout, pilots))], axis=-1)


def merge_pilots(h_data, y, layout: FrameLayout, pilots=None) -> np.ndarray:
    h = np.empty(np.shape(h_data)[:-1] + (layout.n_on,), dtype=complex)
    h[..., layout.data_pos] = h_data
    h[..., layout.pilot_pos] = pilot_ls(y, layout, pilots)
    return h


def _new_trace(name, grid: FrameGrid, layout: FrameLayout, reliable=False):
    n = layout.I + 1
    h = np.empty((n, layout.n_on), dtype=complex)
    d = np.empty((n, layout.n_on), dtype=complex)
    h[0] = ls_estimate(grid.preamble_rx[0], grid.preamble_rx[1], grid.preamble)
    d[0] = grid.preamble
    flags = np.zeros((n, layout.n_on), dtype=bool)
    rs = np.ones((n, layout.n_on), dtype=bool) if reliable else None
    return EstimateTrace(name, h, d, flags, rs)


def run_lstm_dpa_ta(grid: FrameGrid, model: LstmParams, c: Constellation, layout: FrameLayout,
                    alpha: float = 2.0, feedback: str = "ta", name: str = "LSTM-DPA-TA"
                    ) -> EstimateTrace:
    """Closed-loop LSTM prediction, DPA on the prediction, then TA.

    ``feedback="ta"`` feeds the previous TA output back into the LSTM;
    ``"lstm"`` feeds back the previous raw LSTM prediction instead.
    """
    if model.in_dim != 2 * layout.n_on or model.out_dim != 2 * layout.n_data:
        raise ValueError(f"model maps {model.in_dim} -> {model.out_dim}, expected "
                         f"{2 * layout.n_on} -> {2 * layout.n_data}")
    if feedback not in ("ta", "lstm"):
        raise ValueError(f"unknown feedback mode {feedback!r}")
    tr = _new_trace(name, grid, layout)
    ta = tr.h[0]
    lstm_prev = tr.h[0]
    state = LstmState.zeros(model.hidden)
    lstm_out = np.empty((layout.I + 1, layout.n_on), dtype=complex)
    lstm_out[0] = tr.h[0]
    for i in range(1, layout.I + 1):
        y = grid.data_rx[i - 1]
        prev = ta if feedback == "ta" else lstm_prev
        out, state = lstm_step(lstm_ta_input(prev, y, layout, grid.pilot_values), state, model)
        pred = merge_pilots(to_complex(out), y, layout, grid.pilot_values)
        d, h_dpa, flags = dpa_step(y, pred, c, layout, grid.pilot_values)
        ta = ta_step(ta, h_dpa, alpha)
        tr.h[i], tr.decisions[i], tr.flags[i] = ta, d, flags
        lstm_prev = lstm_out[i] = pred
    tr.extra["lstm"] = lstm_out
    return tr


def _run_lstm_dnn_dpa(grid, model: LstmParams, c, layout, name="LSTM-DNN-DPA"):
    if model.in_dim != 2 * (layout.n_on + layout.n_pilot) or model.out_dim != 2 * layout.n_data:
        raise ValueError(f"model maps {model.in_dim} -> {model.out_dim}, expected "
                         f"{2 * (layout.n_on + layout.n_pilot)} -> {2 * layout.n_data}")
    tr = _new_trace(name, grid, layout)
    state = LstmState.zeros(model.hidden)
    prev = tr.h[0]
    for i in range(1, layout.I + 1):
        y = grid.data_rx[i - 1]
        out, state = lstm_step(lstm_dnn_input(prev, y, layout, grid.pilot_values), state, model)
        pred = merge_pilots(to_complex(out), y, layout, grid.pilot_values)
        tr.decisions[i], tr.h[i], tr.flags[i] = dpa_step(y, pred, c, layout, grid.pilot_values)
        prev = tr.h[i]
    return tr


def _correct(model: MlpParams | None, h):
    if model is None:
        return h
    return to_complex(mlp_forward(to_real(h), model))


def run_baseline(grid: FrameGrid, kind: str, c: Constellation, layout: FrameLayout,
                 models: dict | None = None, sta: StaConfig = StaConfig(),
                 alpha: float = 2.0) -> EstimateTrace:
    """Run one of the reference estimators over a received frame.

    ``models`` maps kind names to trained parameters for the learned kinds.
    STA-DNN and TRFI-DNN feed the corrected estimate back as the recursion
    state for the next symbol.
    """
    models = models or {}
    if kind not in KINDS:
        raise ValueError(f"unknown estimator {kind!r}; choose from {', '.join(KINDS)}")
    if kind in LEARNED and kind not in models:
        raise MissingModelError(f"estimator {kind} needs a trained model")
    if kind == "LSTM-DPA-TA":
        return run_lstm_dpa_ta(grid, models[kind], c, layout, alpha)
    if kind == "LSTM-DNN-DPA":
        return _run_lstm_dnn_dpa(grid, models[kind], c, layout)

    pilots = grid.pilot_values
    base = kind.removesuffix("-DNN")
    dnn = models.get(kind) if kind.endswith("-DNN") else None
    tr = _new_trace(kind, grid, layout, reliable=(base == "TRFI"))
    if base == "LS":
        tr.h[1:] = tr.h[0]
        for i in range(1, layout.I + 1):
            tr.decisions[i], _, tr.flags[i] = dpa_step(grid.data_rx[i - 1], tr.h[0], c, layout,
                                                       pilots)
        return tr
    prev = tr.h[0]
    for i in range(1, layout.I + 1):
        y = grid.data_rx[i - 1]
        d, h_dpa, flags = dpa_step(y, prev, c, layout, pilots)
        if base == "DPA":
            h = h_dpa
        elif base == "STA":
            h = sta_step(h_dpa, prev, sta)
        else:
            if i == 1:
                h = h_dpa
            else:
                h, tr.reliable[i] = trfi_estimate(grid.data_rx[i - 2], prev, h_dpa, c, layout,
                                                  pilots)
        h = _correct(dnn, h)
        tr.h[i], tr.decisions[i], tr.flags[i] = h, d, flags
        prev = h
    return tr


def estimate(grid: FrameGrid, kind: str, c: Constellation, layout: FrameLayout,
             models: dict | None = None, sta: StaConfig = StaConfig(), alpha: float = 2.0,
             truth=None) -> EstimateTrace:
    """Dispatch by name; ``"genie"`` returns the true CFR (needs ``truth``)."""
    if kind == "genie":
        if truth is None:
            raise ValueError("the genie estimator needs the true channel")
        tr = _new_trace("genie", grid, layout)
        tr.h[1:] = truth.data_cfr
        tr.decisions[1:] = grid.data_tx
        return tr
    return run_baseline(grid, kind, c, layout, models, sta, alpha)


def trace_rows(trace: EstimateTrace, truth, layout: FrameLayout):
    """CSV rows ``(symbol, subcarrier, est_re, est_im, true_re, true_im, estimator)``.

    Symbol 0 is the preamble LS estimate compared against the mean of the two
    preamble channel snapshots.
    """
    ref = np.vstack([truth.preamble_cfr.mean(axis=0), truth.data_cfr])
    for i in range(trace.h.shape[0]):
        for n, k in enumerate(layout.kon):
            e, t = trace.h[i, n], ref[i, n]
            yield (i, int(k), repr(float(e.real)), repr(float(e.imag)), repr(float(t.real)),
                   repr(float(t.imag)), trace.name)


TRACE_HEADER = ("symbol", "subcarrier", "est_re", "est_im", "true_re", "true_im", "estimator_name")
