"""IEEE 802.11p frequency-domain frame construction and symbol mapping.

Subcarriers are indexed in centered order: logical subcarrier ``k`` in
``[-32, 31]`` lives at index ``k + 32``.  Every per-symbol vector handled by
the estimators is laid out over the active set ``Kon`` in increasing
frequency, so neighbouring entries are neighbouring subcarriers (the DC null
is skipped).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from vchest import coding

N_SUBCARRIERS = 64

# Long training sequence L_{-26..26} (802.11a/p), DC entry included as 0.
LONG_TRAINING = np.array([
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1,
    0,
    1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
], dtype=float)

PILOT_SUBCARRIERS = (-21, -7, 7, 21)
PILOT_VALUES = np.ones(4, dtype=complex)


@dataclass(frozen=True)
class FrameLayout:
    """Subcarrier index sets for one 802.11p frame.

    ``kon``, ``kd``, ``kp`` and ``kn`` hold centered indices in ``[0, K)``.
    ``data_pos`` and ``pilot_pos`` locate ``Kd`` and ``Kp`` inside a vector
    laid out over ``Kon``.
    """

    symbols_per_frame: int = 50
    K: int = N_SUBCARRIERS
    kon: np.ndarray = field(init=False, repr=False)
    kd: np.ndarray = field(init=False, repr=False)
    kp: np.ndarray = field(init=False, repr=False)
    kn: np.ndarray = field(init=False, repr=False)
    data_pos: np.ndarray = field(init=False, repr=False)
    pilot_pos: np.ndarray = field(init=False, repr=False)
    freq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.symbols_per_frame < 1:
            raise ValueError("symbols_per_frame must be >= 1")
        if self.K != N_SUBCARRIERS:
            raise ValueError("only the 64-subcarrier 802.11p layout is supported")
        half = self.K // 2
        freq = np.array([k for k in range(-26, 27) if k != 0])
        kon = freq + half
        is_pilot = np.isin(freq, PILOT_SUBCARRIERS)
        kn = np.setdiff1d(np.arange(self.K), kon)
        for name, value in (
            ("freq", freq),
            ("kon", kon),
            ("kd", kon[~is_pilot]),
            ("kp", kon[is_pilot]),
            ("kn", kn),
            ("data_pos", np.flatnonzero(~is_pilot)),
            ("pilot_pos", np.flatnonzero(is_pilot)),
        ):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_on(self) -> int:
        return self.kon.size

    @property
    def n_data(self) -> int:
        return self.kd.size

    @property
    def n_pilot(self) -> int:
        return self.kp.size

    @property
    def I(self) -> int:  # noqa: E743 - the frame length is called I everywhere
        return self.symbols_per_frame

    def preamble(self) -> np.ndarray:
        """Long-training values on Kon."""
        return LONG_TRAINING[LONG_TRAINING != 0].astype(complex)


@dataclass(frozen=True)
class Constellation:
    """Gray-coded square QAM with unit average power.

    Points are stored in label order, ``points[n]`` carries the bit pattern
    of the integer ``n`` (MSB first).  The first half of the bits selects the
    in-phase level, the second half the quadrature level; bit 0 maps to the
    positive half-plane.
    """

    order: int
    points: np.ndarray = field(init=False, repr=False)
    labels: np.ndarray = field(init=False, repr=False)
    scale: float = field(init=False)

    def __post_init__(self):
        if self.order not in (4, 16):
            raise ValueError(f"unsupported modulation order {self.order}")
        m = self.bits_per_symbol // 2
        # Per-axis Gray levels for m bits, bit 0 -> positive.
        if m == 1:
            axis = {(0,): 1.0, (1,): -1.0}
        else:
            axis = {(0, 0): 1.0, (0, 1): 3.0, (1, 1): -3.0, (1, 0): -1.0}
        labels = np.array(
            [[(n >> (self.bits_per_symbol - 1 - j)) & 1 for j in range(self.bits_per_symbol)]
             for n in range(self.order)],
            dtype=np.uint8,
        )
        raw = np.array([axis[tuple(b[:m])] + 1j * axis[tuple(b[m:])] for b in labels])
        scale = 1.0 / np.sqrt(np.mean(np.abs(raw) ** 2))
        points = raw * scale
        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scale", float(scale))

    @classmethod
    def from_name(cls, name: str) -> "Constellation":
        key = name.upper().replace("-", "")
        orders = {"QPSK": 4, "4QAM": 4, "16QAM": 16}
        if key not in orders:
            raise ValueError(f"unknown modulation {name!r}")
        return cls(orders[key])

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def name(self) -> str:
        return "QPSK" if self.order == 4 else f"{self.order}QAM"


QPSK = Constellation(4)
QAM16 = Constellation(16)


def qam_map(bits, c: Constellation) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    m = c.bits_per_symbol
    if bits.size % m:
        raise ValueError(f"bit count {bits.size} not divisible by {m}")
    weights = 1 << np.arange(m - 1, -1, -1)
    idx = bits.reshape(-1, m) @ weights
    return c.points[idx]


def nearest_index(z, c: Constellation) -> np.ndarray:
    """Label index of the nearest constellation point (lowest label on ties)."""
    z = np.asarray(z, dtype=complex)
    d = np.abs(z[..., None] - c.points) ** 2
    return np.argmin(d, axis=-1)


def demap_nearest(z, c: Constellation) -> np.ndarray:
    return c.points[nearest_index(z, c)]


def demap_bits(z, c: Constellation) -> np.ndarray:
    """Hard-decision bits, flattened in symbol order."""
    idx = nearest_index(z, c)
    return c.labels[idx.ravel()].ravel()


def soft_demap(z, c: Constellation, weight=1.0) -> np.ndarray:
    """Max-log LLRs, positive meaning bit 0, flattened in symbol order.

    ``weight`` scales each symbol's LLRs, typically ``|h|^2 / sigma^2`` after
    zero-forcing equalization.
    """
    z = np.asarray(z, dtype=complex)
    w = np.broadcast_to(np.asarray(weight, dtype=float), z.shape).ravel()
    z = z.ravel()
    d = np.abs(z[:, None] - c.points) ** 2
    llr = np.empty((z.size, c.bits_per_symbol))
    for j in range(c.bits_per_symbol):
        one = c.labels[:, j] == 1
        llr[:, j] = d[:, one].min(axis=1) - d[:, ~one].min(axis=1)
    return (llr * w[:, None]).ravel()


def payload_size(layout: FrameLayout, c: Constellation, coded: bool = True) -> int:
    """Information bits carried by one frame.

    With coding the encoder tail occupies the last ``constraint_length - 1``
    information slots, so the payload is six bits short of the rate-1/2
    capacity.
    """
    capacity = layout.I * layout.n_data * c.bits_per_symbol
    if not coded:
        return capacity
    return capacity // 2 - (coding.CONSTRAINT_LENGTH - 1)


@dataclass
class FrameGrid:
    """Frequency-domain content of one frame over Kon.

    ``data_tx``/``data_rx`` have shape ``(I, n_on)``; ``preamble_rx`` has
    shape ``(2, n_on)``.  Before :func:`vchest.channel.apply_channel` the
    received fields are copies of the transmitted ones.
    """

    preamble: np.ndarray
    preamble_rx: np.ndarray
    data_tx: np.ndarray
    data_rx: np.ndarray
    pilot_values: np.ndarray
    bits: np.ndarray
    coded_bits: np.ndarray
    coded: bool = True
    noise_var: float = 0.0


def build_frame(bits, layout: FrameLayout, c: Constellation, coded: bool = True) -> FrameGrid:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    expected = payload_size(layout, c, coded)
    if bits.size != expected:
        raise ValueError(f"payload has {bits.size} bits, frame needs {expected}")
    coded_bits = coding.conv_encode(bits) if coded else bits.copy()
    symbols = qam_map(coded_bits, c).reshape(layout.I, layout.n_data)
    data_tx = np.empty((layout.I, layout.n_on), dtype=complex)
    data_tx[:, layout.data_pos] = symbols
    data_tx[:, layout.pilot_pos] = PILOT_VALUES
    preamble = layout.preamble()
    preamble_tx = np.tile(preamble, (2, 1))
    return FrameGrid(
        preamble=preamble,
        preamble_rx=preamble_tx.copy(),
        data_tx=data_tx,
        data_rx=data_tx.copy(),
        pilot_values=PILOT_VALUES.copy(),
        bits=bits,
        coded_bits=coded_bits,
        coded=coded,
    )


def random_payload(layout: FrameLayout, c: Constellation, rng, coded: bool = True) -> np.ndarray:
    return rng.integers(0, 2, payload_size(layout, c, coded), dtype=np.uint8)


def read_payload(path, layout: FrameLayout, c: Constellation, coded: bool = True) -> np.ndarray:
    """Read payload bits from a text file of 0/1 characters (whitespace ignored)."""
    with open(path) as fh:
        text = "".join(fh.read().split())
    if set(text) - {"0", "1"}:
        raise ValueError(f"{path}: payload file must contain only 0 and 1")
    bits = np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")
    expected = payload_size(layout, c, coded)
    if bits.size != expected:
        raise ValueError(f"{path}: {bits.size} bits, frame needs {expected}")
    return bits


def grid_rows(values: np.ndarray, layout: FrameLayout, first_symbol: int = 0) -> Iterable[tuple]:
    """Yield ``(symbol, subcarrier, re, im)`` rows; subcarrier is the centered index."""
    for i, row in enumerate(np.atleast_2d(values)):
        for k, v in zip(layout.kon, row):
            yield first_symbol + i, int(k), repr(float(v.real)), repr(float(v.imag))


def dump_grid_csv(path, grid: FrameGrid, layout: FrameLayout, received: bool = True):
    """Write a frame as CSV: preambles are symbols -2 and -1, data symbols 0..I-1."""
    pre = grid.preamble_rx if received else np.tile(grid.preamble, (2, 1))
    data = grid.data_rx if received else grid.data_tx
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["symbol", "subcarrier", "re", "im"])
        w.writerows(grid_rows(pre, layout, first_symbol=-2))
        w.writerows(grid_rows(data, layout))


def load_grid_csv(path, layout: FrameLayout) -> tuple[np.ndarray, np.ndarray]:
    """Read a grid CSV back into ``(preambles, data)`` arrays."""
    pos = {int(k): n for n, k in enumerate(layout.kon)}
    rows = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows[(int(rec["symbol"]), pos[int(rec["subcarrier"])])] = complex(
                float(rec["re"]), float(rec["im"]))
    n_sym = max(s for s, _ in rows) + 1
    out = np.zeros((n_sym + 2, layout.n_on), dtype=complex)
    for (s, n), v in rows.items():
        out[s + 2, n] = v
    return out[:2], out[2:]
