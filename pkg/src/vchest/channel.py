"""Doubly-selective tapped-delay-line channel with Jakes/Clarke Doppler.

Each tap is an independent sum-of-sinusoids Rayleigh process sampled once
per OFDM symbol.  Within a symbol the channel is frozen, so the received
subcarrier value is a plain product of channel and symbol plus AWGN.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from vchest.frame import FrameGrid, FrameLayout

N_PREAMBLES = 2


@dataclass(frozen=True)
class TdlProfile:
    delays: np.ndarray
    powers: np.ndarray
    name: str = ""

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=float)
        powers = np.asarray(self.powers, dtype=float)
        if delays.ndim != 1 or delays.shape != powers.shape or delays.size == 0:
            raise ValueError("delays and powers must be equal-length 1-D sequences")
        if np.any(powers < 0) or powers.sum() <= 0:
            raise ValueError("tap powers must be non-negative with a positive sum")
        if np.any(np.diff(delays) <= 0) or delays[0] < 0:
            raise ValueError("tap delays must be non-negative and strictly increasing")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "powers", powers / powers.sum())

    @property
    def n_taps(self) -> int:
        return self.delays.size

    @classmethod
    def from_dict(cls, d: dict) -> "TdlProfile":
        if "powers" in d:
            powers = d["powers"]
        elif "powers_db" in d:
            powers = 10.0 ** (np.asarray(d["powers_db"], dtype=float) / 10.0)
        else:
            raise ValueError("profile needs 'powers' or 'powers_db'")
        return cls(np.asarray(d["delays"]), np.asarray(powers), d.get("name", ""))


def load_profile(path=None) -> TdlProfile:
    """Load a TDL profile from JSON; ``None`` gives the bundled default."""
    if path is None:
        text = resources.files("vchest.data").joinpath("default_profile.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return TdlProfile.from_dict(json.loads(text))


def flat_profile() -> TdlProfile:
    return TdlProfile(np.array([0.0]), np.array([1.0]), "flat")


@dataclass(frozen=True)
class MobilityConfig:
    doppler_hz: float = 550.0
    symbol_duration: float = 8e-6
    n_sinusoids: int = 32
    seed: int | None = None

    def __post_init__(self):
        if self.doppler_hz < 0:
            raise ValueError("Doppler frequency must be >= 0")
        if self.symbol_duration <= 0:
            raise ValueError("symbol duration must be > 0")
        if self.n_sinusoids < 1:
            raise ValueError("need at least one sinusoid")


@dataclass
class ChannelRealization:
    """Per-symbol taps and CFR; rows 0 and 1 are the preambles."""

    taps: np.ndarray  # (2 + I, n_taps)
    cfr: np.ndarray  # (2 + I, n_on)
    delays: np.ndarray
    noise_var: float = 0.0

    @property
    def preamble_cfr(self) -> np.ndarray:
        return self.cfr[:N_PREAMBLES]

    @property
    def data_cfr(self) -> np.ndarray:
        return self.cfr[N_PREAMBLES:]

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.taps).tobytes()).hexdigest()[:16]


def taps_to_cfr(taps: np.ndarray, delays: np.ndarray, layout: FrameLayout) -> np.ndarray:
    """DFT of the tap vector(s) evaluated on the Kon subcarriers."""
    phase = np.exp(-2j * np.pi * np.outer(delays, layout.freq) / layout.K)
    return np.asarray(taps) @ phase


def jakes_taps(profile: TdlProfile, mob: MobilityConfig, n_symbols: int, rng) -> np.ndarray:
    """Sum-of-sinusoids tap gains, shape ``(n_symbols, n_taps)``."""
    n = mob.n_sinusoids
    theta = rng.uniform(0.0, 2 * np.pi, (profile.n_taps, n))
    phi = rng.uniform(0.0, 2 * np.pi, (profile.n_taps, n))
    t = np.arange(n_symbols) * mob.symbol_duration
    doppler = 2 * np.pi * mob.doppler_hz * np.cos(theta)  # (L, n)
    arg = doppler[None, :, :] * t[:, None, None] + phi[None, :, :]
    g = np.exp(1j * arg).sum(axis=2) / np.sqrt(n)
    return g * np.sqrt(profile.powers)


def gen_realization(profile: TdlProfile, mob: MobilityConfig, layout: FrameLayout,
                    rng=None) -> ChannelRealization:
    if profile.delays[-1] >= layout.K:
        raise ValueError(f"max tap delay {profile.delays[-1]} must be < K = {layout.K}")
    if rng is None:
        rng = np.random.default_rng(mob.seed)
    taps = jakes_taps(profile, mob, N_PREAMBLES + layout.I, rng)
    return ChannelRealization(taps=taps, cfr=taps_to_cfr(taps, profile.delays, layout),
                              delays=profile.delays)


def noise_variance(snr_db: float) -> float:
    """Noise variance for unit signal power; ``inf`` dB disables noise."""
    if np.isinf(snr_db) and snr_db > 0:
        return 0.0
    return float(10.0 ** (-snr_db / 10.0))


def complex_noise(rng, shape, var: float) -> np.ndarray:
    if var == 0.0:
        return np.zeros(shape, dtype=complex)
    return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def apply_channel(grid: FrameGrid, ch: ChannelRealization, snr_db: float, rng=None) -> FrameGrid:
    if ch.cfr.shape != (N_PREAMBLES + grid.data_tx.shape[0], grid.data_tx.shape[1]):
        raise ValueError("channel realization does not match the frame dimensions")
    var = noise_variance(snr_db)
    if rng is None:
        rng = np.random.default_rng()
    pre = np.tile(grid.preamble, (N_PREAMBLES, 1))
    pre_rx = ch.preamble_cfr * pre + complex_noise(rng, pre.shape, var)
    data_rx = ch.data_cfr * grid.data_tx + complex_noise(rng, grid.data_tx.shape, var)
    return dataclasses.replace(grid, preamble_rx=pre_rx, data_rx=data_rx, noise_var=var)


def nmse(estimates, truth) -> float:
    """Frame NMSE: total squared error over total channel energy.

    ``truth`` is either a :class:`ChannelRealization` (its data-symbol CFR is
    used) or an array of the same shape as ``estimates``.
    """
    if isinstance(truth, ChannelRealization):
        truth = truth.data_cfr
    est = np.asarray(estimates)
    truth = np.asarray(truth)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {truth.shape}")
    return float(np.sum(np.abs(est - truth) ** 2) / np.sum(np.abs(truth) ** 2))
