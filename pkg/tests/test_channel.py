import json

import numpy as np
import pytest
from scipy.special import j0

from vchest.channel import (ChannelRealization, MobilityConfig, TdlProfile, apply_channel,
                            complex_noise, flat_profile, gen_realization, jakes_taps, load_profile,
                            nmse, noise_variance)
from vchest.frame import QPSK, FrameLayout, build_frame, random_payload


class TestProfile:
    def test_default_profile(self):
        prof = load_profile()
        assert prof.n_taps == 12
        assert prof.powers.sum() == pytest.approx(1.0)
        assert prof.delays[-1] < 64

    def test_from_dict_db(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"delays": [0, 3], "powers_db": [0, -10]}))
        prof = load_profile(path)
        assert prof.powers == pytest.approx([1 / 1.1, 0.1 / 1.1])

    @pytest.mark.parametrize("delays, powers", [([1, 0], [1, 1]), ([0], [-1]), ([], [])])
    def test_rejects_bad(self, delays, powers):
        with pytest.raises(ValueError):
            TdlProfile(np.array(delays), np.array(powers))

    def test_rejects_missing_powers(self):
        with pytest.raises(ValueError):
            TdlProfile.from_dict({"delays": [0]})

    def test_rejects_long_delay(self, layout):
        prof = TdlProfile(np.array([0, 64]), np.array([1, 1]))
        with pytest.raises(ValueError):
            gen_realization(prof, MobilityConfig(), layout, np.random.default_rng(0))


class TestRealization:
    def test_static_channel(self, layout, rng):
        ch = gen_realization(load_profile(), MobilityConfig(doppler_hz=0), layout, rng)
        assert ch.cfr.shape == (52, 52)
        assert np.array_equal(ch.cfr, np.tile(ch.cfr[0], (52, 1)))

    def test_flat_single_tap(self, layout, rng):
        ch = gen_realization(flat_profile(), MobilityConfig(), layout, rng)
        for row, tap in zip(ch.cfr, ch.taps[:, 0]):
            assert np.allclose(row, tap, rtol=0, atol=1e-15)

    def test_cfr_is_dft_of_taps(self, layout, rng):
        prof = load_profile()
        ch = gen_realization(prof, MobilityConfig(), layout, rng)
        full = np.fft.fft(_place(ch.taps[5], prof.delays))
        assert np.allclose(ch.cfr[5], full[layout.freq % 64], atol=1e-12)

    def test_deterministic(self, layout):
        mob = MobilityConfig(seed=7)
        a = gen_realization(load_profile(), mob, layout)
        b = gen_realization(load_profile(), mob, layout)
        assert a.digest() == b.digest()
        assert np.array_equal(a.cfr, b.cfr)

    def test_energy_moment(self, layout):
        # Unit total tap power means E|H[k]|^2 = 1 on every subcarrier.
        rng = np.random.default_rng(3)
        prof, mob = load_profile(), MobilityConfig()
        power = np.mean([np.abs(gen_realization(prof, mob, layout, rng).cfr[0]) ** 2
                         for _ in range(4000)], axis=0)
        assert np.allclose(power, 1.0, rtol=0.08)

    def test_fourth_moment(self):
        # A sum of N unit phasors with independent uniform phases has
        # E|g|^4 = 2 - 1/N after normalising by sqrt(N).
        rng = np.random.default_rng(5)
        g = np.concatenate([jakes_taps(flat_profile(), MobilityConfig(), 1, rng)[:, 0]
                            for _ in range(40000)])
        assert np.mean(np.abs(g) ** 4) == pytest.approx(2 - 1 / 32, rel=0.03)

    def test_autocorrelation_matches_bessel(self):
        rng = np.random.default_rng(11)
        mob = MobilityConfig(doppler_hz=550)
        n = 5000
        g = np.stack([jakes_taps(flat_profile(), mob, 11, rng)[:, 0] for _ in range(n)])
        lags = np.arange(11)
        emp = np.array([np.mean(g[:, 0] * np.conj(g[:, m])).real for m in lags])
        ref = j0(2 * np.pi * 550 * lags * 8e-6)
        assert np.all(np.abs(emp - ref) < 0.05)


def _place(taps, delays):
    out = np.zeros(64, dtype=complex)
    out[delays.astype(int)] = taps
    return out


class TestNoise:
    def test_variance(self):
        assert noise_variance(10) == pytest.approx(0.1)
        assert noise_variance(np.inf) == 0.0

    def test_complex_noise_power(self):
        v = complex_noise(np.random.default_rng(2), (200000,), 0.1)
        assert np.mean(np.abs(v) ** 2) == pytest.approx(0.1, rel=0.02)
        assert np.mean(v.real ** 2) == pytest.approx(0.05, rel=0.02)

    def test_apply_noiseless(self, layout, rng):
        grid = build_frame(random_payload(layout, QPSK, rng), layout, QPSK)
        ch = gen_realization(load_profile(), MobilityConfig(), layout, rng)
        rx = apply_channel(grid, ch, np.inf, rng)
        assert np.array_equal(rx.data_rx, ch.data_cfr * grid.data_tx)
        assert np.array_equal(rx.preamble_rx, ch.preamble_cfr * grid.preamble)
        assert rx.noise_var == 0 and grid.noise_var == 0
        assert np.array_equal(grid.data_rx, grid.data_tx)

    def test_apply_rejects_mismatch(self, layout, rng):
        grid = build_frame(random_payload(layout, QPSK, rng), layout, QPSK)
        short = gen_realization(load_profile(), MobilityConfig(), FrameLayout(10), rng)
        with pytest.raises(ValueError):
            apply_channel(grid, short, 10, rng)


class TestNmse:
    def test_zero_and_scale(self):
        h = np.array([1 + 1j, 2, -1j])
        assert nmse(h, h) == 0
        assert nmse(2 * h, h) == pytest.approx(1.0)

    def test_realization_truth(self, layout, rng):
        ch = gen_realization(flat_profile(), MobilityConfig(), layout, rng)
        assert nmse(ch.data_cfr, ch) == 0
        with pytest.raises(ValueError):
            nmse(ch.cfr, ch)

    def test_digest_tracks_taps(self):
        a = ChannelRealization(np.ones((3, 1)), np.ones((3, 2)), np.zeros(1))
        b = ChannelRealization(np.ones((3, 1)) * 2, np.ones((3, 2)), np.zeros(1))
        assert a.digest() != b.digest()
