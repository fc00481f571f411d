import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vchest import coding
from vchest.frame import (LONG_TRAINING, PILOT_VALUES, QAM16, QPSK, Constellation, FrameLayout,
                          build_frame, demap_bits, demap_nearest, dump_grid_csv, load_grid_csv,
                          payload_size, qam_map, random_payload, read_payload, soft_demap)


class TestLayout:
    def test_80211p_constants(self, layout):
        assert layout.K == 64
        assert layout.n_on == 52
        assert layout.n_data == 48
        assert layout.n_pilot == 4
        assert layout.kn.size == 12
        assert layout.I == 50

    def test_set_algebra(self, layout):
        kon, kd, kp, kn = map(set, (layout.kon, layout.kd, layout.kp, layout.kn))
        assert kd | kp == kon
        assert not kd & kp
        assert not kon & kn
        assert len(kon) + len(kn) == 64

    def test_sorted_and_in_range(self, layout):
        for idx in (layout.kon, layout.kd, layout.kp, layout.kn):
            assert np.all(np.diff(idx) > 0)
            assert idx.min() >= 0 and idx.max() < 64

    def test_pilots_and_guard(self, layout):
        assert list(layout.kp - 32) == [-21, -7, 7, 21]
        assert 32 in layout.kn  # DC
        assert list(layout.kon[layout.pilot_pos]) == list(layout.kp)
        assert list(layout.kon[layout.data_pos]) == list(layout.kd)

    def test_preamble_is_bpsk_lts(self, layout):
        p = layout.preamble()
        assert p.size == 52
        assert set(np.unique(p.real)) == {-1.0, 1.0}
        assert LONG_TRAINING[26] == 0


class TestConstellation:
    @pytest.mark.parametrize("c", [QPSK, QAM16])
    def test_unit_power(self, c):
        assert abs(np.mean(np.abs(c.points) ** 2) - 1) < 1e-12

    def test_16qam_scale(self):
        # Enumerate the raw {+-1, +-3}^2 lattice: mean power 10.
        power = [a * a + b * b for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)]
        assert sum(power) == 160
        assert QAM16.scale == pytest.approx(1 / np.sqrt(10), abs=1e-15)

    @pytest.mark.parametrize("c", [QPSK, QAM16])
    def test_gray_adjacency(self, c):
        step = 2 * c.scale
        for a, b in itertools.combinations(range(c.order), 2):
            d = c.points[a] - c.points[b]
            axis_neighbours = (abs(abs(d.real) - step) < 1e-9 and abs(d.imag) < 1e-9) or \
                              (abs(abs(d.imag) - step) < 1e-9 and abs(d.real) < 1e-9)
            if axis_neighbours:
                assert np.sum(c.labels[a] != c.labels[b]) == 1

    def test_from_name(self):
        assert Constellation.from_name("16qam").order == 16
        with pytest.raises(ValueError):
            Constellation.from_name("64QAM")


class TestMapping:
    def test_qpsk_corner(self):
        assert qam_map([0, 0], QPSK)[0] == pytest.approx((1 + 1j) / np.sqrt(2))

    def test_empty(self):
        assert qam_map([], QAM16).size == 0

    def test_rejects_ragged(self):
        with pytest.raises(ValueError):
            qam_map([0, 1, 1], QAM16)

    def test_all_labels_mean_power(self):
        bits = QAM16.labels.ravel()
        assert np.mean(np.abs(qam_map(bits, QAM16)) ** 2) == pytest.approx(1, abs=1e-12)


def brute_nearest(z, c):
    best, best_d = None, np.inf
    for n, p in enumerate(c.points):  # label order, strict < keeps the lowest label
        d = abs(z - p) ** 2
        if d < best_d:
            best, best_d = n, d
    return c.points[best]


class TestDemap:
    @pytest.mark.parametrize("c", [QPSK, QAM16])
    def test_fixed_points(self, c):
        assert np.array_equal(demap_nearest(c.points, c), c.points)

    def test_enumeration_oracle(self):
        z = 0.9 + 0.9j
        assert demap_nearest(z, QAM16) == brute_nearest(z, QAM16)
        assert demap_nearest(z, QAM16) == pytest.approx((3 + 3j) / np.sqrt(10))
        # Same input in lattice units lands on the inner point.
        assert demap_nearest(z / np.sqrt(10), QAM16) == pytest.approx((1 + 1j) / np.sqrt(10))

    def test_ties_go_to_lowest_label(self):
        assert demap_nearest(0j, QAM16) == QAM16.points[0]
        z = 1j / np.sqrt(10)  # equidistant from (+-1 + j)/sqrt10
        assert demap_nearest(z, QAM16) == brute_nearest(z, QAM16) == QAM16.points[0]
        assert demap_nearest(0j, QPSK) == QPSK.points[0]

    def test_random_against_brute_force(self, rng):
        z = rng.standard_normal(300) + 1j * rng.standard_normal(300)
        got = demap_nearest(z, QAM16)
        assert all(g == brute_nearest(v, QAM16) for g, v in zip(got, z))

    @given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False), max_size=30))
    def test_idempotent(self, zs):
        once = demap_nearest(np.array(zs, dtype=complex), QAM16)
        assert np.array_equal(demap_nearest(once, QAM16), once)

    @given(st.lists(st.integers(0, 1), min_size=0, max_size=64).filter(lambda b: len(b) % 4 == 0))
    def test_map_demap_identity(self, bits):
        sym = qam_map(bits, QAM16)
        assert np.array_equal(demap_nearest(sym, QAM16), sym)
        assert np.array_equal(demap_bits(sym, QAM16), np.array(bits, dtype=np.uint8))

    def test_soft_demap_signs(self, rng):
        bits = rng.integers(0, 2, 400).astype(np.uint8)
        llr = soft_demap(qam_map(bits, QAM16), QAM16)
        assert np.array_equal((llr < 0).astype(np.uint8), bits)


class TestBuildFrame:
    def test_payload_size(self, layout):
        assert payload_size(layout, QAM16) == 50 * 48 * 4 // 2 - 6
        assert payload_size(layout, QAM16, coded=False) == 9600

    def test_pilots_and_energy(self, layout, rng):
        g = build_frame(random_payload(layout, QAM16, rng), layout, QAM16)
        assert np.array_equal(g.data_tx[:, layout.pilot_pos], np.tile(PILOT_VALUES, (50, 1)))
        assert abs(np.mean(np.abs(g.data_tx[:, layout.data_pos]) ** 2) - 1) < 0.05
        assert g.coded_bits.size == 2 * (g.bits.size + 6)
        assert np.array_equal(coding.viterbi_decode(g.coded_bits), g.bits)

    def test_frame_energy_exact_over_all_labels(self):
        # A frame that uses every label equally often has unit power exactly.
        layout = FrameLayout(symbols_per_frame=1)
        bits = np.tile(QAM16.labels.ravel(), 3)
        g = build_frame(bits, layout, QAM16, coded=False)
        assert abs(np.mean(np.abs(g.data_tx[:, layout.data_pos]) ** 2) - 1) < 1e-10

    def test_rejects_wrong_size(self, layout):
        with pytest.raises(ValueError):
            build_frame(np.zeros(10, dtype=np.uint8), layout, QAM16)

    def test_grid_csv_roundtrip(self, layout, rng, tmp_path):
        g = build_frame(random_payload(layout, QPSK, rng), layout, QPSK)
        path = tmp_path / "grid.csv"
        dump_grid_csv(path, g, layout)
        header = path.read_text().splitlines()[0]
        assert header == "symbol,subcarrier,re,im"
        pre, data = load_grid_csv(path, layout)
        assert np.array_equal(pre, g.preamble_rx)
        assert np.array_equal(data, g.data_rx)

    def test_payload_file(self, layout, tmp_path):
        n = payload_size(layout, QPSK)
        path = tmp_path / "bits.txt"
        path.write_text("01" * (n // 2) + "\n")
        bits = read_payload(path, layout, QPSK)
        assert bits.size == n and bits[1] == 1
        path.write_text("012")
        with pytest.raises(ValueError):
            read_payload(path, layout, QPSK)


@settings(max_examples=25)
@given(st.integers(0, 2 ** 32 - 1))
def test_frame_energy_property(seed):
    layout = FrameLayout(symbols_per_frame=4)
    r = np.random.default_rng(seed)
    g = build_frame(random_payload(layout, QPSK, r), layout, QPSK)
    # QPSK is constant-modulus, so the frame power is exact.
    assert abs(np.mean(np.abs(g.data_tx[:, layout.data_pos]) ** 2) - 1) < 1e-10
