import pytest

from vchest.complexity import (OpCount, dnn_ops, estimator_total, figure_rows, itemised_total,
                               lstm_gate_ops, lstm_ops, lstm_ops_total, readout_inclusive_total,
                               reduction_report)


class TestComponents:
    def test_dnn(self):
        assert dnn_ops([4, 4]).total == 32
        assert dnn_ops([112, 40, 96]) == OpCount(8320, 8320)
        assert dnn_ops([112, 40, 96]).total == 16640
        assert dnn_ops([0, 5]).total == 0

    def test_dnn_rejects_short_chain(self):
        with pytest.raises(ValueError):
            dnn_ops([4])
        with pytest.raises(ValueError):
            dnn_ops([])

    def test_gate_unit(self):
        assert lstm_gate_ops(1, 1) == OpCount(2, 2)

    def test_lstm_mults(self):
        assert lstm_ops(128, 104).mul_div == 4 * 128 ** 2 + 128 * (8 * 52 + 3) == 119168

    def test_single_number_total(self):
        assert lstm_ops_total(128, 112) == 4 * (16384 + 14336 + 384 + 110) + 512
        # The itemised split adds up to the single-number form.
        for P, K in [(1, 1), (64, 104), (128, 112)]:
            assert lstm_ops(P, K).total == lstm_ops_total(P, K)

    def test_lstm_rejects(self):
        with pytest.raises(ValueError):
            lstm_ops(0, 4)

    def test_opcount(self):
        assert OpCount(1, 2) + OpCount(3, 4) == OpCount(4, 6)
        with pytest.raises(ValueError):
            OpCount(-1, 0)


class TestTotals:
    def test_figure_values(self):
        assert estimator_total("LSTM-DNN-DPA") == OpCount(133088, 11448)
        assert estimator_total("LSTM-DPA-TA", 128) == OpCount(120136, 2560)
        assert estimator_total("LSTM-DPA-TA", 64) == OpCount(44168, 1728)

    @pytest.mark.parametrize("kind, P", [("LSTM-DNN-DPA", 128), ("LSTM-DPA-TA", 128),
                                         ("LSTM-DPA-TA", 64)])
    def test_itemised_equals_closed_form(self, kind, P):
        assert itemised_total(kind, P) == estimator_total(kind, P)

    def test_lstm_dpa_ta_composition(self):
        P, Kon, Kd = 128, 52, 48
        t = estimator_total("LSTM-DPA-TA", P)
        lstm = lstm_ops(P, 2 * Kon)
        assert t.mul_div == lstm.mul_div + 18 * Kd + 2 * Kon
        assert t.add_sub == lstm.add_sub + 8 * Kd + 2 * Kon

    def test_readout_inclusive(self):
        assert readout_inclusive_total(64) == OpCount(44168 + 64 * 96, 1728 + 64 * 96)

    def test_rejects(self):
        with pytest.raises(ValueError):
            estimator_total("STA-DNN")
        with pytest.raises(ValueError):
            estimator_total("LSTM-DNN-DPA", P=64)

    def test_reduction(self):
        r = reduction_report()
        assert [f"{v:.2f}" for v in r[128]] == ["9.73", "77.63"]
        assert [f"{v:.2f}" for v in r[64]] == ["66.81", "84.90"]

    def test_rows(self):
        rows = figure_rows()
        assert rows[0] == ("LSTM-DNN-DPA", 133088, 11448)
        assert [r[1:] for r in rows[1:]] == [(120136, 2560), (44168, 1728)]
