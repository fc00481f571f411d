import numpy as np
import pytest

from vchest.frame import FrameLayout

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def layout():
    return FrameLayout()


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary is printed at the end of the run."""

    def record(name, passed, detail=""):
        _ACCEPTANCE.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


def copy_lstm(layout, scale=1e-4):
    """Hand-built LSTM whose readout approximately copies the data part of its input.

    Input gate and output gate are saturated open, the forget gate shut, so
    ``c_t = tanh(scale * x)`` and ``h_t = tanh(c_t)``; the head undoes the
    scale.  The copy error is ``O(scale^2)`` relative.
    """
    from vchest.neural.lstm import LstmParams
    from vchest.neural.mlp import MlpParams

    n_out = 2 * layout.n_data
    cols = np.concatenate([layout.data_pos, layout.n_on + layout.data_pos])
    sel = np.zeros((n_out, 2 * layout.n_on))
    sel[np.arange(n_out), cols] = 1.0
    W = np.zeros((4, n_out, 2 * layout.n_on))
    W[2] = scale * sel
    U = np.zeros((4, n_out, n_out))
    b = np.zeros((4, n_out))
    b[0], b[1], b[3] = -60.0, 60.0, 60.0
    head = MlpParams([np.eye(n_out) / scale], [np.zeros(n_out)], ["linear"])
    return LstmParams(W, U, b, head)


@pytest.fixture
def copy_model(layout):
    return copy_lstm(layout)
