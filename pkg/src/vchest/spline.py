"""Natural cubic spline through scattered knots."""

import numpy as np
from scipy.linalg import solve_banded


def natural_cubic(x, y, xq, extrapolate: str = "clamp") -> np.ndarray:
    """Evaluate the natural cubic spline through ``(x, y)`` at ``xq``.

    ``x`` must be strictly increasing.  ``y`` may be complex, in which case
    real and imaginary parts are splined independently (the system is
    linear, so one solve covers both).  Outside ``[x[0], x[-1]]`` the value
    is held at the nearest end knot when ``extrapolate == "clamp"``;
    ``"spline"`` continues the end cubic.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    xq = np.asarray(xq, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two knots")
    if np.any(np.diff(x) <= 0):
        raise ValueError("knots must be strictly increasing")
    h = np.diff(x)
    slope = np.diff(y) / h

    # Second derivatives m, natural ends m[0] = m[-1] = 0.
    m = np.zeros(n, dtype=np.result_type(y, float))
    if n > 2:
        ab = np.zeros((3, n - 2))
        ab[0, 1:] = h[1:-1]
        ab[1] = 2.0 * (h[:-1] + h[1:])
        ab[2, :-1] = h[1:-1]
        rhs = 6.0 * (slope[1:] - slope[:-1])
        m[1:-1] = solve_banded((1, 1), ab, rhs)

    j = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, n - 2)
    t0 = x[j + 1] - xq
    t1 = xq - x[j]
    hj = h[j]
    out = (m[j] * t0 ** 3 + m[j + 1] * t1 ** 3) / (6 * hj) \
        + (y[j] / hj - m[j] * hj / 6) * t0 \
        + (y[j + 1] / hj - m[j + 1] * hj / 6) * t1
    if extrapolate == "clamp":
        out = np.where(xq < x[0], y[0], out)
        out = np.where(xq > x[-1], y[-1], out)
    elif extrapolate != "spline":
        raise ValueError(f"unknown extrapolation mode {extrapolate!r}")
    return out
