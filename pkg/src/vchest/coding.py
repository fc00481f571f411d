"""Rate-1/2, constraint-length-7 convolutional code (133, 171 octal).

The encoder is zero-tail terminated.  The decoder is a Viterbi decoder that
works on a batch of equally long streams at once.
"""

import numpy as np

CONSTRAINT_LENGTH = 7
G0 = 0o133
G1 = 0o171
N_STATES = 1 << (CONSTRAINT_LENGTH - 1)


def _taps(g):
    return np.array([(g >> (CONSTRAINT_LENGTH - 1 - j)) & 1 for j in range(CONSTRAINT_LENGTH)],
                    dtype=np.uint8)


TAPS0 = _taps(G0)
TAPS1 = _taps(G1)


def conv_encode(bits) -> np.ndarray:
    """Encode and append six zero tail bits; output is ``A0 B0 A1 B1 ...``."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size == 0:
        raise ValueError("cannot encode an empty bit vector")
    padded = np.concatenate([bits, np.zeros(CONSTRAINT_LENGTH - 1, dtype=np.uint8)])
    n = padded.size
    a = np.convolve(padded, TAPS0)[:n] & 1
    b = np.convolve(padded, TAPS1)[:n] & 1
    out = np.empty(2 * n, dtype=np.uint8)
    out[0::2] = a
    out[1::2] = b
    return out


def _trellis():
    # State holds the last six inputs, most recent in bit 5.  Entering state s
    # requires input s >> 5; its two predecessors are 2*(s & 31) and +1.
    s = np.arange(N_STATES)
    u = s >> 5
    pred = np.stack([(s & 31) << 1, ((s & 31) << 1) | 1])
    out = np.zeros((2, N_STATES, 2), dtype=np.uint8)
    for which in range(2):
        reg = (u << 6) | pred[which]  # 7-bit register, current input at bit 6
        for j, g in enumerate((G0, G1)):
            out[which, :, j] = np.array([bin(r & g).count("1") & 1 for r in reg])
    return pred, out


PRED, BRANCH_OUT = _trellis()


def viterbi_decode(symbols, terminated: bool = True) -> np.ndarray:
    """Maximum-likelihood decoding of one or more coded streams.

    ``symbols`` holds either hard bits (integer dtype, 0/1) or soft values
    (float dtype, LLR convention: positive favours bit 0).  A 2-D input is a
    batch of streams, one per row.  The returned payload excludes the tail
    when ``terminated``.  Ties go to the lower-numbered predecessor state.
    """
    arr = np.asarray(symbols)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] % 2:
        raise ValueError("coded stream length must be even")
    if np.issubdtype(arr.dtype, np.integer) or arr.dtype == bool:
        llr = 1.0 - 2.0 * arr.astype(float)
    else:
        llr = arr.astype(float)
    n_batch, n_coded = llr.shape
    n_steps = n_coded // 2
    if n_steps == 0:
        out = np.zeros((n_batch, 0), dtype=np.uint8)
        return out[0] if single else out

    # Cost of emitting coded bit c against observation l is (2c - 1) * l.
    sign = 2.0 * BRANCH_OUT.astype(float) - 1.0  # (2, S, 2)
    inf = np.inf
    pm = np.full((n_batch, N_STATES), inf)
    pm[:, 0] = 0.0
    decisions = np.empty((n_steps, n_batch, N_STATES), dtype=bool)
    obs = llr.reshape(n_batch, n_steps, 2)
    p0, p1 = PRED
    for t in range(n_steps):
        o = obs[:, t, :]
        bm0 = o @ sign[0].T  # (B, S)
        bm1 = o @ sign[1].T
        c0 = pm[:, p0] + bm0
        c1 = pm[:, p1] + bm1
        take1 = c1 < c0
        decisions[t] = take1
        pm = np.where(take1, c1, c0)
        pm -= pm.min(axis=1, keepdims=True)

    if terminated:
        state = np.zeros(n_batch, dtype=np.int64)
    else:
        state = np.argmin(pm, axis=1)
    bits = np.empty((n_batch, n_steps), dtype=np.uint8)
    rows = np.arange(n_batch)
    for t in range(n_steps - 1, -1, -1):
        bits[:, t] = state >> 5
        state = ((state & 31) << 1) | decisions[t, rows, state]
    if terminated:
        bits = bits[:, : n_steps - (CONSTRAINT_LENGTH - 1)]
    return bits[0] if single else bits
