"""Training-set generation from the frame and channel simulators."""

from __future__ import annotations

import numpy as np

from vchest import channel as chan
from vchest import estimators as est
from vchest.frame import Constellation, FrameLayout, build_frame, random_payload
from vchest.neural.train import Dataset

SEQUENCE_KINDS = ("LSTM-DPA-TA", "LSTM-DNN-DPA")
SAMPLE_KINDS = ("STA-DNN", "TRFI-DNN")


# Spawn-key prefix that keeps training frames apart from sweep trials, which
# use ``spawn_key=(trial,)`` under the same master seed.
DATASET_STREAM = 0x7472


def frame_rngs(seed: int, n: int):
    """Independent per-frame generators derived from one master seed."""
    return [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(DATASET_STREAM, f)))
            for f in range(n)]


def simulate_frame(rng, layout: FrameLayout, c: Constellation, profile, mobility, snr_db,
                   coded: bool = True):
    grid = build_frame(random_payload(layout, c, rng, coded), layout, c, coded)
    ch = chan.gen_realization(profile, mobility, layout, rng)
    return chan.apply_channel(grid, ch, snr_db, rng), ch


def gen_dataset(n_frames: int, snr_db: float, layout: FrameLayout, c: Constellation,
                profile, mobility, kind: str = "LSTM-DPA-TA", seed: int = 0,
                sta: est.StaConfig = est.StaConfig()) -> Dataset:
    """Simulate frames and record network inputs and true-channel targets.

    Recurrent kinds are teacher-forced: the feedback slot of symbol ``i``
    holds the true channel of symbol ``i - 1`` (the LS estimate for the
    first symbol).  DNN-correction kinds record the conventional estimate
    of every symbol against the true channel on Kon.
    """
    if kind not in SEQUENCE_KINDS + SAMPLE_KINDS:
        raise ValueError(f"no dataset recipe for {kind!r}")
    I = layout.I
    if kind == "LSTM-DPA-TA":
        width_in, width_out = 2 * layout.n_on, 2 * layout.n_data
    elif kind == "LSTM-DNN-DPA":
        width_in, width_out = 2 * (layout.n_on + layout.n_pilot), 2 * layout.n_data
    else:
        width_in = width_out = 2 * layout.n_on
    if kind in SEQUENCE_KINDS:
        X = np.empty((n_frames, I, width_in))
        Y = np.empty((n_frames, I, width_out))
    else:
        X = np.empty((n_frames * I, width_in))
        Y = np.empty((n_frames * I, width_out))

    for f, rng in enumerate(frame_rngs(seed, n_frames)):
        grid, ch = simulate_frame(rng, layout, c, profile, mobility, snr_db)
        truth = ch.data_cfr
        if kind in SEQUENCE_KINDS:
            h_ls = est.ls_estimate(grid.preamble_rx[0], grid.preamble_rx[1], grid.preamble)
            prev = np.vstack([h_ls, truth[:-1]])
            if kind == "LSTM-DPA-TA":
                X[f] = est.lstm_ta_input(prev, grid.data_rx, layout, grid.pilot_values)
            else:
                X[f] = est.lstm_dnn_input(prev, grid.data_rx, layout, grid.pilot_values)
            Y[f] = est.to_real(truth[:, layout.data_pos])
        else:
            tr = est.run_baseline(grid, kind.removesuffix("-DNN"), c, layout, sta=sta)
            X[f * I:(f + 1) * I] = est.to_real(tr.data)
            Y[f * I:(f + 1) * I] = est.to_real(truth)
    return Dataset(X, Y, kind, {"snr_db": snr_db, "n_frames": n_frames, "seed": seed})
