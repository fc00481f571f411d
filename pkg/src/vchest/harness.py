"""Monte-Carlo BER/NMSE sweeps, training runs and CSV reporting."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from vchest import channel as chan
from vchest import coding
from vchest import estimators as est
from vchest.frame import Constellation, FrameLayout, build_frame, demap_bits, random_payload, soft_demap
from vchest.neural import (Dataset, ModelFormatError, TrainConfig, init_lstm, init_mlp,
                           load_model, save_model, train)
from vchest.neural.dataset import gen_dataset
from vchest.neural.lstm import LstmParams
from vchest.neural.mlp import MlpParams

log = logging.getLogger(__name__)

DECODE_CHUNK = 64


class ConfigError(ValueError):
    pass


class ModelError(RuntimeError):
    pass


@dataclass
class EstimatorSpec:
    name: str
    alpha: float = 2.0
    beta: int = 2
    model: str | None = None
    feedback: str = "ta"


@dataclass
class TrainSpec:
    kind: str = "LSTM-DPA-TA"
    hidden: int = 128
    epochs: int = 500
    batch_size: int = 128
    learning_rate: float = 1e-3
    snr_db: float = 40.0
    frames: int = 320
    seed: int = 1

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate, snr_db=self.snr_db,
                           n_frames=self.frames, seed=self.seed)


@dataclass
class SimConfig:
    symbols_per_frame: int = 50
    modulation: str = "16QAM"
    coding: bool = True
    profile: str | None = None
    doppler_hz: float = 550.0
    symbol_duration: float = 8e-6
    n_sinusoids: int = 32
    snr_db: list = field(default_factory=lambda: list(range(0, 41, 5)))
    frames: int = 100
    estimators: list = field(default_factory=lambda: [EstimatorSpec("DPA")])
    seed: int = 0
    train: TrainSpec = field(default_factory=TrainSpec)

    def __post_init__(self):
        if not self.snr_db:
            raise ConfigError("snr_db grid must not be empty")
        if self.frames < 1:
            raise ConfigError("frames must be >= 1")
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        names = [e.name for e in self.estimators]
        for n in names:
            if n not in est.KINDS + ("genie",):
                raise ConfigError(f"unknown estimator {n!r}")
        if len(set(names)) != len(names):
            raise ConfigError("estimator names must be unique")
        try:
            self.constellation
            self.layout
            self.mobility
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def layout(self) -> FrameLayout:
        return FrameLayout(self.symbols_per_frame)

    @property
    def constellation(self) -> Constellation:
        return Constellation.from_name(self.modulation)

    @property
    def mobility(self) -> chan.MobilityConfig:
        return chan.MobilityConfig(self.doppler_hz, self.symbol_duration, self.n_sinusoids)

    def load_profile(self) -> chan.TdlProfile:
        try:
            return chan.load_profile(self.profile)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad TDL profile {self.profile!r}: {exc}") from None

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        d = dict(d)
        try:
            if "estimators" in d:
                d["estimators"] = [EstimatorSpec(e) if isinstance(e, str) else EstimatorSpec(**e)
                                   for e in d["estimators"]]
            if "train" in d:
                d["train"] = TrainSpec(**d["train"])
            if "snr_db" in d:
                d["snr_db"] = [float(s) for s in d["snr_db"]]
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"config schema violation: {exc}") from None

    @classmethod
    def load(cls, path) -> "SimConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MetricRecord:
    estimator: str
    snr_db: float
    ber: float
    nmse: float
    frames: int
    bits: int
    bit_errors: int = 0
    flagged: int = 0
    channel_digest: str = ""


def trial_rng(seed: int, trial: int):
    """Generator for one Monte-Carlo trial; identical at every SNR point."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def load_models(cfg: SimConfig) -> dict:
    models = {}
    for spec in cfg.estimators:
        if spec.name not in est.LEARNED:
            continue
        if not spec.model:
            raise ModelError(f"estimator {spec.name} needs a 'model' path")
        try:
            models[spec.name], _ = load_model(spec.model)
        except (OSError, ModelFormatError) as exc:
            raise ModelError(f"cannot load model for {spec.name}: {exc}") from None
    return models


def _run_estimator(spec: EstimatorSpec, grid, ch, cfg: SimConfig, models):
    c, layout = cfg.constellation, cfg.layout
    try:
        if spec.name == "LSTM-DPA-TA":
            return est.run_lstm_dpa_ta(grid, models[spec.name], c, layout, spec.alpha,
                                       feedback=spec.feedback)
        return est.estimate(grid, spec.name, c, layout, models,
                            est.StaConfig(spec.alpha, spec.beta), spec.alpha, truth=ch)
    except est.MissingModelError as exc:
        raise ModelError(str(exc)) from None
    except ValueError as exc:
        if spec.name in est.LEARNED:
            raise ModelError(f"{spec.name}: {exc}") from None
        raise


def demodulate(grid, trace: est.EstimateTrace, cfg: SimConfig):
    """Zero-forcing equalisation on Kd, then LLRs (coded) or hard bits."""
    layout, c = cfg.layout, cfg.constellation
    h = trace.data[:, layout.data_pos]
    y = grid.data_rx[:, layout.data_pos]
    h_safe = np.where(np.abs(h) < est.EPS, est.EPS, h)
    z = y / h_safe
    if not cfg.coding:
        return demap_bits(z, c)
    var = grid.noise_var if grid.noise_var > 0 else 1.0
    return soft_demap(z, c, np.abs(h) ** 2 / var)


def run_sweep(cfg: SimConfig, models: dict | None = None, progress=None) -> list[MetricRecord]:
    """Paired Monte-Carlo sweep over the SNR grid.

    Trial ``t`` draws payload, channel and noise from ``trial_rng(seed, t)``
    at every SNR point, and every estimator sees the same received frame.
    """
    models = load_models(cfg) if models is None else models
    layout, c = cfg.layout, cfg.constellation
    profile = cfg.load_profile()
    mobility = cfg.mobility
    records = []
    for snr in cfg.snr_db:
        acc = {s.name: dict(errors=0, bits=0, nmse=0.0, flagged=0, digest=[])
               for s in cfg.estimators}
        pending = {s.name: [] for s in cfg.estimators}
        payloads = []

        def flush():
            for name, rows in pending.items():
                if not rows:
                    continue
                if cfg.coding:
                    decoded = coding.viterbi_decode(np.stack(rows))
                else:
                    decoded = np.stack(rows)
                ref = np.stack(payloads)
                acc[name]["errors"] += int(np.count_nonzero(decoded != ref))
                acc[name]["bits"] += ref.size
                rows.clear()
            payloads.clear()

        for t in range(cfg.frames):
            rng = trial_rng(cfg.seed, t)
            grid = build_frame(random_payload(layout, c, rng, cfg.coding), layout, c, cfg.coding)
            ch = chan.gen_realization(profile, mobility, layout, rng)
            rx = chan.apply_channel(grid, ch, snr, rng)
            payloads.append(grid.bits)
            for spec in cfg.estimators:
                tr = _run_estimator(spec, rx, ch, cfg, models)
                a = acc[spec.name]
                a["nmse"] += chan.nmse(tr.data, ch)
                a["flagged"] += tr.n_flagged
                a["digest"].append(ch.digest())
                pending[spec.name].append(demodulate(rx, tr, cfg))
            if len(payloads) >= DECODE_CHUNK:
                flush()
            if progress is not None:
                progress(snr, t)
        flush()
        for spec in cfg.estimators:
            a = acc[spec.name]
            digest = hashlib.sha256("".join(a["digest"]).encode()).hexdigest()[:16]
            records.append(MetricRecord(spec.name, float(snr), a["errors"] / a["bits"],
                                        a["nmse"] / cfg.frames, cfg.frames, a["bits"],
                                        a["errors"], a["flagged"], digest))
    return records


REPORT_COLUMNS = ("estimator", "snr_db", "ber", "nmse", "frames", "bits")


def _num(x) -> str:
    return format(x, ".10g")


def report_csv(records) -> str:
    rows = sorted(records, key=lambda r: (r.estimator, r.snr_db))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([r.estimator, _num(r.snr_db), _num(r.ber), _num(r.nmse), r.frames, r.bits])
    return buf.getvalue()


def summary_table(records) -> str:
    rows = sorted(records, key=lambda r: (r.estimator, r.snr_db))
    lines = [f"{'estimator':<14} {'SNR':>6} {'BER':>11} {'NMSE':>11} {'frames':>7}"]
    for r in rows:
        lines.append(f"{r.estimator:<14} {r.snr_db:>6.1f} {r.ber:>11.4e} {r.nmse:>11.4e} "
                     f"{r.frames:>7d}")
    return "\n".join(lines)


def report(records, path=None) -> tuple[str, str]:
    """Render ``(csv_text, summary)``; writes the CSV when ``path`` is given."""
    if not records:
        raise ValueError("no records to report")
    text = report_csv(records)
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text, summary_table(records)


def new_model(kind: str, layout: FrameLayout, hidden: int, rng):
    if kind == "LSTM-DPA-TA":
        return init_lstm(2 * layout.n_on, hidden, 2 * layout.n_data, rng)
    if kind == "LSTM-DNN-DPA":
        return init_lstm(2 * (layout.n_on + layout.n_pilot), hidden, 2 * layout.n_data, rng,
                         head_hidden=(40,))
    if kind in ("STA-DNN", "TRFI-DNN"):
        return init_mlp([2 * layout.n_on, 15, 15, 15, 2 * layout.n_on], rng)
    raise ConfigError(f"estimator {kind!r} has no trainable model")


def make_dataset(cfg: SimConfig, n_frames: int | None = None, snr_db: float | None = None,
                 kind: str | None = None, seed: int | None = None) -> Dataset:
    t = cfg.train
    return gen_dataset(t.frames if n_frames is None else n_frames,
                       t.snr_db if snr_db is None else snr_db,
                       cfg.layout, cfg.constellation, cfg.load_profile(), cfg.mobility,
                       kind or t.kind, t.seed if seed is None else seed)


def train_cmd(cfg: SimConfig, out_model, log_path=None, dataset: Dataset | None = None,
              resume=None):
    """Train the configured model and write it plus a per-epoch MSE log."""
    spec = cfg.train
    if dataset is None:
        dataset = make_dataset(cfg)
    if dataset.kind and dataset.kind != spec.kind:
        raise ConfigError(f"dataset is for {dataset.kind}, training {spec.kind}")
    if resume is not None:
        try:
            model, _ = load_model(resume)
        except (OSError, ModelFormatError) as exc:
            raise ModelError(f"cannot resume from {resume}: {exc}") from None
    else:
        model = new_model(spec.kind, cfg.layout, spec.hidden, np.random.default_rng(spec.seed))
    expect_seq = spec.kind in ("LSTM-DPA-TA", "LSTM-DNN-DPA")
    if expect_seq != isinstance(model, LstmParams) or (
            not expect_seq and not isinstance(model, MlpParams)):
        raise ModelError(f"model type does not fit estimator {spec.kind}")
    model, history = train(model, dataset, spec.train_config())
    meta = {"estimator": spec.kind, "epochs": spec.epochs, "batch_size": spec.batch_size,
            "learning_rate": spec.learning_rate, "train_snr_db": spec.snr_db,
            "train_frames": len(dataset), "final_mse": history[-1] if history else None}
    save_model(out_model, model, meta)
    if log_path is not None:
        with open(log_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "mse"])
            for e, loss in enumerate(history, 1):
                w.writerow([e, _num(loss)])
    log.info("trained %s for %d epochs, final MSE %s", spec.kind, spec.epochs,
             history[-1] if history else "n/a")
    return model, history


def eval_trace(cfg: SimConfig, snr_db: float, path, models: dict | None = None, trial: int = 0):
    """Write per-symbol estimates of every configured estimator for one frame."""
    models = load_models(cfg) if models is None else models
    layout, c = cfg.layout, cfg.constellation
    rng = trial_rng(cfg.seed, trial)
    grid = build_frame(random_payload(layout, c, rng, cfg.coding), layout, c, cfg.coding)
    ch = chan.gen_realization(cfg.load_profile(), cfg.mobility, layout, rng)
    rx = chan.apply_channel(grid, ch, snr_db, rng)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(est.TRACE_HEADER)
        for spec in cfg.estimators:
            tr = _run_estimator(spec, rx, ch, cfg, models)
            w.writerows(est.trace_rows(tr, ch, layout))
