"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 model error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from vchest import complexity, harness
from vchest import estimators as est
from vchest.neural import Dataset, TrainingError

EXIT_CONFIG = 2
EXIT_MODEL = 3


def _floats(text):
    return [float(s) for s in text.split(",") if s.strip()]


def _config(args) -> harness.SimConfig:
    cfg = harness.SimConfig.load(args.config) if args.config else harness.SimConfig()
    d = cfg.to_dict()
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    if getattr(args, "snr", None):
        d["snr_db"] = _floats(args.snr)
    if getattr(args, "frames", None) is not None:
        d["frames"] = args.frames
    if getattr(args, "estimators", None):
        wanted = [n.strip() for n in args.estimators.split(",") if n.strip()]
        existing = {e["name"]: e for e in d["estimators"]}
        d["estimators"] = [existing.get(n, {"name": n}) for n in wanted]
    return harness.SimConfig.from_dict(d)


def cmd_sweep(args):
    cfg = _config(args)
    records = harness.run_sweep(cfg)
    _, summary = harness.report(records, args.out)
    print(summary)
    if args.out:
        print(f"wrote {args.out}")


def cmd_gen_data(args):
    cfg = _config(args)
    ds = harness.make_dataset(cfg, n_frames=args.frames_train, snr_db=args.train_snr,
                              kind=args.kind)
    ds.save(args.out)
    print(f"wrote {len(ds)} {'sequences' if ds.inputs.ndim == 3 else 'samples'} "
          f"({ds.kind}) to {args.out}")


def cmd_train(args):
    cfg = _config(args)
    d = cfg.to_dict()
    for key, val in (("epochs", args.epochs), ("kind", args.kind), ("hidden", args.hidden),
                     ("frames", args.frames_train)):
        if val is not None:
            d["train"][key] = val
    cfg = harness.SimConfig.from_dict(d)
    dataset = Dataset.load(args.data) if args.data else None
    _, history = harness.train_cmd(cfg, args.out, args.log, dataset, args.resume)
    print(f"trained {cfg.train.kind}: {len(history)} epochs, final MSE "
          f"{history[-1] if history else float('nan'):.4e}; model -> {args.out}")


def cmd_eval(args):
    cfg = _config(args)
    harness.eval_trace(cfg, args.snr_point, args.out, trial=args.trial)
    print(f"wrote estimate traces to {args.out}")


def cmd_complexity(args):
    rows = complexity.figure_rows()
    if args.csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["estimator", "mul_div", "add_sub"])
        w.writerows(rows)
    else:
        print(f"{'estimator':<22} {'mul/div':>9} {'add/sub':>9}")
        for label, m, a in rows:
            print(f"{label:<22} {m:>9d} {a:>9d}")
        for P, (m, a) in complexity.reduction_report().items():
            print(f"P={P}: {m:.2f}% fewer mul/div, {a:.2f}% fewer add/sub vs LSTM-DNN-DPA")


def cmd_ta_ratio(args):
    print("q,closed_form,recursion,value")
    for q in range(1, args.q_max + 1):
        r = est.ta_noise_ratio(q)
        print(f"{q},{r},{est.ta_noise_ratio_recursive(q)},{float(r):.10f}")
    if args.empirical:
        rng = np.random.default_rng(args.seed or 0)
        ratios = est.ta_noise_experiment(args.trials, args.snr_point, args.q_max - 1, rng)
        print("q,measured,closed_form")
        for q, m in enumerate(ratios, 1):
            print(f"{q},{m:.6f},{float(est.ta_noise_ratio(q)):.6f}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vchest", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON simulation config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--snr", help="comma-separated SNR grid in dB")
        sp.add_argument("--frames", type=int, help="Monte-Carlo frames per SNR point")
        sp.add_argument("--estimators", help="comma-separated estimator names")

    sp = sub.add_parser("sweep", help="BER/NMSE Monte-Carlo sweep")
    common(sp)
    sp.add_argument("--out", help="metrics CSV path")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("gen-data", help="generate a training dataset")
    common(sp)
    sp.add_argument("--kind", help="estimator the dataset is for")
    sp.add_argument("--frames-train", type=int)
    sp.add_argument("--train-snr", type=float)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("train", help="train a model")
    common(sp)
    sp.add_argument("--kind")
    sp.add_argument("--hidden", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--frames-train", type=int)
    sp.add_argument("--data", help="dataset .npz from gen-data")
    sp.add_argument("--resume", help="model file to continue from")
    sp.add_argument("--log", help="per-epoch MSE CSV")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="dump per-symbol estimates for one frame")
    common(sp)
    sp.add_argument("--snr-point", type=float, default=30.0)
    sp.add_argument("--trial", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("complexity", help="operation-count table")
    sp.add_argument("--csv", action="store_true")
    sp.set_defaults(func=cmd_complexity)

    sp = sub.add_parser("ta-ratio", help="temporal-averaging noise ratio")
    sp.add_argument("--q-max", type=int, default=11)
    sp.add_argument("--empirical", action="store_true")
    sp.add_argument("--trials", type=int, default=100000)
    sp.add_argument("--snr-point", type=float, default=10.0)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_ta_ratio)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (harness.ModelError, TrainingError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    return 0


if __name__ == "__main__":
    sys.exit(main())
