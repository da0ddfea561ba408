"""Command line entry point: ``gearline <stage> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from gearline.config import ConfigError, RunConfig, load_config
from gearline.dataset_io import DatasetError, load_manifest
from gearline import pipeline as pl

log = logging.getLogger("gearline")


def _config(args) -> RunConfig | None:
    cfg = load_config(args.config) if args.config else None
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "strict_io", None) is not None:
        overrides["strict_io"] = args.strict_io
    if overrides:
        cfg = replace(cfg or RunConfig(), **overrides)
    return cfg


def _add_common(p, seed=True):
    p.add_argument("--config", type=Path, help="run configuration JSON (defaults built in)")
    if seed:
        p.add_argument("--seed", type=int, help="override the configured root seed")
    p.add_argument("--strict-io", action=argparse.BooleanOptionalAction, default=None,
                   help="demand 50 kHz / 2^18-sample records (default from config)")


def cmd_synth(args):
    cfg = _config(args) or RunConfig()
    manifest = pl.cmd_synth(cfg, args.out)
    print(f"wrote {len(manifest)} records to {args.out}")


def cmd_extract(args):
    cfg = _config(args) or RunConfig()
    store = pl.cmd_extract(args.manifest, cfg, args.out, jobs=args.jobs)
    print(f"{len(store.paths)} records x {len(store.names)} features -> {args.out}")


def cmd_train(args):
    cfg = _config(args) or RunConfig()
    b = pl.cmd_train(pl.read_feature_store(args.features), load_manifest(args.manifest), cfg, args.out)
    print(f"trained {len(b.models)} {cfg.occ_kind} models -> {args.out}")


def cmd_calibrate(args):
    b = pl.load_bundle(args.bundle, _config(args))
    out = args.out or args.bundle
    b = pl.cmd_calibrate(b, pl.read_feature_store(args.features), load_manifest(args.manifest), out)
    for run, th in zip(b.runs, b.thresholds):
        print(f"run {run}: t_e={th.t_e:.6f} t_w={th.t_w:.6f}")
    print(f"selected run {b.runs[b.selected]} -> {out}")


def cmd_evaluate(args):
    b = pl.load_bundle(args.bundle, _config(args))
    result = pl.cmd_evaluate(b, pl.read_feature_store(args.features), load_manifest(args.manifest), args.out, args.split)
    sys.stdout.write(pl.report_csv(result))


def cmd_predict(args):
    b = pl.load_bundle(args.bundle, _config(args))
    verdict, score = pl.cmd_predict(b, args.wav, args.mode, args.strict_io)
    print(json.dumps({"verdict": verdict, "score": score}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gearline", description="Acoustic end-of-line anomaly detection for geared motors")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic dataset")
    _add_common(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="band-pass and extract features into a CSV store")
    _add_common(p)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="feature store CSV")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit preprocessing and one-class models on the training split")
    _add_common(p)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="model bundle")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="extract thresholds from the validation split")
    _add_common(p)
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--out", type=Path, help="calibrated bundle (default: overwrite --bundle)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="write the report and disturbance breakdown")
    _add_common(p)
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--split", choices=("validation", "disturbance"), help="split for the _t metrics")
    p.add_argument("--out", type=Path, required=True, help="report directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="verdict for one WAV record")
    _add_common(p)
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--mode", choices=("selected", "majority"))
    p.add_argument("wav", type=Path)
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ConfigError, DatasetError, pl.PipelineError, OSError, ValueError) as exc:
        print(f"gearline {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
