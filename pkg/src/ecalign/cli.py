"""Batch command line interface.

Verbs:
  validate  check a config file and its referenced inputs
  run       execute pipeline stages (cached, dependency ordered)
  report    build the report bundle from existing artifacts
  synth     generate the bundled synthetic dataset from a seed
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import EcalignError
from .pipeline import STAGE_ORDER, run_pipeline
from .report import emit_report
from .synth import DEFAULT_SEED, generate_dataset, write_dataset


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecalign",
        description="Trade-based complexity, relatedness and sustainability pipeline",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("--config", required=True)

    p_run = sub.add_parser("run", help="run pipeline stages")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--stages", help=f"comma list from: {','.join(STAGE_ORDER)}")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--out", help="override the config output directory")

    p_rep = sub.add_parser("report", help="emit the report bundle")
    p_rep.add_argument("--config", required=True)
    p_rep.add_argument("--out", help="override the config output directory")

    p_syn = sub.add_parser("synth", help="write the synthetic dataset and a config")
    p_syn.add_argument("--out", required=True, help="directory for the dataset")
    p_syn.add_argument("--seed", type=int, default=DEFAULT_SEED)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            cfg.validate()
            print(f"config OK: {args.config}")

        elif args.command == "run":
            cfg = load_config(args.config, out_override=args.out,
                              seed_override=args.seed)
            cfg.validate()
            stages = args.stages.split(",") if args.stages else None
            manifest = run_pipeline(cfg, stages)
            n_files = sum(len(v) for v in manifest.values())
            print(f"pipeline done: {n_files} artifact files under {cfg.out_dir}")

        elif args.command == "report":
            cfg = load_config(args.config, out_override=args.out)
            out = emit_report(cfg)
            print(f"report bundle written to {out}")

        elif args.command == "synth":
            data = generate_dataset(args.seed)
            paths = write_dataset(data, Path(args.out), seed=args.seed)
            print(f"synthetic dataset written: {paths['config']}")

    except (EcalignError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
