"""Command-line entry points: features, encode, compare, report, probe,
selftest."""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .config import load_config


def _add_common(parser: argparse.ArgumentParser, config_required=True):
    parser.add_argument("--config", required=config_required, help="run config file")
    parser.add_argument("--seed", type=int, default=None, help="override master seed")
    parser.add_argument("--jobs", type=int, default=None, help="worker pool size")
    parser.add_argument("--out", default=None, help="override output directory")


def _load(args) -> "pipeline.RunConfig":
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.out is not None:
        cfg.out = args.out
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neurosyntax",
        description="Syntactic feature spaces and voxelwise fMRI encoding models",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("features", help="build feature-space matrices")
    _add_common(p)
    p.add_argument("--space", action="append", help="restrict to one space (repeatable)")

    p = sub.add_parser("encode", help="fit cross-validated ridge models")
    _add_common(p)
    p.add_argument("--group", action="append", help='feature group, e.g. "CC+PD"')

    p = sub.add_parser("compare", help="run a significance study")
    _add_common(p)
    p.add_argument(
        "--mode",
        choices=("individual", "hierarchical", "pairwise"),
        action="append",
        help="study mode (repeatable; default: all three)",
    )

    p = sub.add_parser("report", help="emit CSV/JSON/SVG summaries")
    _add_common(p)

    p = sub.add_parser("probe", help="word-level semantic probe")
    _add_common(p)
    p.add_argument("--space", action="append")

    p = sub.add_parser("selftest", help="run built-in smoke checks")
    _add_common(p, config_required=False)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.verb == "selftest":
        return 0 if pipeline.cmd_selftest() else 1
    cfg = _load(args)
    if args.verb == "features":
        pipeline.cmd_features(cfg, spaces=args.space)
    elif args.verb == "encode":
        pipeline.cmd_encode(cfg, groups=args.group)
    elif args.verb == "compare":
        for mode in args.mode or ("individual", "hierarchical", "pairwise"):
            pipeline.cmd_compare(cfg, mode)
    elif args.verb == "report":
        pipeline.cmd_report(cfg)
    elif args.verb == "probe":
        results = pipeline.cmd_probe(cfg, spaces=args.space)
        for space in sorted(results):
            print(f"{space}\t{results[space]:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
