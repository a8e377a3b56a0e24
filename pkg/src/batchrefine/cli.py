"""Command-line entry point.

Exit codes: 0 success, 1 validation/data failure, 2 provider failure,
3 config error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .config import load_config
from .errors import ConfigError, ProviderError, RefineError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PROVIDER = 2
EXIT_CONFIG = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refine",
        description="Select the best candidate per input from batched LLM samples",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the run config JSON")
        return cmd

    add("validate", "check input files for schema and coverage problems")

    score = add("score", "compute stability, entailment and uncertainty scores")
    score.add_argument("--workers", type=int, default=1, help="parallel scoring workers")
    score.add_argument("--force", action="store_true", help="score despite validation errors")

    add("tune", "grid-search fusion coefficients on the validation metric")

    select = add("select", "write per-sample selections")
    select.add_argument(
        "--methods",
        default="ceret",
        help="comma-separated subset of ceret,no_refinement,self_consistency,oracle or 'all'",
    )

    evaluate = add("eval", "aggregate the selection metrics into a report")
    evaluate.add_argument("--methods", default=None, help="restrict evaluation to these methods")
    return parser


def _run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.command == "validate":
        diagnostics = pipeline.cmd_validate(cfg)
        for line in diagnostics.lines():
            print(line)
        summary = f"{len(diagnostics.errors)} errors, {len(diagnostics.warnings)} warnings"
        print(f"validate: {summary}")
        return EXIT_OK if diagnostics.clean else EXIT_VALIDATION
    if args.command == "score":
        path = pipeline.cmd_score(cfg, workers=args.workers, force=args.force)
        print(f"wrote {path}")
        return EXIT_OK
    if args.command == "tune":
        best_path, sweep_path = pipeline.cmd_tune(cfg)
        print(f"wrote {best_path}")
        print(f"wrote {sweep_path}")
        return EXIT_OK
    if args.command == "select":
        path = pipeline.cmd_select(cfg, methods=pipeline.parse_methods(args.methods))
        print(f"wrote {path}")
        return EXIT_OK
    # eval
    report_path, report = pipeline.cmd_eval(cfg, methods=args.methods)
    print(f"metric: {report.metric_name}")
    for name, agg in report.methods.items():
        print(f"  {name:<18} {agg.aggregate:6.1f}  (n={agg.n})")
    print(f"wrote {report_path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except RefineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
