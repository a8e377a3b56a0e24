"""Adapter CLI: export provider files or serve the scoring endpoints."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import AdapterConfigError, load_config
from .export import export_embeddings, export_nli
from .service import serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adapter",
        description="Produce embeddings/NLI files or serve them over HTTP",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("export-embeddings", "write embeddings.jsonl for a candidates file"),
        ("export-nli", "write nli.jsonl for a candidates file"),
        ("serve", "run the /v1/embed + /v1/entail HTTP service"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="adapter config JSON")
        if name.startswith("export"):
            cmd.add_argument("--candidates", help="override the configured candidates path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config)
        if args.command == "export-embeddings":
            path = export_embeddings(cfg, args.candidates)
            print(f"wrote {path}")
        elif args.command == "export-nli":
            path = export_nli(cfg, args.candidates)
            print(f"wrote {path}")
        else:
            serve(cfg)
        return 0
    except AdapterConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
