"""featx command line: list the registry, export features."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .extract import extract
from .registry import REGISTRY, RegistryError, all_ids, lookup


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featx", description="frozen-backbone deep-feature exporter")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-models", help="print the backbone registry")
    p.set_defaults(func=_cmd_list)

    p = sub.add_parser("extract", help="export FSET1 features for one backbone")
    p.add_argument("--model", required=True, help="extractor id")
    p.add_argument("--in", dest="dataset", type=Path, required=True,
                   help="dataset dir with one subdirectory per class")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--weights", choices=("random", "pretrained"),
                   default="random")
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--skip-prep", action="store_true",
                   help="inputs are already cropped to the model resolution")
    p.set_defaults(func=_cmd_extract)
    return parser


def _cmd_list(args) -> int:
    for ident in all_ids():
        entry = REGISTRY[ident]
        print(f"{ident:28s} {entry.kind:4s} res={entry.input_resolution} "
              f"dim={entry.feature_dim:5d} family={entry.family_key}")
    return 0


def _cmd_extract(args) -> int:
    entry = lookup(args.model)
    path = extract(args.dataset, entry, args.out,
                   pretrained=args.weights == "pretrained",
                   batch_size=args.batch_size, skip_prep=args.skip_prep)
    print(f"wrote {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RegistryError as exc:
        print(f"registry error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
