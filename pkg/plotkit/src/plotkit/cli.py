"""plotkit command line: `plotkit <figure-kind> --in <run dirs...> --out <file>`."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, render
from .io import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Figures from vortexlab run directories")
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="run directories")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default="", help="figure title")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        entries = render(FigureSpec(kind=args.kind, inputs=tuple(args.inputs),
                                    output=args.out, title=args.title))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = " ".join(f"{k}={v}" for k, v in entries.items() if k != "kind")
    print(f"{args.out}: {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
