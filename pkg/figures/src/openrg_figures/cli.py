"""Command line: render one figure from openrg table output."""

from __future__ import annotations

import argparse
import sys

from .figspec import FIGURE_IDS, FigureSpec, SchemaError
from .render import render

EXIT_OK = 0
EXIT_CONFIG = 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="openrg-figures",
        description="Render static figures from openrg CSV tables.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render")
    p.add_argument("--figure", required=True, choices=FIGURE_IDS)
    p.add_argument("--input", required=True, action="append",
                   help="input CSV; repeat for figures with several tables")
    p.add_argument("--out", required=True)
    p.add_argument("--sector-cmap", default="coolwarm")
    return parser


def run(argv):
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(args.figure, tuple(args.input), args.out,
                          sector_cmap=args.sector_cmap)
        out = render(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {out}")
    return EXIT_OK


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
