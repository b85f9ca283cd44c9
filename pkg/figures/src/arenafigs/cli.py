"""CLI: render one figure kind from an analysis CSV."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arenafigs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render a figure from an analysis CSV")
    p.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    p.add_argument("--csv", required=True, help="input analysis CSV")
    p.add_argument("--out", required=True, help="output image path (.png or .svg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = render(args.csv, args.kind, args.out)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
