"""Command line entry: riskfigs --input <csv|json> --kind <kind> --output <path>."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

from .figures import FIGURE_KINDS, FigureError, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskfigs",
        description="Render figures from the training CLI's CSV/JSON outputs.",
    )
    parser.add_argument("--input", required=True, help="source CSV or metadata JSON")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--output", required=True,
                        help="output path; .svg and .png are written next to its stem")
    parser.add_argument("--title", default=None)
    parser.add_argument("--xlabel", default=None)
    parser.add_argument("--ylabel", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            input=args.input, kind=args.kind, output=args.output,
            title=args.title, xlabel=args.xlabel, ylabel=args.ylabel,
        )
        paths = render(spec)
    except FigureError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for p in paths:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
