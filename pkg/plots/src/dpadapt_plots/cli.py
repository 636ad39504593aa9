"""Command-line entry point: `dpadapt-plots render --csv <aggregate.csv>
--metric <spectral_norm|test_mse> --out <chart.svg>`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import METRIC_LABELS, PlotSpec, RenderError, render

EXIT_OK = 0
EXIT_INPUT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpadapt-plots",
        description="Render charts from experiment aggregate CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)
    pr = sub.add_parser("render", help="render one metric chart")
    pr.add_argument("--csv", required=True, help="aggregate CSV path")
    pr.add_argument("--metric", required=True, choices=sorted(METRIC_LABELS))
    pr.add_argument("--out", required=True, help="output image path (.svg)")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        render(PlotSpec(csv_path=Path(args.csv), out_path=Path(args.out),
                        metric=args.metric))
    except RenderError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
