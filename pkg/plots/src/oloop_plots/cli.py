"""Command-line entry point: ``oloop-plot --csv FILE --x AXIS --out DIR``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .frame import SweepValidationError
from .render import plot_sweep

__all__ = ["build_parser", "main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oloop-plot",
        description="Render sweep figures (mean return with standard-error "
        "bands) from an experiment CSV.",
    )
    parser.add_argument("--csv", required=True, help="sweep CSV file")
    parser.add_argument(
        "--x",
        required=True,
        choices=("budget", "horizon", "memory"),
        help="which swept quantity to put on the x axis",
    )
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = plot_sweep(args.csv, args.x, args.out)
    except (SweepValidationError, FileNotFoundError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0
