"""Command-line entry: render sweep or planner-table figures from CSVs."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .schema import DataError, SchemaError
from .sweep_plot import FigureSpec, plot_sweep
from .value_plot import plot_value_table


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figure-gen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="power-vs-sum-rate comparison figure")
    p_sweep.add_argument("inputs", nargs="+", help="sweep CSV path(s)")
    p_sweep.add_argument("--output", "-o", required=True, help="image output path")
    p_sweep.add_argument("--psi", type=float, help="keep only rows with this rate ratio")
    p_sweep.add_argument(
        "--annotate-gap",
        action="store_true",
        help="mark the widest single-user vs joint-bisection gap",
    )

    p_table = sub.add_parser("table", help="planner value-surface heatmaps")
    p_table.add_argument("input", help="planner-table CSV path")
    p_table.add_argument("--output", "-o", required=True, help="image output path")
    p_table.add_argument("--slot", type=int, help="render a single slot only")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            plot_sweep(
                FigureSpec(
                    inputs=tuple(args.inputs),
                    output=args.output,
                    psi=args.psi,
                    annotate_gap=args.annotate_gap,
                )
            )
        else:
            plot_value_table(args.input, args.output, args.slot)
    except (SchemaError, DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
