"""Command-line entry point.

    plot --in <dir> --out <dir> [--stat <name>]

Without ``--stat`` the input directory (one experiment or a directory
of experiments) becomes a full report with an index page.  With
``--stat`` the input must be a single experiment directory and exactly
that statistic is rendered.
"""

from __future__ import annotations

import argparse
import sys

from .figures import plot_report, plot_scaling
from .reader import PlotDataError, load_series_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render scaling figures from experiment outputs.")
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="experiment output directory (or parent)")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory for rendered figures")
    parser.add_argument("--stat", default=None,
                        help="render only this statistic")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.stat is None:
            index = plot_report(args.in_dir, args.out_dir)
            print(index)
        else:
            series_file = load_series_file(args.in_dir)
            rendered = plot_scaling(
                series_file, args.stat,
                f"{args.out_dir}/{args.stat}.png")
            print(f"{rendered.path}  [{rendered.annotation}]")
    except (PlotDataError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
