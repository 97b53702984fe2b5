"""Command line plotting of optimizer run artifacts.

Reads only the documented output files (fields.vtk, history.csv) of a run
directory and writes a figure. Exit code 0 on success, nonzero with a
message on stderr otherwise.
"""

from __future__ import annotations

import argparse
import sys

from .render import FIELDS, PlotJob, render
from .vtk_reader import VtkFormatError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fgm-plot",
        description="Render contour figures and convergence curves from run artifacts",
    )
    parser.add_argument("--field", required=True, choices=FIELDS,
                        help="what to draw: vf, stress, temperature or history")
    parser.add_argument("--in", dest="input_dir", required=True,
                        help="run output directory (contains fields.vtk / history.csv)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--cmap", default="viridis")
    parser.add_argument("--vmin", type=float, default=None)
    parser.add_argument("--vmax", type=float, default=None)
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = PlotJob(input_dir=args.input_dir, fields=args.field, output=args.out,
                      cmap=args.cmap, vmin=args.vmin, vmax=args.vmax, dpi=args.dpi)
        result = render(job)
    except (OSError, ValueError, VtkFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
