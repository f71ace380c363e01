"""render: turn a gnmlab CSV into a figure.

    render --kind heatmap     --in sweep.csv      --out sweep.png [--cap N]
    render --kind trace       --in trace.csv      --out trace.png
    render --kind crn-overlay --in trajectories.csv --out crn.png
    render --kind comparison  --in compare.csv    --out compare.png

Exit codes: 0 success, 1 unusable input or options (including schema
mismatch), 2 unexpected runtime failure.  On error no output file is
written.
"""

from __future__ import annotations

import argparse
import sys

from .figures import render_comparison, render_crn_overlay, render_heatmap, render_trace
from .io import SchemaError, read_compare, read_crn, read_sweep, read_trace

KINDS = ("heatmap", "trace", "crn-overlay", "comparison")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="render", description=__doc__)
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="input", required=True, help="input CSV")
    parser.add_argument("--out", dest="output", required=True, help="output image")
    parser.add_argument("--cap", type=int, default=None,
                        help="heatmap color-scale cap (default: the CSV's cap column)")
    return parser


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse reports its own message
        return 0 if exc.code == 0 else 1
    try:
        if ns.kind == "heatmap":
            render_heatmap(read_sweep(ns.input), ns.output, cap=ns.cap)
        elif ns.kind == "trace":
            render_trace(read_trace(ns.input), ns.output)
        elif ns.kind == "crn-overlay":
            render_crn_overlay(read_crn(ns.input), ns.output)
        else:
            render_comparison(read_compare(ns.input), ns.output)
    except (SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {ns.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
