"""Figure rendering for gnmlab CSV outputs.

Reads the delimited files the gnmlab CLI writes (sweep grids, neuron
traces, stochastic trajectory bundles, model comparisons) and renders
them to image files.  This package never imports gnmlab; the CSV
formats are the only contract.
"""

from .figures import render_comparison, render_crn_overlay, render_heatmap, render_trace
from .io import (
    CompareTable,
    CrnTable,
    SchemaError,
    SweepTable,
    TraceTable,
    read_compare,
    read_crn,
    read_sweep,
    read_trace,
)

__version__ = "0.1.0"

__all__ = [
    "CompareTable",
    "CrnTable",
    "SchemaError",
    "SweepTable",
    "TraceTable",
    "read_compare",
    "read_crn",
    "read_sweep",
    "read_trace",
    "render_comparison",
    "render_crn_overlay",
    "render_heatmap",
    "render_trace",
]
