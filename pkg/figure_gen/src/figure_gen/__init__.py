"""Figure rendering for beam-alignment sweep and planner-table CSVs."""

from .schema import (
    SWEEP_HEADER,
    VALUE_HEADER,
    DataError,
    SchemaError,
    SweepPoint,
    ValuePoint,
    read_sweep_csv,
    read_value_csv,
)
from .sweep_plot import FigureSpec, max_single_user_gap, plot_sweep
from .value_plot import bisection_ridge, plot_value_table

__all__ = [
    "SWEEP_HEADER",
    "VALUE_HEADER",
    "DataError",
    "SchemaError",
    "SweepPoint",
    "ValuePoint",
    "FigureSpec",
    "bisection_ridge",
    "max_single_user_gap",
    "plot_sweep",
    "plot_value_table",
    "read_sweep_csv",
    "read_value_csv",
]
