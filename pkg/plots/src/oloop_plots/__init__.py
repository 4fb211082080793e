"""Sweep-figure rendering from experiment CSV files.

Reads the CSV schema emitted by the planning-experiment harness and draws
mean return against budget, horizon, or memory capacity: one panel per
domain, one series per (planner, prior rate) pair, shaded standard-error
bands.  The package never imports the experiment code; the CSV file is the
only interface.
"""

__version__ = "0.1.0"

from .frame import REQUIRED_COLUMNS, SweepFrame, SweepValidationError, series_tables
from .render import PLANNER_STYLES, plot_sweep

__all__ = [
    "PLANNER_STYLES",
    "REQUIRED_COLUMNS",
    "SweepFrame",
    "SweepValidationError",
    "plot_sweep",
    "series_tables",
]
