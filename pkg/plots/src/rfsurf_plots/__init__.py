"""Figure reports for the random-surface lattice experiments.

A read-only consumer of the simulation package's output contract
(``results.csv``, ``manifest.json``, ``series.json``): it renders the
scaling figures with the fits the simulation side stored and builds a
browsable index per batch of runs.
"""

from .figures import RenderedFigure, plot_report, plot_scaling
from .reader import (CSV_COLUMNS, PlotDataError, Point, ResultRow, Series,
                     SeriesFile, load_series_file)

__all__ = [
    "CSV_COLUMNS",
    "PlotDataError",
    "Point",
    "RenderedFigure",
    "ResultRow",
    "Series",
    "SeriesFile",
    "load_series_file",
    "plot_report",
    "plot_scaling",
]

__version__ = "0.1.0"
