"""Figure regeneration from chemorep CSV time series."""

from .cli import SCHEMA, SchemaError, SeriesBundle, load_series, main, plot_series

__all__ = [
    "SCHEMA",
    "SchemaError",
    "SeriesBundle",
    "load_series",
    "main",
    "plot_series",
]
