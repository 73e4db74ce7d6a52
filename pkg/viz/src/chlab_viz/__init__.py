"""Read-only figure generation for laboratory artifacts."""

from .formats import (
    CorruptSnapshot,
    MissingColumn,
    ParseError,
    Snapshot,
    Table,
    VizError,
    read_snapshot,
    read_table,
)
from .plots import KINDS, PlotSpec, RenderResult, render

__all__ = [
    "CorruptSnapshot",
    "MissingColumn",
    "ParseError",
    "Snapshot",
    "Table",
    "VizError",
    "read_snapshot",
    "read_table",
    "KINDS",
    "PlotSpec",
    "RenderResult",
    "render",
]
