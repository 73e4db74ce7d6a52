"""Deterministic output formats: diagnostics CSV, field snapshots, summaries.

Three artifact kinds, all byte-stable across reruns with the same config
and seed on one platform:

* Diagnostics CSV — ``#``-prefixed header lines embedding the resolved
  config as ``key = value`` pairs, one column-name row, then one row per
  record with floats printed as their shortest round-trip decimal
  (``repr``).  An interrupted run ends with a ``# truncated`` line.
* Snapshot ``CHSNAP1`` — one ASCII header line
  ``CHSNAP1 ndim n1 [n2 n3] L1 [L2 L3] t`` followed by the phase block and
  the nutrient block, IEEE-754 binary64 little-endian, x index fastest.
* Summary — a single JSON document with sorted keys.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .diagnostics import DiagnosticsRecord
from .dynamics import State
from .errors import CorruptSnapshot, ParseError
from .grid import Grid

CSV_COLUMNS = (
    "t",
    "phi_mean",
    "sigma_mean",
    "E",
    "F",
    "D",
    "energy_balance_residual",
    "min_phi",
    "max_phi",
    "delta",
    "newton_iters",
    "htilde_sup",
)

TRUNCATION_MARKER = "# truncated"


def format_value(value) -> str:
    """Shortest round-trip decimal for floats, plain digits for ints."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def config_header_lines(resolved: Sequence[tuple[str, str]], command: str) -> list[str]:
    lines = [f"# chlab {command}"]
    lines.extend(f"# {key} = {value}" for key, value in resolved)
    return lines


class CSVWriter:
    """Streaming diagnostics writer; rows land on disk as they arrive."""

    def __init__(self, path, header_lines: Iterable[str] = ()):
        self.path = Path(path)
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        for line in header_lines:
            self._fh.write(line + "\n")
        self._fh.write(",".join(CSV_COLUMNS) + "\n")
        self._closed = False

    def write(self, record: DiagnosticsRecord) -> None:
        values = (
            record.t,
            record.phi_mean,
            record.sigma_mean,
            record.E,
            record.F,
            record.D,
            record.energy_balance_residual,
            record.min_phi,
            record.max_phi,
            record.delta,
            record.newton_iters,
            record.htilde_sup,
        )
        self._fh.write(",".join(format_value(v) for v in values) + "\n")

    def close(self, truncated: bool = False) -> None:
        if self._closed:
            return
        if truncated:
            self._fh.write(TRUNCATION_MARKER + "\n")
        self._fh.flush()
        self._fh.close()
        self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close(truncated=exc_type is not None)
        return False


def read_csv(path) -> tuple[dict[str, str], dict[str, np.ndarray], bool]:
    """Read a diagnostics CSV back: (header metadata, columns, truncated).

    Header metadata maps the ``key = value`` pairs of the ``#`` lines;
    columns come back as float arrays except ``newton_iters`` (int).
    """
    meta: dict[str, str] = {}
    rows: list[list[str]] = []
    columns: Optional[list[str]] = None
    truncated = False
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if line == TRUNCATION_MARKER:
                    truncated = True
                    continue
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            parts = line.split(",")
            if columns is None:
                columns = parts
                if tuple(columns) != CSV_COLUMNS:
                    raise ParseError(
                        f"unexpected column row in {path}: {','.join(columns)}"
                    )
                continue
            if len(parts) != len(columns):
                raise ParseError(
                    f"row with {len(parts)} fields under {len(columns)} columns in {path}"
                )
            rows.append(parts)
    if columns is None:
        raise ParseError(f"no column row found in {path}")
    data: dict[str, np.ndarray] = {}
    for j, name in enumerate(columns):
        raw_col = [row[j] for row in rows]
        if name == "newton_iters":
            data[name] = np.array([int(v) for v in raw_col], dtype=np.int64)
        else:
            data[name] = np.array([float(v) for v in raw_col], dtype=np.float64)
    return meta, data, truncated


# ----------------------------------------------------------------------
# CHSNAP1 snapshots
# ----------------------------------------------------------------------


def write_snapshot(path, state: State) -> None:
    """Write one ``CHSNAP1`` snapshot of the coupled fields."""
    g = state.grid
    g._check(state.phi, state.sigma)
    parts = ["CHSNAP1", str(g.ndim)]
    parts.extend(str(n) for n in g.n_per_axis)
    parts.extend(repr(L) for L in g.length_per_axis)
    parts.append(repr(float(state.t)))
    header = " ".join(parts) + "\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.asarray(state.phi, dtype="<f8").flatten(order="F").tobytes())
        fh.write(np.asarray(state.sigma, dtype="<f8").flatten(order="F").tobytes())


def read_snapshot(path) -> tuple[Grid, np.ndarray, np.ndarray, float]:
    """Read a ``CHSNAP1`` snapshot: (grid, phi, sigma, t).

    Raises :class:`CorruptSnapshot` on a bad magic line, malformed header,
    or a byte count that disagrees with the header.
    """
    with open(path, "rb") as fh:
        header = fh.readline()
        body = fh.read()
    try:
        text = header.decode("ascii").strip()
    except UnicodeDecodeError as exc:
        raise CorruptSnapshot(f"{path}: header is not ASCII") from exc
    parts = text.split()
    if not parts or parts[0] != "CHSNAP1":
        raise CorruptSnapshot(f"{path}: missing CHSNAP1 magic")
    try:
        ndim = int(parts[1])
        if ndim not in (1, 2, 3) or len(parts) != 2 + 2 * ndim + 1:
            raise ValueError
        ns = tuple(int(v) for v in parts[2 : 2 + ndim])
        lengths = tuple(float(v) for v in parts[2 + ndim : 2 + 2 * ndim])
        t = float(parts[2 + 2 * ndim])
    except (ValueError, IndexError) as exc:
        raise CorruptSnapshot(f"{path}: malformed header {text!r}") from exc
    try:
        grid = Grid(ns, lengths)
    except ValueError as exc:
        raise CorruptSnapshot(f"{path}: invalid grid in header: {exc}") from exc
    count = grid.node_count
    expected = 2 * count * 8
    if len(body) != expected:
        raise CorruptSnapshot(
            f"{path}: expected {expected} data bytes for two {ns} fields, "
            f"got {len(body)}"
        )
    flat = np.frombuffer(body, dtype="<f8")
    phi = flat[:count].reshape(grid.shape, order="F").copy()
    sigma = flat[count:].reshape(grid.shape, order="F").copy()
    return grid, phi, sigma, t


# ----------------------------------------------------------------------
# JSON summary
# ----------------------------------------------------------------------


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


def write_summary(path, payload: dict) -> None:
    """Write the run summary as one sorted-keys JSON document.

    Non-finite floats are stored as their string spelling so the document
    stays strict JSON.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def record_to_dict(record: DiagnosticsRecord) -> dict:
    return {
        "t": record.t,
        "phi_mean": record.phi_mean,
        "sigma_mean": record.sigma_mean,
        "E": record.E,
        "F": record.F,
        "D": record.D,
        "energy_balance_residual": record.energy_balance_residual,
        "min_phi": record.min_phi,
        "max_phi": record.max_phi,
        "delta": record.delta,
        "newton_iters": record.newton_iters,
        "htilde_sup": record.htilde_sup,
    }
