"""Readers for the laboratory's on-disk artifact formats.

Implemented directly against the documented file layouts — CSV tables
with ``#`` metadata header lines and ``CHSNAP1`` binary field snapshots —
so this package stays a strictly read-only consumer: it never imports the
solver that produced the files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRUNCATION_MARKER = "# truncated"
SNAPSHOT_MAGIC = "CHSNAP1"
_MAX_HEADER_BYTES = 4096


class VizError(Exception):
    """Base class for everything raised by this package."""


class ParseError(VizError):
    """A CSV table or its metadata header could not be understood."""


class MissingColumn(VizError):
    """A plot kind needs a column the table does not provide."""


class CorruptSnapshot(VizError):
    """A snapshot file fails its magic, header, or size checks."""


@dataclass(frozen=True)
class Table:
    """One parsed CSV artifact.

    ``command`` is the producing subcommand from the first header line,
    ``meta`` the ``key = value`` pairs echoed into the header, ``data``
    a float matrix with one row per record, and ``truncated`` whether the
    file carries the interrupted-run marker.
    """

    command: str
    meta: dict[str, str]
    columns: tuple[str, ...]
    data: np.ndarray
    truncated: bool

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise MissingColumn(
                f"table has no column {name!r} (columns: {', '.join(self.columns)})"
            )
        return self.data[:, self.columns.index(name)]

    def has_column(self, name: str) -> bool:
        return name in self.columns

    def meta_float(self, key: str) -> float:
        if key not in self.meta:
            raise ParseError(f"table header missing {key!r}")
        try:
            return float(self.meta[key])
        except ValueError:
            raise ParseError(f"table header {key!r} is not numeric: {self.meta[key]!r}")


def read_table(path: str | Path) -> Table:
    """Parse a diagnostics or measurement CSV written by the laboratory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}")

    command = ""
    meta: dict[str, str] = {}
    columns: tuple[str, ...] = ()
    rows: list[list[float]] = []
    truncated = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if line.strip() == TRUNCATION_MARKER:
                truncated = True
                continue
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            elif body and not command:
                command = body.split()[-1]
            continue
        if not columns:
            columns = tuple(part.strip() for part in line.split(","))
            continue
        parts = line.split(",")
        if len(parts) != len(columns):
            raise ParseError(
                f"{path}:{lineno}: expected {len(columns)} fields, got {len(parts)}"
            )
        try:
            rows.append([float(part) for part in parts])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}")
    if not columns:
        raise ParseError(f"{path}: no column row found")
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(columns)))
    return Table(command=command, meta=meta, columns=columns, data=data,
                 truncated=truncated)


@dataclass(frozen=True)
class Snapshot:
    """One parsed CHSNAP1 field snapshot."""

    n_per_axis: tuple[int, ...]
    length_per_axis: tuple[float, ...]
    t: float
    phi: np.ndarray
    sigma: np.ndarray

    @property
    def ndim(self) -> int:
        return len(self.n_per_axis)


def read_snapshot(path: str | Path) -> Snapshot:
    """Parse a CHSNAP1 snapshot: one ASCII header line, then the phase and
    nutrient fields as little-endian float64 blocks, x varying fastest."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CorruptSnapshot(f"cannot read {path}: {exc}")

    newline = raw.find(b"\n", 0, _MAX_HEADER_BYTES)
    if newline < 0:
        raise CorruptSnapshot(f"{path}: no header line found")
    try:
        header = raw[:newline].decode("ascii")
    except UnicodeDecodeError:
        raise CorruptSnapshot(f"{path}: header is not ASCII")
    tokens = header.split()
    if not tokens or tokens[0] != SNAPSHOT_MAGIC:
        raise CorruptSnapshot(f"{path}: bad magic {tokens[:1]!r}")
    try:
        ndim = int(tokens[1])
    except (IndexError, ValueError):
        raise CorruptSnapshot(f"{path}: malformed dimension count")
    if not 1 <= ndim <= 3:
        raise CorruptSnapshot(f"{path}: unsupported dimension {ndim}")
    if len(tokens) != 2 + 2 * ndim + 1:
        raise CorruptSnapshot(
            f"{path}: header has {len(tokens)} tokens, expected {2 + 2 * ndim + 1}"
        )
    try:
        n_per_axis = tuple(int(tok) for tok in tokens[2:2 + ndim])
        length_per_axis = tuple(float(tok) for tok in tokens[2 + ndim:2 + 2 * ndim])
        t = float(tokens[-1])
    except ValueError as exc:
        raise CorruptSnapshot(f"{path}: malformed header value: {exc}")
    if any(n < 3 for n in n_per_axis):
        raise CorruptSnapshot(f"{path}: node counts must be >= 3, got {n_per_axis}")
    if any(not (length > 0.0 and np.isfinite(length)) for length in length_per_axis):
        raise CorruptSnapshot(f"{path}: lengths must be positive, got {length_per_axis}")

    count = int(np.prod(n_per_axis))
    body = raw[newline + 1:]
    if len(body) != 2 * count * 8:
        raise CorruptSnapshot(
            f"{path}: body holds {len(body)} bytes, expected {2 * count * 8}"
        )
    flat = np.frombuffer(body, dtype="<f8")
    phi = flat[:count].reshape(n_per_axis, order="F").copy()
    sigma = flat[count:].reshape(n_per_axis, order="F").copy()
    return Snapshot(n_per_axis=n_per_axis, length_per_axis=length_per_axis,
                    t=t, phi=phi, sigma=sigma)
