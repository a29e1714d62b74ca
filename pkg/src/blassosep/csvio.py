"""CSV files for signals, spikes and reports.

Floats are written with ``repr``, the shortest string that parses back to
the same double, so every file round-trips bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BlassoSepError, GridMismatch, NonFiniteInput
from .measures import SparseMeasure
from .operators import Grid, GridSignal, MultiChannelSignal

__all__ = [
    "CsvFormatError", "write_signal_csv", "read_signal_csv", "write_channels_csv",
    "read_channels_csv", "write_mixture_csv", "read_mixture_csv", "write_spikes_csv",
    "read_spikes_csv", "write_rows_csv", "write_json",
]


class CsvFormatError(BlassoSepError, ValueError):
    """A file is missing, truncated, or does not have the expected columns."""


def _fmt(x) -> str:
    return repr(float(x))


def write_rows_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([str(v) if isinstance(v, (int, np.integer, str)) else _fmt(v)
                        for v in row])


def _read_table(path, first: str | None = None):
    path = Path(path)
    if not path.is_file():
        raise CsvFormatError(f"{path}: no such file")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvFormatError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if first is not None and (not header or header[0] != first):
        raise CsvFormatError(f"{path}: first column must be {first!r}, got {header[:1]}")
    for k, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"{path}:{k}: expected {len(header)} fields, got {len(row)}")
    return header, body


def _floats(path, header, body) -> np.ndarray:
    try:
        arr = np.array([[float(v) for v in row] for row in body], dtype=float)
    except ValueError as exc:
        raise CsvFormatError(f"{path}: {exc}") from None
    arr = arr.reshape(len(body), len(header))
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{path}: non-finite value")
    return arr


def write_signal_csv(path, grid: Grid, columns: dict) -> None:
    """One row per node: ``omega`` then the named columns."""
    cols = [np.asarray(v, dtype=float) for v in columns.values()]
    for c in cols:
        if c.shape != (grid.count,):
            raise GridMismatch(f"column of shape {c.shape} on a grid of {grid.count} nodes")
    write_rows_csv(path, ["omega", *columns], zip(grid.nodes, *cols))


def read_signal_csv(path, grid: Grid | None = None):
    """Returns ``(grid, {name: values})``.

    If ``grid`` is given the file's nodes must match it, and it is returned
    in place of the grid inferred from the file (which may differ in the
    last bits of ``start``/``step``).
    """
    header, body = _read_table(path, "omega")
    if len(body) < 2:
        raise CsvFormatError(f"{path}: need at least two grid nodes")
    arr = _floats(path, header, body)
    try:
        inferred = Grid.from_nodes(arr[:, 0])
    except GridMismatch as exc:
        raise CsvFormatError(f"{path}: {exc}") from None
    if grid is not None:
        if not inferred.matches(grid):
            raise GridMismatch(f"{path}: grid {inferred} does not match {grid}")
        inferred = grid
    return inferred, {name: arr[:, j] for j, name in enumerate(header) if j > 0}


def write_channels_csv(path, x: MultiChannelSignal) -> None:
    write_signal_csv(path, x.grid, {f"ch{i}": row for i, row in enumerate(x.values)})


def read_channels_csv(path, grid: Grid | None = None) -> MultiChannelSignal:
    g, cols = read_signal_csv(path, grid)
    names = [f"ch{i}" for i in range(len(cols))]
    if list(cols) != names or not names:
        raise CsvFormatError(f"{path}: expected columns {['omega', *names]}")
    return MultiChannelSignal(g, np.stack([cols[k] for k in names]))


def write_mixture_csv(path, signal: GridSignal, name: str = "b") -> None:
    write_signal_csv(path, signal.grid, {name: signal.values})


def read_mixture_csv(path, grid: Grid | None = None, name: str = "b") -> GridSignal:
    g, cols = read_signal_csv(path, grid)
    if list(cols) != [name]:
        raise CsvFormatError(f"{path}: expected columns ['omega', {name!r}], got {['omega', *cols]}")
    return GridSignal(g, cols[name])


def write_spikes_csv(path, measures: Sequence[SparseMeasure]) -> None:
    rows = [(i, s.position, s.amplitude) for i, m in enumerate(measures) for s in m]
    write_rows_csv(path, ["channel", "position", "amplitude"], rows)


def read_spikes_csv(path, n: int | None = None) -> list:
    """One :class:`SparseMeasure` per channel; ``n`` fixes the channel count."""
    header, body = _read_table(path)
    if header != ["channel", "position", "amplitude"]:
        raise CsvFormatError(f"{path}: expected header channel,position,amplitude")
    per: dict[int, list] = {}
    for k, (c, p, a) in enumerate(body, start=2):
        try:
            ch, pos, amp = int(c), float(p), float(a)
        except ValueError as exc:
            raise CsvFormatError(f"{path}:{k}: {exc}") from None
        if ch < 0:
            raise CsvFormatError(f"{path}:{k}: negative channel")
        if not (math.isfinite(pos) and math.isfinite(amp)):
            raise NonFiniteInput(f"{path}:{k}: non-finite spike")
        per.setdefault(ch, []).append((pos, amp))
    count = n if n is not None else (max(per) + 1 if per else 0)
    if per and max(per) >= count:
        raise CsvFormatError(f"{path}: channel {max(per)} out of range for {count} channels")
    return [SparseMeasure.from_pairs(per.get(i, [])) for i in range(count)]


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
