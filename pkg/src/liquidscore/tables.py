"""Numeric CSV tables: comma separated, mandatory header, ``.`` decimals."""

from __future__ import annotations

import csv
from typing import Mapping, Sequence

import numpy as np


class TableError(ValueError):
    pass


def read_csv(path) -> dict[str, np.ndarray]:
    """Read an all-numeric CSV into ``{column: float array}``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise TableError(f"{path}: empty file or missing header")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise TableError(f"{path}: duplicate column names")
    body = [r for r in rows[1:] if r]
    if not body:
        raise TableError(f"{path}: no data rows")
    cols: dict[str, list[float]] = {h: [] for h in header}
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise TableError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        for h, cell in zip(header, row):
            try:
                cols[h].append(float(cell))
            except ValueError:
                raise TableError(f"{path}:{lineno}: non-numeric value {cell!r} in {h!r}") from None
    return {h: np.array(v) for h, v in cols.items()}


def format_number(v) -> str:
    """Shortest round-trip text for `v`; integral values are written without ``.0``."""
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def write_csv(path, columns: Mapping[str, Sequence], order: Sequence[str] | None = None) -> None:
    names = list(columns) if order is None else list(order)
    data = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([format_number(v) for v in row])
