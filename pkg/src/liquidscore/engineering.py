"""Score-engineering constraints as linear equality and inequality rows.

All coefficient indices here are 0-based.  The equality system is stacked
as ``[d'; in-weights; crosses; centering]`` with right-hand side
``[delta; fixed values; 0; 0]`` and the inequality system ``A S <= 0``
holds one row per pairwise pattern.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .divstats import DivStats


class Relation(str, enum.Enum):
    LESS = "<"  # S_left <= S_right
    GREATER = ">"  # S_left >= S_right


def _check_index(i, p, what):
    if not 0 <= int(i) < p:
        raise ValueError(f"{what} index {i} out of range for p={p}")
    return int(i)


def inweight_rows(indices: Sequence[int], p: int) -> np.ndarray:
    indices = [_check_index(i, p, "in-weight") for i in indices]
    if len(set(indices)) != len(indices):
        raise ValueError("duplicate in-weight index")
    rows = np.zeros((len(indices), p))
    rows[np.arange(len(indices)), indices] = 1.0
    return rows


def cross_rows(pairs: Sequence[tuple[int, int]], p: int) -> np.ndarray:
    """One row per pair ``(a, b)`` encoding ``S_a - S_b = 0``."""
    rows = np.zeros((len(pairs), p))
    for r, (a, b) in enumerate(pairs):
        a = _check_index(a, p, "cross")
        b = _check_index(b, p, "cross")
        if a == b:
            raise ValueError(f"cross restriction ties index {a} to itself")
        rows[r, a] = 1.0
        rows[r, b] = -1.0
    return rows


def centering_rows(groups: Sequence[Sequence[int]], e) -> np.ndarray:
    """One row per group with ``e[j]`` at each member ``j``."""
    e = np.asarray(e, dtype=float)
    p = e.size
    rows = np.zeros((len(groups), p))
    for r, group in enumerate(groups):
        idx = [_check_index(j, p, "centering") for j in group]
        rows[r, idx] = e[idx]
    return rows


def pattern_rows(left, right, is_less_than, p: int) -> np.ndarray:
    """Pairwise pattern rows for ``A S <= 0``.

    Row ``i`` carries ``c = 2 * flag - 1`` at ``left[i]`` and ``-c`` at
    ``right[i]``: a set flag encodes ``S_left <= S_right``, a cleared flag
    ``S_left >= S_right``.  ``left[i] < right[i]`` is required.
    """
    if not len(left) == len(right) == len(is_less_than):
        raise ValueError("left, right and flags must have equal lengths")
    rows = np.zeros((len(left), p))
    for r, (a, b, flag) in enumerate(zip(left, right, is_less_than)):
        a = _check_index(a, p, "pattern")
        b = _check_index(b, p, "pattern")
        if not a < b:
            raise ValueError(f"pattern {r}: left index {a} must be below right index {b}")
        c = 2.0 * bool(flag) - 1.0
        rows[r, a] = c
        rows[r, b] = -c
    return rows


@dataclass(frozen=True)
class ConstraintSet:
    """Declarative score engineering for a ``p``-coefficient scorecard.

    ``inweights`` holds ``(index, value)`` pairs, ``patterns`` holds
    ``(left, right, Relation)`` triples.  ``delta`` is the target of the
    divergence row ``d' S``.
    """

    p: int
    delta: float = 1.0
    inweights: tuple[tuple[int, float], ...] = ()
    crosses: tuple[tuple[int, int], ...] = ()
    centering_groups: tuple[tuple[int, ...], ...] = ()
    patterns: tuple[tuple[int, int, Relation], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "inweights", tuple((int(i), float(v)) for i, v in self.inweights))
        object.__setattr__(self, "crosses", tuple((int(a), int(b)) for a, b in self.crosses))
        object.__setattr__(
            self, "centering_groups", tuple(tuple(int(j) for j in g) for g in self.centering_groups)
        )
        object.__setattr__(
            self, "patterns", tuple((int(a), int(b), Relation(r)) for a, b, r in self.patterns)
        )

    @property
    def n_equalities(self) -> int:
        return 1 + len(self.inweights) + len(self.crosses) + len(self.centering_groups)


@dataclass(frozen=True)
class ConstraintMatrices:
    Aeq: np.ndarray
    beq: np.ndarray
    A: np.ndarray
    b: np.ndarray
    # row ranges of each equality group inside Aeq
    sections: dict = field(default_factory=dict)


def assemble(stats: DivStats, constraints: ConstraintSet) -> ConstraintMatrices:
    p = stats.p
    if constraints.p != p:
        raise ValueError(f"constraints are for p={constraints.p}, statistics for p={p}")
    iw_idx = [i for i, _ in constraints.inweights]
    blocks = [
        ("divergence", stats.d[None, :]),
        ("inweight", inweight_rows(iw_idx, p)),
        ("cross", cross_rows(constraints.crosses, p)),
        ("centering", centering_rows(constraints.centering_groups, stats.e)),
    ]
    sections = {}
    start = 0
    for name, rows in blocks:
        sections[name] = (start, start + rows.shape[0])
        start += rows.shape[0]
    Aeq = np.vstack([rows for _, rows in blocks])
    beq = np.concatenate(
        [
            [constraints.delta],
            [v for _, v in constraints.inweights],
            np.zeros(len(constraints.crosses) + len(constraints.centering_groups)),
        ]
    )
    pats = constraints.patterns
    A = pattern_rows(
        [a for a, _, _ in pats],
        [b for _, b, _ in pats],
        [r is Relation.LESS for _, _, r in pats],
        p,
    )
    return ConstraintMatrices(Aeq=Aeq, beq=beq, A=A, b=np.zeros(len(pats)), sections=sections)


def decode_inweight_rows(rows) -> list[int]:
    out = []
    for row in np.atleast_2d(rows):
        (nz,) = np.nonzero(row)
        if nz.size != 1 or row[nz[0]] != 1.0:
            raise ValueError("not an in-weight row")
        out.append(int(nz[0]))
    return out


def decode_cross_rows(rows) -> list[tuple[int, int]]:
    out = []
    for row in np.atleast_2d(rows):
        a = np.flatnonzero(row == 1.0)
        b = np.flatnonzero(row == -1.0)
        if a.size != 1 or b.size != 1 or np.count_nonzero(row) != 2:
            raise ValueError("not a cross row")
        out.append((int(a[0]), int(b[0])))
    return out


def decode_pattern_rows(rows) -> list[tuple[int, int, Relation]]:
    out = []
    for row in np.atleast_2d(rows):
        (nz,) = np.nonzero(row)
        if nz.size != 2 or row[nz[0]] != -row[nz[1]] or abs(row[nz[0]]) != 1.0:
            raise ValueError("not a pattern row")
        rel = Relation.LESS if row[nz[0]] > 0 else Relation.GREATER
        out.append((int(nz[0]), int(nz[1]), rel))
    return out
