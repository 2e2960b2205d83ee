"""Divergence statistics, the QP Hessian and weight-of-evidence scaling.

Labels follow the 1 = Good convention throughout.  Covariances use the
``n - 1`` denominator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DegenerateDataError(ValueError):
    """A class has too few records or the pooled score variance is zero."""


@dataclass(frozen=True)
class DivStats:
    C: np.ndarray
    d: np.ndarray
    e: np.ndarray

    @property
    def p(self) -> int:
        return self.d.size


@dataclass(frozen=True)
class WoeResult:
    beta: float
    div: float
    coeffs_woe: np.ndarray


def _split_classes(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"X {X.shape} and y {y.shape} do not conform")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 (Bad) or 1 (Good)")
    good = X[y == 1]
    bad = X[y == 0]
    for name, part in (("Good", good), ("Bad", bad)):
        if part.shape[0] < 2:
            raise DegenerateDataError(
                f"need at least 2 {name} records, got {part.shape[0]}"
            )
    return good, bad


def divergence_stats(X, y) -> DivStats:
    """Average within-class covariance ``C`` and the class-mean vectors.

    ``d = mean_G - mean_B`` feeds the divergence constraint and
    ``e = mean_G + mean_B`` the centering constraints.
    """
    good, bad = _split_classes(X, y)
    C = (np.cov(good, rowvar=False, ddof=1) + np.cov(bad, rowvar=False, ddof=1)) / 2
    C = np.atleast_2d(C)
    mg = good.mean(axis=0)
    mb = bad.mean(axis=0)
    return DivStats(C=C, d=mg - mb, e=mg + mb)


def h_matrix(C, lam: float = 0.0) -> np.ndarray:
    """``H = 2 (C + (lam / p) I)``, the Hessian of the divergence QP."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[0] != C.shape[1]:
        raise ValueError("C must be square")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    p = C.shape[0]
    return 2.0 * (C + (lam / p) * np.eye(p))


def h_matrix_with_roughness(
    C,
    lam: float,
    blocks: Sequence[tuple[range | slice | Sequence[int], np.ndarray, float]] = (),
) -> np.ndarray:
    """:func:`h_matrix` plus weighted roughness penalties.

    Each block is ``(indices, R, weight)``; ``weight * R`` is added to ``C``
    at rows/columns `indices` (0-based, contiguous or not) before doubling.
    Blocks must not overlap.
    """
    H = h_matrix(C, lam)
    p = H.shape[0]
    used = np.zeros(p, dtype=bool)
    for idx, R, weight in blocks:
        if isinstance(idx, slice):
            idx = range(*idx.indices(p))
        idx = np.asarray(list(idx), dtype=int)
        R = np.atleast_2d(np.asarray(R, dtype=float))
        if R.shape != (idx.size, idx.size):
            raise ValueError(f"roughness block {R.shape} does not match {idx.size} indices")
        if weight < 0:
            raise ValueError("roughness weight must be non-negative")
        if idx.size and (idx.min() < 0 or idx.max() >= p):
            raise ValueError("roughness block index out of range")
        if np.unique(idx).size != idx.size or np.any(used[idx]):
            raise ValueError("roughness blocks overlap")
        used[idx] = True
        H[np.ix_(idx, idx)] += 2.0 * weight * R
    return H


def _score_moments(S, X, y):
    good, bad = _split_classes(X, y)
    S = np.asarray(S, dtype=float)
    if S.shape != (good.shape[1],):
        raise ValueError(f"expected {good.shape[1]} coefficients, got shape {S.shape}")
    sg = good @ S
    sb = bad @ S
    num = sg.mean() - sb.mean()
    denom = (sg.var(ddof=1) + sb.var(ddof=1)) / 2
    if not denom > 0:
        raise DegenerateDataError("pooled score variance is zero")
    return num, denom


def score_divergence(S, X, y) -> float:
    """``(mean_G - mean_B)^2 / ((var_G + var_B) / 2)`` of the score ``X @ S``."""
    num, denom = _score_moments(S, X, y)
    return float(num * (num / denom))


def woe_scale(S, X, y) -> WoeResult:
    """Rescale `S` so the score sits on a weight-of-evidence scale.

    ``beta = num / denom`` with the same moments as :func:`score_divergence`;
    the divergence is returned as ``num * beta`` so both routes agree.
    """
    num, denom = _score_moments(S, X, y)
    beta = num / denom
    return WoeResult(
        beta=float(beta),
        div=float(num * beta),
        coeffs_woe=beta * np.asarray(S, dtype=float),
    )
