"""B-spline bases of order 1-4 on a strictly increasing knot vector.

Orders follow the scorecard convention: order 1 is a step function (the
attribute indicators of a traditional scorecard), order 2 piecewise linear,
order 3 quadratic and order 4 cubic.  The end knots are repeated so that
every order shares one padded sequence ``t`` of length ``m + 6``, and the
basis functions ``B(x | i, j)`` are indexed with 1-based ``i = 1..m+2`` and
``j = 1..4``.  In the full matrix returned by :func:`full_basis`, function
``(i, j)`` lives at 1-based column ``i + (m + 2) * (j - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORDERS = (1, 2, 3, 4)


def validate_knots(knots) -> np.ndarray:
    """Return `knots` as a float array, raising ``ValueError`` if invalid."""
    k = np.asarray(knots, dtype=float)
    if k.ndim != 1 or k.size < 2:
        raise ValueError("knots must be a 1-D sequence with at least 2 entries")
    if not np.all(np.isfinite(k)):
        raise ValueError("knots must be finite")
    if np.any(np.diff(k) <= 0):
        raise ValueError("knots must be strictly increasing")
    return k


def _check_order(order: int) -> int:
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}, got {order!r}")
    return int(order)


def n_basis(m: int, order: int) -> int:
    """Number of non-vacuous basis functions for `m` knots at `order`."""
    return m + _check_order(order) - 2


def pad_knots(knots) -> np.ndarray:
    """Pad a knot vector to the ``m + 6`` sequence shared by all orders.

    The first knot is repeated four times and the last knot four times, with
    the interior knots in between.

    >>> pad_knots([0, 1000]).tolist()
    [0.0, 0.0, 0.0, 0.0, 1000.0, 1000.0, 1000.0, 1000.0]
    """
    k = validate_knots(knots)
    return np.concatenate([np.repeat(k[0], 3), k, np.repeat(k[-1], 3)])


def _as_points(xs) -> np.ndarray:
    x = np.atleast_1d(np.asarray(xs, dtype=float))
    if x.ndim != 1:
        raise ValueError("evaluation points must be a 1-D sequence")
    return x


def _check_domain(x: np.ndarray, k: np.ndarray) -> None:
    bad = ~((x >= k[0]) & (x <= k[-1]))
    if np.any(bad):
        raise ValueError(
            f"{int(bad.sum())} evaluation point(s) outside the knot domain "
            f"[{k[0]}, {k[-1]}], e.g. {x[bad][0]!r}"
        )


def _levels(x: np.ndarray, t: np.ndarray, m: int) -> list[np.ndarray]:
    """Evaluate the recursion level by level.

    Returns a list of four ``n x (m + 3)`` arrays; column ``i - 1`` holds
    ``B(x | i, j)`` and the trailing column is an all-zero ``B(x | m+3, j)``
    so that the ``i + 1`` reference in the recursion needs no special case.
    """
    n = x.size
    L = m + 2
    # 1-based knot index t(i) -> t[i - 1]
    level = np.zeros((n, L + 1))
    for i in range(1, L):
        level[:, i - 1] = (t[i - 1] <= x) & (x < t[i])
    level[:, L - 1] = (t[L - 1] <= x) & (x <= t[L])
    levels = [level]
    for j in range(2, 5):
        prev = levels[-1]
        cur = np.zeros((n, L + 1))
        for i in range(1, L + 1):
            left = t[i + j - 2] - t[i - 1]
            if left > 0:
                cur[:, i - 1] += (x - t[i - 1]) / left * prev[:, i - 1]
            right = t[i + j - 1] - t[i]
            if right > 0:
                cur[:, i - 1] += (t[i + j - 1] - x) / right * prev[:, i]
        levels.append(cur)
    return levels


def full_basis(xs, knots) -> np.ndarray:
    """All ``4 (m + 2)`` functions ``B(x | i, j)``, vacuous ones included.

    Parameters
    ----------
    xs : array-like, shape (n,)
        Evaluation points in ``[knots[0], knots[-1]]``.
    knots : array-like, shape (m,)
        Strictly increasing knots.

    Returns
    -------
    numpy.ndarray, shape (n, 4 * (m + 2))
        Column ``(i - 1) + (m + 2) * (j - 1)`` holds ``B(x | i, j)``.
    """
    k = validate_knots(knots)
    x = _as_points(xs)
    _check_domain(x, k)
    m = k.size
    levels = _levels(x, pad_knots(k), m)
    return np.hstack([lev[:, : m + 2] for lev in levels])


@dataclass(frozen=True)
class BasisBlock:
    """Non-vacuous basis functions of one order evaluated at a set of points.

    ``values[:, c]`` is the full-matrix column
    ``column_offset + c + 1`` (1-based).
    """

    order: int
    values: np.ndarray
    column_offset: int

    @property
    def n_functions(self) -> int:
        return self.values.shape[1]

    @property
    def full_columns(self) -> np.ndarray:
        """1-based column numbers of this block in :func:`full_basis`."""
        return self.column_offset + 1 + np.arange(self.n_functions)


def _block_slice(m: int, order: int) -> slice:
    start = (4 - order) + (m + 2) * (order - 1)
    return slice(start, start + n_basis(m, order))


def basis_block(xs, knots, order: int = 4) -> BasisBlock:
    """Evaluate the order-`order` B-spline basis at `xs`.

    Only the non-vacuous functions ``B(x | i, order)`` for
    ``i = 5 - order .. m + 2`` are returned, giving ``m + order - 2`` columns.
    Points outside ``[knots[0], knots[-1]]`` are rejected; clamp first.
    """
    order = _check_order(order)
    full = full_basis(xs, knots)
    m = full.shape[1] // 4 - 2
    sl = _block_slice(m, order)
    return BasisBlock(order=order, values=full[:, sl], column_offset=sl.start)


def spline_values(xs, coeffs, knots, order: int = 4) -> np.ndarray:
    """Vectorised :func:`spline_eval`."""
    k = validate_knots(knots)
    c = np.asarray(coeffs, dtype=float)
    q = n_basis(k.size, order)
    if c.shape != (q,):
        raise ValueError(
            f"expected {q} coefficients for {k.size} knots at order {order}, "
            f"got shape {c.shape}"
        )
    return basis_block(xs, k, order).values @ c


def spline_eval(x: float, coeffs, knots, order: int = 4) -> float:
    """Value at `x` of the spline with B-spline coefficients `coeffs`."""
    return float(spline_values([x], coeffs, knots, order)[0])


def _derivative_level(x, t, m, order, nu):
    """``nu``-th derivative of every ``B(x | i, order)``, shape ``(n, m + 3)``.

    Uses the standard relation between the derivative of an order-k
    B-spline and the order-(k-1) functions, with zero-width spans dropped.
    """
    if nu == 0:
        return _levels(x, t, m)[order - 1]
    lower = _derivative_level(x, t, m, order - 1, nu - 1)
    out = np.zeros_like(lower)
    L = m + 2
    for i in range(1, L + 1):
        left = t[i + order - 2] - t[i - 1]
        if left > 0:
            out[:, i - 1] += lower[:, i - 1] / left
        right = t[i + order - 1] - t[i]
        if right > 0:
            out[:, i - 1] -= lower[:, i] / right
    return (order - 1) * out


_GAUSS2 = np.array([-1.0, 1.0]) / np.sqrt(3.0)


def roughness_matrix(knots, order: int = 4) -> np.ndarray:
    """Gram matrix of basis second derivatives, ``R[a, b] = ∫ b_a'' b_b'' dx``.

    For a spline ``c(x) = sum_a alpha_a b_a(x)`` on ``[knots[0], knots[-1]]``
    the integrated squared curvature is ``alpha @ R @ alpha``.  Second
    derivatives are polynomials of degree ``order - 3`` on each knot
    interval, so two-point Gauss-Legendre per interval integrates the
    products exactly.  Orders 1 and 2 give the zero matrix.
    """
    k = validate_knots(knots)
    order = _check_order(order)
    m = k.size
    q = n_basis(m, order)
    if order <= 2:
        return np.zeros((q, q))
    half = np.diff(k) / 2.0
    mid = (k[:-1] + k[1:]) / 2.0
    x = (mid[:, None] + half[:, None] * _GAUSS2[None, :]).ravel()
    w = np.repeat(half, 2)
    d2 = _derivative_level(x, pad_knots(k), m, order, 2)
    d2 = d2[:, 4 - order : m + 2]
    R = (d2 * w[:, None]).T @ d2
    return (R + R.T) / 2.0


def second_derivative_values(xs, coeffs, knots, order: int = 4) -> np.ndarray:
    """``c''(x)`` for the spline with coefficients `coeffs`.

    At an interior knot the right-hand limit is returned (the last knot uses
    the left-hand one), matching the half-open interval convention.
    """
    k = validate_knots(knots)
    order = _check_order(order)
    x = _as_points(xs)
    _check_domain(x, k)
    m = k.size
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (n_basis(m, order),):
        raise ValueError("coefficient length does not match knots and order")
    if order <= 2:
        return np.zeros_like(x)
    d2 = _derivative_level(x, pad_knots(k), m, order, 2)[:, 4 - order : m + 2]
    return d2 @ c
