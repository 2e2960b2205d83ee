"""Liquid scorecard pipeline: design matrix, fitting, WOE scaling, plot data.

A characteristic has an ordered list of discrete attributes (sentinel codes
matched exactly, or half-open numeric bins) and optionally a liquid part:
a B-spline basis on its knots.  Every record value lands in exactly one
attribute, or is clamped to the end knots and spread over the basis, so
each characteristic's columns sum to one on every row.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import splines
from .divstats import DegenerateDataError, divergence_stats, h_matrix_with_roughness
from .divstats import score_divergence, woe_scale
from .engineering import ConstraintSet, Relation, assemble
from .qpsolver import KktReport, QpProblem, QpSolution, Status, kkt_report, solve

log = logging.getLogger(__name__)


class FitError(RuntimeError):
    """A pipeline stage failed; `stage` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class InfeasibleFitError(FitError):
    pass


# --------------------------------------------------------------------------
# specification types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Attribute:
    """One discrete attribute: exact codes in `values`, or ``low <= x < high``.

    A missing bound is unbounded on that side.
    """

    label: str
    values: tuple[float, ...] = ()
    low: float | None = None
    high: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.values and (self.low is not None or self.high is not None):
            raise ValueError(f"attribute {self.label!r}: give codes or a range, not both")
        if not self.values and self.low is None and self.high is None:
            raise ValueError(f"attribute {self.label!r} matches nothing")
        if self.low is not None and self.high is not None and not self.low < self.high:
            raise ValueError(f"attribute {self.label!r}: empty range")

    @property
    def is_code(self) -> bool:
        return bool(self.values)

    def matches(self, x: np.ndarray) -> np.ndarray:
        if self.is_code:
            return np.isin(x, self.values)
        hit = np.ones(x.shape, dtype=bool)
        if self.low is not None:
            hit &= x >= self.low
        if self.high is not None:
            hit &= x < self.high
        return hit


@dataclass(frozen=True)
class LiquidPart:
    knots: tuple[float, ...]
    order: int = 4
    log_axis: bool = False
    roughness_weight: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(splines.validate_knots(self.knots).tolist()))
        if self.order not in splines.ORDERS:
            raise ValueError(f"liquid order must be one of {splines.ORDERS}")

    @property
    def clamp_low(self) -> float:
        return self.knots[0]

    @property
    def clamp_high(self) -> float:
        return self.knots[-1]

    @property
    def n_coeffs(self) -> int:
        return splines.n_basis(len(self.knots), self.order)


@dataclass(frozen=True)
class CharacteristicSpec:
    name: str
    column: str
    attributes: tuple[Attribute, ...] = ()
    liquid: LiquidPart | None = None

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if not self.attributes and self.liquid is None:
            raise ValueError(f"characteristic {self.name!r} has no attributes and no liquid part")
        labels = [a.label for a in self.attributes]
        if len(set(labels)) != len(labels):
            raise ValueError(f"characteristic {self.name!r} has duplicate attribute labels")
        if self.liquid is not None:
            lo, hi = self.liquid.clamp_low, self.liquid.clamp_high
            for a in self.attributes:
                if a.is_code and any(lo <= v <= hi for v in a.values):
                    raise ValueError(
                        f"characteristic {self.name!r}: code in {a.label!r} lies inside the "
                        f"liquid domain [{lo}, {hi}]"
                    )


@dataclass(frozen=True)
class Ref:
    """Reference to a coefficient.

    Exactly one of: ``coeff`` (1-based coefficient number), ``attr``
    (attribute label of `char`) or ``basis`` (1-based basis position within
    `char`'s liquid block).
    """

    char: str | None = None
    attr: str | None = None
    basis: int | None = None
    coeff: int | None = None

    def __post_init__(self):
        if self.coeff is not None:
            if self.char is not None or self.attr is not None or self.basis is not None:
                raise ValueError("a coefficient-number reference takes no other fields")
        elif self.char is None or (self.attr is None) == (self.basis is None):
            raise ValueError("a reference needs a characteristic plus exactly one of attr/basis")


@dataclass(frozen=True)
class MonotoneRun:
    """Adjacent patterns across basis positions ``start..stop`` of `char`.

    ``direction`` "<" asks for non-decreasing coefficients, ">" for
    non-increasing.  `stop` defaults to the last basis function.
    """

    char: str
    direction: str
    start: int = 1
    stop: int | None = None


@dataclass(frozen=True)
class ConstraintDecl:
    inweights: tuple[tuple[Ref, float], ...] = ()
    crosses: tuple[tuple[Ref, Ref], ...] = ()
    centering: str | tuple[tuple[Ref, ...], ...] = "auto"
    patterns: tuple[tuple[Ref, Ref, str], ...] = ()
    monotone: tuple[MonotoneRun, ...] = ()


@dataclass(frozen=True)
class FitOptions:
    delta: float = 1.0
    lam: float = 0.0
    roughness_weight: float = 0.0
    label_column: str = "good"
    split_column: str | None = None
    validation_values: tuple[float, ...] = ()
    max_iter: int | None = None


@dataclass(frozen=True)
class ScorecardSpec:
    characteristics: tuple[CharacteristicSpec, ...]
    constraints: ConstraintDecl = ConstraintDecl()
    fit: FitOptions = FitOptions()
    layout: str = "sectioned"
    start_point: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "characteristics", tuple(self.characteristics))
        names = [c.name for c in self.characteristics]
        if len(set(names)) != len(names):
            raise ValueError("duplicate characteristic names")
        if self.layout not in ("sectioned", "grouped"):
            raise ValueError("layout must be 'sectioned' or 'grouped'")
        if not self.characteristics:
            raise ValueError("a scorecard needs at least one characteristic")

    def characteristic(self, name: str) -> CharacteristicSpec:
        for c in self.characteristics:
            if c.name == name:
                return c
        raise KeyError(f"unknown characteristic {name!r}")


# --------------------------------------------------------------------------
# coefficient numbering
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnInfo:
    index: int  # 0-based
    characteristic: str
    label: str
    kind: str  # "indicator" or "basis"
    position: int  # 1-based within the attribute list or the basis block

    @property
    def number(self) -> int:
        return self.index + 1


def coefficient_layout(spec: ScorecardSpec) -> list[ColumnInfo]:
    """Deterministic coefficient numbering for `spec`.

    ``sectioned`` lists indicators of purely discrete characteristics, then
    the discrete parts of liquid characteristics, then every liquid basis
    block.  ``grouped`` keeps each characteristic's columns together.
    """

    def indicators(c):
        return [(c.name, a.label, "indicator", j + 1) for j, a in enumerate(c.attributes)]

    def basis(c):
        if c.liquid is None:
            return []
        return [(c.name, f"b{j}", "basis", j) for j in range(1, c.liquid.n_coeffs + 1)]

    chars = spec.characteristics
    if spec.layout == "grouped":
        cols = [col for c in chars for col in indicators(c) + basis(c)]
    else:
        cols = (
            [col for c in chars if c.liquid is None for col in indicators(c)]
            + [col for c in chars if c.liquid is not None for col in indicators(c)]
            + [col for c in chars for col in basis(c)]
        )
    return [ColumnInfo(i, *col) for i, col in enumerate(cols)]


def _lookup(layout: Sequence[ColumnInfo]):
    table = {}
    for col in layout:
        key = (col.characteristic, col.kind, col.label if col.kind == "indicator" else col.position)
        table[key] = col.index
    return table


def resolve_ref(ref: Ref, layout: Sequence[ColumnInfo], _table=None) -> int:
    """0-based coefficient index for `ref`."""
    if ref.coeff is not None:
        if not 1 <= ref.coeff <= len(layout):
            raise ValueError(f"coefficient number {ref.coeff} out of range 1..{len(layout)}")
        return ref.coeff - 1
    table = _table if _table is not None else _lookup(layout)
    key = (ref.char, "indicator", ref.attr) if ref.attr is not None else (ref.char, "basis", ref.basis)
    try:
        return table[key]
    except KeyError:
        raise ValueError(f"unresolvable reference {ref}") from None


def characteristic_groups(layout: Sequence[ColumnInfo]) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for col in layout:
        groups.setdefault(col.characteristic, []).append(col.index)
    return groups


def resolve_constraints(spec: ScorecardSpec, layout=None) -> ConstraintSet:
    layout = coefficient_layout(spec) if layout is None else layout
    table = _lookup(layout)
    decl = spec.constraints

    def r(ref):
        return resolve_ref(ref, layout, table)

    patterns = []
    for left, right, direction in decl.patterns:
        a, b, rel = r(left), r(right), Relation(direction)
        if a > b:
            a, b = b, a
            rel = Relation.GREATER if rel is Relation.LESS else Relation.LESS
        patterns.append((a, b, rel))
    for run in decl.monotone:
        c = spec.characteristic(run.char)
        if c.liquid is None:
            raise ValueError(f"monotone run on {run.char!r}, which has no liquid part")
        stop = c.liquid.n_coeffs if run.stop is None else run.stop
        if not 1 <= run.start < stop <= c.liquid.n_coeffs:
            raise ValueError(f"monotone run on {run.char!r}: bad range {run.start}..{stop}")
        for j in range(run.start, stop):
            a = r(Ref(char=run.char, basis=j))
            b = r(Ref(char=run.char, basis=j + 1))
            patterns.append((a, b, Relation(run.direction)))

    if decl.centering == "auto":
        centering = tuple(tuple(g) for g in characteristic_groups(layout).values())
    elif decl.centering == "none":
        centering = ()
    else:
        centering = tuple(tuple(r(ref) for ref in group) for group in decl.centering)

    return ConstraintSet(
        p=len(layout),
        delta=spec.fit.delta,
        inweights=tuple((r(ref), value) for ref, value in decl.inweights),
        crosses=tuple((r(a), r(b)) for a, b in decl.crosses),
        centering_groups=centering,
        patterns=tuple(patterns),
    )


# --------------------------------------------------------------------------
# design matrix
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    columns: tuple[ColumnInfo, ...]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def columns_of(self, characteristic: str) -> list[int]:
        return [c.index for c in self.columns if c.characteristic == characteristic]

    def rows(self, mask) -> "DesignMatrix":
        return DesignMatrix(self.values[mask], self.columns)


def _column(records: Mapping, name: str) -> np.ndarray:
    try:
        col = records[name]
    except KeyError:
        raise KeyError(f"data has no column {name!r}") from None
    return np.asarray(col, dtype=float)


def characteristic_columns(c: CharacteristicSpec, x: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Indicator and basis columns of one characteristic for values `x`."""
    n = x.size
    taken = np.zeros(n, dtype=bool)
    ind = np.zeros((n, len(c.attributes)))
    # exact codes take precedence over ranges
    order = [j for j, a in enumerate(c.attributes) if a.is_code] + [
        j for j, a in enumerate(c.attributes) if not a.is_code
    ]
    for j in order:
        hit = ~taken & c.attributes[j].matches(x)
        ind[hit, j] = 1.0
        taken |= hit
    if c.liquid is None:
        if not taken.all():
            bad = x[~taken][0]
            raise ValueError(f"characteristic {c.name!r}: value {bad!r} matches no attribute")
        return ind, None
    rest = ~taken
    if np.any(np.isnan(x[rest])):
        raise ValueError(f"characteristic {c.name!r}: NaN matches no attribute")
    liq = c.liquid
    basis = np.zeros((n, liq.n_coeffs))
    if rest.any():
        clamped = np.clip(x[rest], liq.clamp_low, liq.clamp_high)
        basis[rest] = splines.basis_block(clamped, liq.knots, liq.order).values
    return ind, basis


def build_design_matrix(spec: ScorecardSpec, records: Mapping) -> DesignMatrix:
    layout = coefficient_layout(spec)
    n = None
    parts: dict[tuple[str, str], np.ndarray] = {}
    for c in spec.characteristics:
        x = _column(records, c.column)
        if n is None:
            n = x.size
        elif x.size != n:
            raise ValueError(f"column {c.column!r} has {x.size} rows, expected {n}")
        ind, basis = characteristic_columns(c, x)
        parts[(c.name, "indicator")] = ind
        if basis is not None:
            parts[(c.name, "basis")] = basis
    X = np.empty((n, len(layout)))
    for col in layout:
        X[:, col.index] = parts[(col.characteristic, col.kind)][:, col.position - 1]
    return DesignMatrix(X, tuple(layout))


def split_masks(records: Mapping, column: str | None, validation_values) -> tuple[np.ndarray, np.ndarray]:
    """Boolean ``(dev, val)`` masks; rows whose `column` is in `validation_values` validate."""
    if column is None:
        n = len(next(iter(records.values())))
        return np.ones(n, dtype=bool), np.zeros(n, dtype=bool)
    val = np.isin(_column(records, column), np.asarray(validation_values, dtype=float))
    return ~val, val


# --------------------------------------------------------------------------
# fitting
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PlotSeries:
    x_step: np.ndarray
    y_step: np.ndarray | None
    x_liquid: np.ndarray
    y_liquid: np.ndarray
    axis_mode: str = "linear"


@dataclass(frozen=True)
class FitResult:
    coeffs_raw: np.ndarray
    beta: float
    coeffs_woe: np.ndarray
    dev_divergence: float
    val_divergence: float | None
    qp: QpSolution
    kkt: KktReport
    residuals: dict
    columns: tuple[ColumnInfo, ...]
    plot_series: dict = field(default_factory=dict)

    def liquid_coeffs(self, characteristic: str, woe: bool = True) -> np.ndarray:
        idx = [c.index for c in self.columns if c.characteristic == characteristic and c.kind == "basis"]
        return (self.coeffs_woe if woe else self.coeffs_raw)[idx]


def roughness_blocks(spec: ScorecardSpec, layout: Sequence[ColumnInfo]):
    blocks = []
    for c in spec.characteristics:
        if c.liquid is None or c.liquid.order < 3:
            continue
        w = spec.fit.roughness_weight if c.liquid.roughness_weight is None else c.liquid.roughness_weight
        if w <= 0:
            continue
        idx = [col.index for col in layout if col.characteristic == c.name and col.kind == "basis"]
        blocks.append((idx, splines.roughness_matrix(c.liquid.knots, c.liquid.order), w))
    return blocks


def constraint_residuals(cm, S) -> dict:
    S = np.asarray(S, dtype=float)
    out = {}
    r = cm.Aeq @ S - cm.beq
    for name, (lo, hi) in cm.sections.items():
        out[name] = float(np.abs(r[lo:hi]).max(initial=0.0))
    out["pattern"] = float(max(0.0, (cm.A @ S - cm.b).max(initial=0.0)))
    return out


def fit(spec: ScorecardSpec, records: Mapping, labels=None) -> FitResult:
    """Run the full pipeline: design matrix, QP, WOE scaling, divergences.

    `labels` defaults to the spec's label column (1 = Good).
    """
    try:
        dm = build_design_matrix(spec, records)
        y = _column(records, spec.fit.label_column) if labels is None else np.asarray(labels, dtype=float)
        if y.shape != (dm.values.shape[0],):
            raise ValueError("labels do not match the number of records")
        dev, val = split_masks(records, spec.fit.split_column, spec.fit.validation_values)
    except (KeyError, ValueError) as exc:
        raise FitError("design", str(exc)) from exc

    Xd, yd = dm.values[dev], y[dev]
    try:
        stats = divergence_stats(Xd, yd)
    except (DegenerateDataError, ValueError) as exc:
        raise FitError("divstats", str(exc)) from exc

    layout = dm.columns
    try:
        cs = resolve_constraints(spec, layout)
        cm = assemble(stats, cs)
        H = h_matrix_with_roughness(stats.C, spec.fit.lam, roughness_blocks(spec, layout))
    except ValueError as exc:
        raise FitError("constraints", str(exc)) from exc

    start = None if spec.start_point is None else np.asarray(spec.start_point, dtype=float)
    if start is not None and start.size != dm.p:
        raise FitError("constraints", f"start point has {start.size} entries, expected {dm.p}")
    problem = QpProblem(H=H, A=cm.A, b=cm.b, Aeq=cm.Aeq, beq=cm.beq, start=start)
    sol = solve(problem, max_iter=spec.fit.max_iter)
    if sol.status is Status.INFEASIBLE:
        raise InfeasibleFitError("solve", sol.message or "constraints are infeasible")
    if sol.status is not Status.OPTIMAL:
        raise FitError("solve", f"{sol.status.value}: {sol.message}")
    kkt = kkt_report(problem, sol)

    try:
        woe = woe_scale(sol.x, Xd, yd)
        val_div = score_divergence(woe.coeffs_woe, dm.values[val], y[val]) if val.any() else None
    except DegenerateDataError as exc:
        raise FitError("woe", str(exc)) from exc

    result = FitResult(
        coeffs_raw=sol.x,
        beta=woe.beta,
        coeffs_woe=woe.coeffs_woe,
        dev_divergence=woe.div,
        val_divergence=val_div,
        qp=sol,
        kkt=kkt,
        residuals=constraint_residuals(cm, sol.x),
        columns=layout,
    )
    series = {
        c.name: plot_series(c, result.liquid_coeffs(c.name))
        for c in spec.characteristics
        if c.liquid is not None
    }
    return dataclasses.replace(result, plot_series=series)


def to_traditional(spec: ScorecardSpec) -> ScorecardSpec:
    """Replace every order-1 liquid part by the equivalent attribute bins.

    Bin ``j`` covers ``[k(j), k(j+1))`` with the outer bins opened to
    infinity, which is what clamping does to out-of-range values; bins are
    labelled like the basis columns they replace so references carry over.
    """
    chars = []
    renamed = set()
    for c in spec.characteristics:
        if c.liquid is None or c.liquid.order != 1:
            chars.append(c)
            continue
        k = c.liquid.knots
        m = len(k)
        bins = tuple(
            Attribute(
                label=f"b{j}",
                low=-np.inf if j == 1 else k[j - 1],
                high=np.inf if j == m - 1 else k[j],
            )
            for j in range(1, m)
        )
        chars.append(CharacteristicSpec(c.name, c.column, c.attributes + bins, None))
        renamed.add(c.name)

    def conv(ref):
        if ref.char in renamed and ref.basis is not None:
            return Ref(char=ref.char, attr=f"b{ref.basis}")
        return ref

    d = spec.constraints
    patterns = [(conv(a), conv(b), rel) for a, b, rel in d.patterns]
    monotone = []
    for run in d.monotone:
        if run.char not in renamed:
            monotone.append(run)
            continue
        n_bins = len(spec.characteristic(run.char).liquid.knots) - 1
        stop = n_bins if run.stop is None else run.stop
        if not 1 <= run.start < stop <= n_bins:
            raise ValueError(f"monotone run on {run.char!r}: bad range {run.start}..{stop}")
        patterns += [
            (Ref(char=run.char, attr=f"b{j}"), Ref(char=run.char, attr=f"b{j + 1}"), run.direction)
            for j in range(run.start, stop)
        ]
    decl = ConstraintDecl(
        inweights=tuple((conv(r), v) for r, v in d.inweights),
        crosses=tuple((conv(a), conv(b)) for a, b in d.crosses),
        centering=d.centering
        if isinstance(d.centering, str)
        else tuple(tuple(conv(r) for r in g) for g in d.centering),
        patterns=tuple(patterns),
        monotone=tuple(monotone),
    )
    return dataclasses.replace(spec, characteristics=tuple(chars), constraints=decl)


# --------------------------------------------------------------------------
# evaluation and plot data
# --------------------------------------------------------------------------


def step_eval(x: float, weights, knots) -> float:
    """Score weight of the half-open interval holding `x`; the last is closed."""
    k = splines.validate_knots(knots)
    w = np.asarray(weights, dtype=float)
    if w.size != k.size - 1:
        raise ValueError(f"expected {k.size - 1} weights for {k.size} knots, got {w.size}")
    if not k[0] <= x <= k[-1]:
        raise ValueError(f"{x!r} outside [{k[0]}, {k[-1]}]")
    if x == k[-1]:
        return float(w[-1])
    return float(w[np.searchsorted(k, x, side="right") - 1])


def axis_points(log_mode: bool, m_points: int, knots) -> np.ndarray:
    """``m_points + 1`` plotting abscissae spanning the knots.

    In log mode the grid is uniform in ``log10(x)``, or in ``log10(x + 1)``
    when the first knot is zero.  End points equal the end knots exactly.
    """
    k = splines.validate_knots(knots)
    if m_points < 1:
        raise ValueError("m_points must be at least 1")
    lo, hi = k[0], k[-1]
    if not log_mode:
        x = np.linspace(lo, hi, m_points + 1)
    else:
        if lo < 0:
            raise ValueError("log axis needs non-negative knots")
        shift = 1.0 if lo == 0 else 0.0
        x = 10.0 ** np.linspace(np.log10(lo + shift), np.log10(hi + shift), m_points + 1) - shift
    x[0], x[-1] = lo, hi
    return x


def plot_series(
    characteristic: CharacteristicSpec,
    liquid_coeffs,
    traditional_weights=None,
    m_points: int = 100,
    traditional_knots=None,
) -> PlotSeries:
    """Step-function and spline traces for one liquid characteristic.

    `traditional_weights` (one per interval of `traditional_knots`, which
    default to the liquid knots) are optional; without them ``y_step`` is
    ``None``.
    """
    liq = characteristic.liquid
    if liq is None:
        raise ValueError(f"characteristic {characteristic.name!r} has no liquid part")
    tk = liq.knots if traditional_knots is None else traditional_knots
    x_step = axis_points(liq.log_axis, m_points, tk)
    y_step = None
    if traditional_weights is not None:
        y_step = np.array([step_eval(x, traditional_weights, tk) for x in x_step])
    x_liq = axis_points(liq.log_axis, m_points, liq.knots)
    y_liq = splines.spline_values(x_liq, liquid_coeffs, liq.knots, liq.order)
    return PlotSeries(x_step, y_step, x_liq, y_liq, "log-shifted" if liq.log_axis else "linear")


PLOT_HEADER = ("x_step", "y_step", "x_liquid", "y_liquid")


def write_plot_csv(path, series: PlotSeries) -> None:
    """Write `series` as ``x_step,y_step,x_liquid,y_liquid`` (empty y_step if absent)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_HEADER)
        for i in range(series.x_liquid.size):
            ys = "" if series.y_step is None else repr(float(series.y_step[i]))
            w.writerow([repr(float(series.x_step[i])), ys, repr(float(series.x_liquid[i])), repr(float(series.y_liquid[i]))])


def read_plot_csv(path) -> PlotSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != PLOT_HEADER:
        raise ValueError(f"{path}: unexpected header {rows[0]}")
    cols = list(zip(*rows[1:]))
    y_step = None if all(v == "" for v in cols[1]) else np.array(cols[1], dtype=float)
    return PlotSeries(np.array(cols[0], dtype=float), y_step, np.array(cols[2], dtype=float), np.array(cols[3], dtype=float))
