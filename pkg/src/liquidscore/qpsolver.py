"""Dense primal active-set solver for convex quadratic programs.

Solves::

    minimize    1/2 x' H x + f' x
    subject to  Aeq x  = beq
                A x   <= b
                lower <= x <= upper

``H`` must be symmetric positive semidefinite.  A feasible starting point
is taken from the caller when it is feasible and otherwise found by a
phase-1 linear program that minimises the total constraint violation.
Each iteration minimises the objective on the null space of the current
working set; directions of zero curvature are handled with a pseudo-inverse
of the reduced Hessian so rank-deficient ``H`` (collinear design columns,
no ridge) is solved without perturbing the objective.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

log = logging.getLogger(__name__)

FEAS_TOL = 1e-8
_ACTIVE_TOL = 1e-9
_RANK_TOL = 1e-10
_CURV_TOL = 1e-10


class Status(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    MAX_ITER = "MAX_ITER"
    UNBOUNDED = "UNBOUNDED"


class InfeasibleProblemError(ValueError):
    pass


def _matrix(M, p, name):
    if M is None:
        return np.zeros((0, p))
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros((0, p))
    M = np.atleast_2d(M)
    if M.shape[1] != p:
        raise ValueError(f"{name} has {M.shape[1]} columns, expected {p}")
    return M


def _vector(v, n, name, fill=0.0):
    if v is None:
        return np.full(n, fill)
    v = np.asarray(v, dtype=float).ravel()
    if v.size != n:
        raise ValueError(f"{name} has length {v.size}, expected {n}")
    return v


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    f: np.ndarray | None = None
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    Aeq: np.ndarray | None = None
    beq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    start: np.ndarray | None = None

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("H must be square")
        p = H.shape[0]
        scale = max(1.0, np.abs(H).max(initial=0.0))
        if np.abs(H - H.T).max(initial=0.0) > 1e-10 * scale:
            raise ValueError("H must be symmetric")
        A = _matrix(self.A, p, "A")
        Aeq = _matrix(self.Aeq, p, "Aeq")
        lower = _vector(self.lower, p, "lower", -np.inf)
        upper = _vector(self.upper, p, "upper", np.inf)
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        fields = dict(
            H=(H + H.T) / 2,
            f=_vector(self.f, p, "f"),
            A=A,
            b=_vector(self.b, A.shape[0], "b"),
            Aeq=Aeq,
            beq=_vector(self.beq, Aeq.shape[0], "beq"),
            lower=lower,
            upper=upper,
            start=None if self.start is None else _vector(self.start, p, "start"),
        )
        for k, v in fields.items():
            object.__setattr__(self, k, v)

    @property
    def p(self) -> int:
        return self.H.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H @ x + self.f @ x)

    def stacked_inequalities(self):
        """``(G, h, kind, index)`` with bounds folded in as rows of ``G x <= h``."""
        p = self.p
        lo = np.flatnonzero(np.isfinite(self.lower))
        hi = np.flatnonzero(np.isfinite(self.upper))
        G = np.vstack([self.A, -np.eye(p)[lo], np.eye(p)[hi]])
        h = np.concatenate([self.b, -self.lower[lo], self.upper[hi]])
        kind = ["A"] * self.A.shape[0] + ["lower"] * lo.size + ["upper"] * hi.size
        index = np.concatenate([np.arange(self.A.shape[0]), lo, hi]).astype(int)
        return G, h, kind, index


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    status: Status
    iterations: int
    objective: float
    eq_multipliers: np.ndarray
    ineq_multipliers: np.ndarray
    lower_multipliers: np.ndarray
    upper_multipliers: np.ndarray
    active: tuple[int, ...] = ()
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class KktReport:
    """Residuals of the optimality conditions at a candidate solution."""

    primal_eq: float
    primal_ineq: float
    stationarity: float
    complementarity: float
    dual_feasibility: float
    active: tuple[int, ...] = field(default=())

    def passes(self, feas_tol=FEAS_TOL, stat_tol=1e-6, comp_tol=1e-6) -> bool:
        return (
            self.primal_eq <= feas_tol
            and self.primal_ineq <= feas_tol
            and self.stationarity <= stat_tol
            and self.complementarity <= comp_tol
            and self.dual_feasibility <= comp_tol
        )

    def as_dict(self) -> dict:
        return {
            "primal_eq": self.primal_eq,
            "primal_ineq": self.primal_ineq,
            "stationarity": self.stationarity,
            "complementarity": self.complementarity,
            "dual_feasibility": self.dual_feasibility,
            "active": list(self.active),
        }


def check_psd(H, tol=1e-8) -> None:
    """Raise ``ValueError`` if `H` has an eigenvalue below ``-tol * scale``."""
    w = np.linalg.eigvalsh(np.asarray(H, dtype=float))
    if w.size and w[0] < -tol * max(1.0, np.abs(w).max()):
        raise ValueError(f"H is not positive semidefinite (min eigenvalue {w[0]:.3g})")


def _normalise_rows(M, r):
    norms = np.linalg.norm(M, axis=1)
    norms[norms == 0] = 1.0
    return M / norms[:, None], r / norms, norms


def _max_violation(x, Gs, hs, Es, es):
    v = 0.0
    if Gs.shape[0]:
        v = max(v, float(np.max(Gs @ x - hs)))
    if Es.shape[0]:
        v = max(v, float(np.max(np.abs(Es @ x - es))))
    return v


def _independent_rows(M, tol=_RANK_TOL) -> list[int]:
    """Indices of a maximal linearly independent subset of the rows of `M`."""
    if M.shape[0] == 0:
        return []
    _, R, piv = scipy.linalg.qr(M.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > tol * max(1.0, d[0] if d.size else 0.0)))
    return sorted(int(i) for i in piv[:rank])


def _project(x, M, r):
    if M.shape[0] == 0:
        return x
    dx, *_ = np.linalg.lstsq(M, r - M @ x, rcond=None)
    return x + dx


def _phase_one(Gs, hs, Es, es, p):
    """Minimise the summed violation of unit-normalised rows with HiGHS."""
    mi, me = Gs.shape[0], Es.shape[0]
    c = np.concatenate([np.zeros(p), np.ones(mi + 2 * me)])
    A_ub = np.hstack([Gs, -np.eye(mi), np.zeros((mi, 2 * me))]) if mi else None
    A_eq = np.hstack([Es, np.zeros((me, mi)), -np.eye(me), np.eye(me)]) if me else None
    bounds = [(None, None)] * p + [(0, None)] * (mi + 2 * me)
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=hs if mi else None,
        A_eq=A_eq,
        b_eq=es if me else None,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.x is None:
        return np.zeros(p), np.inf
    x = res.x[:p]
    # snap nearly-active rows to exact equality to clear solver tolerance
    if mi:
        act = np.flatnonzero(hs - Gs @ x <= 1e-7)
        M = np.vstack([Es, Gs[act]])
        r = np.concatenate([es, hs[act]])
    else:
        M, r = Es, es
    xp = _project(x, M, r)
    if _max_violation(xp, Gs, hs, Es, es) <= _max_violation(x, Gs, hs, Es, es):
        x = xp
    return x, _max_violation(x, Gs, hs, Es, es)


def feasible_start(problem: QpProblem) -> np.ndarray:
    """A point satisfying every constraint of `problem` within ``1e-8``.

    The supplied start is used when feasible (after an exact projection onto
    the equalities); otherwise a phase-1 LP is solved.  Raises
    :class:`InfeasibleProblemError` when the minimum violation exceeds the
    tolerance.
    """
    G, h, *_ = problem.stacked_inequalities()
    Gs, hs, _ = _normalise_rows(G, h)
    Es, es, _ = _normalise_rows(problem.Aeq, problem.beq)
    x, viol = _feasible_start(problem, Gs, hs, Es, es)
    if viol > FEAS_TOL:
        raise InfeasibleProblemError(f"minimum constraint violation {viol:.3g}")
    return x


def _feasible_start(problem, Gs, hs, Es, es):
    p = problem.p
    if problem.start is not None:
        x = problem.start.copy()
        keep = _independent_rows(Es)
        x = _project(x, Es[keep], es[keep])
        viol = _max_violation(x, Gs, hs, Es, es)
        if viol <= _ACTIVE_TOL:
            return x, viol
        log.info("supplied start violates constraints by %.3g; running phase 1", viol)
    return _phase_one(Gs, hs, Es, es, p)


class _Basis:
    """Orthonormal basis of a growing row space, for independence tests."""

    def __init__(self, p):
        self.Q = np.zeros((p, 0))

    def try_add(self, a, tol=1e-8) -> bool:
        r = a - self.Q @ (self.Q.T @ a)
        r = r - self.Q @ (self.Q.T @ r)
        nr = np.linalg.norm(r)
        if nr <= tol * max(1.0, np.linalg.norm(a)):
            return False
        self.Q = np.hstack([self.Q, (r / nr)[:, None]])
        return True


def _null_space(M, p):
    if M.shape[0] == 0:
        return np.eye(p)
    Q, R, _ = scipy.linalg.qr(M.T, pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > _RANK_TOL * max(1.0, d[0] if d.size else 0.0)))
    return Q[:, rank:]


def _pick_lowest(values, candidates, smallest=True):
    """Index among `candidates` with extreme value, ties to the lowest index."""
    vals = values[candidates]
    best = vals.min() if smallest else vals.max()
    tol = 1e-12 * max(1.0, abs(best))
    hit = candidates[np.abs(vals - best) <= tol]
    return int(hit.min())


def solve(problem: QpProblem, max_iter: int | None = None) -> QpSolution:
    """Solve `problem`; see the module docstring for the formulation.

    Returns a :class:`QpSolution` whose status is ``OPTIMAL``,
    ``INFEASIBLE`` (phase-1 could not reach the feasible set), ``MAX_ITER``
    (best feasible iterate returned) or ``UNBOUNDED``.
    """
    check_psd(problem.H)
    p = problem.p
    H, f = problem.H, problem.f
    G, h, kind, index = problem.stacked_inequalities()
    Gs, hs, gnorm = _normalise_rows(G, h)
    Es_all, es_all, enorm = _normalise_rows(problem.Aeq, problem.beq)
    eq_keep = _independent_rows(Es_all)
    Es, es = Es_all[eq_keep], es_all[eq_keep]
    mi = Gs.shape[0]
    if max_iter is None:
        max_iter = 50 * (p + problem.A.shape[0])

    x, viol = _feasible_start(problem, Gs, hs, Es_all, es_all)
    if viol > FEAS_TOL:
        return _package(problem, x, Status.INFEASIBLE, 0, [], None, kind, index, gnorm, enorm,
                        eq_keep, f"minimum constraint violation {viol:.3g}")

    basis = _Basis(p)
    for row in Es:
        basis.try_add(row)
    W: list[int] = []
    if mi:
        slack = hs - Gs @ x
        for i in np.flatnonzero(slack <= _ACTIVE_TOL):
            if basis.try_add(Gs[i]):
                W.append(int(i))

    hscale = max(1.0, np.abs(H).max(initial=0.0))
    stalls = 0
    status = Status.MAX_ITER
    it = 0
    nu = None
    message = ""
    while it < max_iter:
        it += 1
        g = H @ x + f
        M = np.vstack([Es, Gs[W]]) if W else Es
        Z = _null_space(M, p)
        step = np.zeros(p)
        ray = False
        if Z.shape[1]:
            gr = Z.T @ g
            w, V = np.linalg.eigh(Z.T @ H @ Z)
            pos = w > _CURV_TOL * hscale
            Vp, Vn = V[:, pos], V[:, ~pos]
            gn = Vn @ (Vn.T @ gr)
            if np.linalg.norm(gn) > 1e-10 * max(1.0, np.linalg.norm(g)):
                step = -Z @ gn
                ray = True
            else:
                step = -Z @ (Vp @ ((Vp.T @ gr) / w[pos]))

        if not ray and np.abs(step).max(initial=0.0) <= 1e-12 * (1.0 + np.abs(x).max(initial=0.0)):
            nu, *_ = np.linalg.lstsq(M.T, -g, rcond=None) if M.shape[0] else (np.zeros(0),)
            mu = nu[Es.shape[0]:]
            dual_tol = 1e-10 * max(1.0, np.abs(g).max(initial=0.0))
            neg = np.flatnonzero(mu < -dual_tol)
            if neg.size == 0:
                status = Status.OPTIMAL
                break
            if stalls > 3:
                drop = int(min(neg, key=lambda j: W[j]))
            else:
                drop = int(neg[np.argmin(mu[neg])])
            W.pop(drop)
            basis = _Basis(p)
            for row in M[np.arange(M.shape[0]) != Es.shape[0] + drop]:
                basis.try_add(row)
            continue

        alpha = np.inf if ray else 1.0
        block = None
        if mi:
            Gp = Gs @ step
            in_w = np.zeros(mi, dtype=bool)
            in_w[W] = True
            cand = np.flatnonzero(~in_w & (Gp > 1e-12 * np.linalg.norm(step)))
            if cand.size:
                slack = np.maximum(hs[cand] - Gs[cand] @ x, 0.0)
                ratios = np.full(mi, np.inf)
                ratios[cand] = slack / Gp[cand]
                amin = ratios[cand].min()
                if amin < alpha:
                    block = _pick_lowest(ratios, cand)
                    alpha = ratios[block]
        if not np.isfinite(alpha):
            status = Status.UNBOUNDED
            message = "objective decreases without bound along a zero-curvature direction"
            break
        stalls = stalls + 1 if alpha == 0.0 else 0
        x = x + alpha * step
        if block is not None:
            basis.try_add(Gs[block])
            W.append(block)

    if status is Status.MAX_ITER:
        message = f"iteration limit {max_iter} reached"
    M = np.vstack([Es, Gs[W]]) if W else Es
    if status is Status.OPTIMAL:
        x = _project(x, M, np.concatenate([es, hs[W]]))
        g = H @ x + f
        nu, *_ = np.linalg.lstsq(M.T, -g, rcond=None) if M.shape[0] else (np.zeros(0),)
    return _package(problem, x, status, it, W, nu, kind, index, gnorm, enorm, eq_keep, message)


def _package(problem, x, status, it, W, nu, kind, index, gnorm, enorm, eq_keep, message):
    p = problem.p
    me = problem.Aeq.shape[0]
    lam = np.zeros(me)
    mu_a = np.zeros(problem.A.shape[0])
    mu_l = np.zeros(p)
    mu_u = np.zeros(p)
    if nu is not None and len(nu):
        ne = len(eq_keep)
        lam[eq_keep] = nu[:ne] / enorm[eq_keep]
        for j, i in enumerate(W):
            val = max(nu[ne + j], 0.0) / gnorm[i]
            target = {"A": mu_a, "lower": mu_l, "upper": mu_u}[kind[i]]
            target[index[i]] = val
    active = tuple(sorted(int(index[i]) for i in W if kind[i] == "A"))
    return QpSolution(
        x=x,
        status=status,
        iterations=it,
        objective=problem.objective(x),
        eq_multipliers=lam,
        ineq_multipliers=mu_a,
        lower_multipliers=mu_l,
        upper_multipliers=mu_u,
        active=active,
        message=message,
    )


def kkt_report(problem: QpProblem, solution: QpSolution, active_tol: float = 1e-8) -> KktReport:
    x = np.asarray(solution.x, dtype=float)
    if x.shape != (problem.p,):
        raise ValueError("solution does not match problem dimension")
    if solution.ineq_multipliers.shape != (problem.A.shape[0],) or solution.eq_multipliers.shape != (
        problem.Aeq.shape[0],
    ):
        raise ValueError("multiplier dimensions do not match problem")
    mu = solution.ineq_multipliers
    lam = solution.eq_multipliers
    mu_l, mu_u = solution.lower_multipliers, solution.upper_multipliers
    r_eq = problem.Aeq @ x - problem.beq
    r_in = problem.A @ x - problem.b
    lo_gap = np.where(np.isfinite(problem.lower), problem.lower - x, -np.inf)
    hi_gap = np.where(np.isfinite(problem.upper), x - problem.upper, -np.inf)
    grad = problem.H @ x + problem.f + problem.A.T @ mu + problem.Aeq.T @ lam - mu_l + mu_u
    comp = np.concatenate(
        [
            mu * r_in,
            mu_l * np.where(np.isfinite(lo_gap), lo_gap, 0.0),
            mu_u * np.where(np.isfinite(hi_gap), hi_gap, 0.0),
        ]
    )
    active = tuple(int(i) for i in np.flatnonzero(r_in >= -active_tol))
    all_mu = np.concatenate([mu, mu_l, mu_u])
    return KktReport(
        primal_eq=float(np.abs(r_eq).max(initial=0.0)),
        primal_ineq=float(max(0.0, r_in.max(initial=0.0), lo_gap.max(initial=-np.inf), hi_gap.max(initial=-np.inf))),
        stationarity=float(np.abs(grad).max(initial=0.0)),
        complementarity=float(np.abs(comp).max(initial=0.0)),
        dual_feasibility=float(max(0.0, -all_mu.min(initial=0.0))),
        active=active,
    )
