"""Liquid scorecards: additive scores built from shape-constrained B-splines."""

from .divstats import divergence_stats, h_matrix, h_matrix_with_roughness, score_divergence, woe_scale
from .engineering import ConstraintSet, Relation, assemble
from .qpsolver import QpProblem, QpSolution, Status, feasible_start, kkt_report, solve
from .scorecard import ScorecardSpec, build_design_matrix, fit, plot_series, step_eval
from .splines import basis_block, pad_knots, roughness_matrix, spline_eval

__all__ = [
    "ConstraintSet",
    "QpProblem",
    "QpSolution",
    "Relation",
    "ScorecardSpec",
    "Status",
    "assemble",
    "basis_block",
    "build_design_matrix",
    "divergence_stats",
    "feasible_start",
    "fit",
    "h_matrix",
    "h_matrix_with_roughness",
    "kkt_report",
    "pad_knots",
    "plot_series",
    "roughness_matrix",
    "score_divergence",
    "solve",
    "spline_eval",
    "step_eval",
    "woe_scale",
]
