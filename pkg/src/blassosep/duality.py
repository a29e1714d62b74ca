"""Conjugates, the dual objective and duality-gap bookkeeping.

With ``f = alpha ||.||_TV`` (through ``A``) and ``g = 1/2 ||.||^2`` the dual
problem reads

    max_r  <r, b> - 1/2 ||r||^2    s.t.  ||A_i* r||_inf <= alpha  for every channel i,

and its maximiser is the residual ``b - C x`` of the primal problem. The
conjugate of ``f`` is an indicator; it is carried as a feasibility flag plus
the size of the worst violation and never turned into a floating infinity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import GridMismatch
from .operators import GridSignal, MultiChannelSignal, certificate_sup
from .patterns import Pattern

__all__ = [
    "IndicatorValue", "DualPoint", "GapReport",
    "g_value", "g_conj_value", "f_conj_indicator", "dual_objective", "primal_objective",
    "fenchel_young_check", "residual_identity_check", "max_certificate", "gap_report",
]

FY_SLACK = 1e-9


class IndicatorValue(NamedTuple):
    feasible: bool
    max_violation: float


def g_value(gamma: GridSignal) -> float:
    return 0.5 * float(np.dot(gamma.values, gamma.values))


def g_conj_value(gamma: GridSignal) -> float:
    """Conjugate of ``1/2 ||.||^2``, which is itself."""
    return 0.5 * float(np.dot(gamma.values, gamma.values))


def max_certificate(r: GridSignal, patterns: Sequence[Pattern], scan_refine: int = 8,
                    loc_tol: float | None = None) -> float:
    """``max_i sup_s |(A_i* r)(s)|``."""
    return max(certificate_sup(r, y, scan_refine, loc_tol)[0] for y in patterns)


def f_conj_indicator(x_star: MultiChannelSignal, patterns: Sequence[Pattern], tau: float,
                     scan_refine: int = 8, loc_tol: float | None = None,
                     rtol: float = 1e-12) -> IndicatorValue:
    """Evaluate the indicator of ``{x* : ||A_i* x*_i||_inf <= tau for all i}``.

    ``rtol`` is a roundoff allowance: a point rescaled to sit exactly on the
    boundary can come out a few ulps above ``tau``.
    """
    if len(patterns) != x_star.n:
        raise GridMismatch(f"{x_star.n} channels but {len(patterns)} patterns")
    sups = [certificate_sup(ch, y, scan_refine, loc_tol)[0]
            for ch, y in zip(x_star.channels, patterns)]
    worst = max(sups)
    return IndicatorValue(worst <= tau * (1.0 + rtol), worst - tau)


def dual_objective(r: GridSignal, b: GridSignal) -> float:
    if r.grid != b.grid:
        raise GridMismatch("dual variable and data live on different grids")
    return float(np.dot(r.values, b.values) - 0.5 * np.dot(r.values, r.values))


def primal_objective(x: MultiChannelSignal, b: GridSignal, tv_bound: float, alpha: float) -> float:
    """``1/2 ||C x - b||^2 + alpha * tv_bound``; ``tv_bound`` must be the TV of
    some measure whose image under ``A`` is ``x``."""
    if x.grid != b.grid:
        raise GridMismatch("iterate and data live on different grids")
    res = x.values.sum(axis=0) - b.values
    return float(0.5 * np.dot(res, res) + alpha * tv_bound)


def fenchel_young_check(pairing: float, f_val: float, fstar_val: float,
                        fstar_feasible: bool = True) -> bool:
    """``pairing <= f + f*`` up to ``1e-9``. An infeasible indicator is ``+inf``."""
    if not fstar_feasible:
        return True
    return pairing <= f_val + fstar_val + FY_SLACK


def residual_identity_check(x: MultiChannelSignal, r: GridSignal, b: GridSignal) -> float:
    """``||r - (b - C x)||``; zero when ``r`` is the primal residual."""
    if not (x.grid == r.grid == b.grid):
        raise GridMismatch("inputs live on different grids")
    return float(np.linalg.norm(r.values - (b.values - x.values.sum(axis=0))))


@dataclass(frozen=True)
class DualPoint:
    r: GridSignal
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def violation(self, patterns, scan_refine=8, loc_tol=None) -> float:
        return max_certificate(self.r, patterns, scan_refine, loc_tol) - self.alpha

    def is_feasible(self, patterns, feas_tol=1e-6, scan_refine=8, loc_tol=None) -> bool:
        return self.violation(patterns, scan_refine, loc_tol) <= self.alpha * feas_tol

    def rescaled(self, patterns, scan_refine=8, loc_tol=None) -> "DualPoint":
        """Shrink ``r`` onto the feasible set along the ray through the origin."""
        sup = max_certificate(self.r, patterns, scan_refine, loc_tol)
        if sup <= self.alpha:
            return self
        return DualPoint(self.r * (self.alpha / sup), self.alpha)


@dataclass(frozen=True)
class GapReport:
    primal_value: float
    dual_value: float
    gap: float
    max_violation: float

    FIELDS = ("primal", "dual", "gap", "max_violation")

    def relative_gap(self) -> float:
        return self.gap / (1.0 + abs(self.primal_value))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.FIELDS)
            w.writerow([repr(self.primal_value), repr(self.dual_value), repr(self.gap),
                        repr(self.max_violation)])


def gap_report(primal_value: float, r: GridSignal, b: GridSignal, patterns: Sequence[Pattern],
               alpha: float, scan_refine: int = 8, loc_tol: float | None = None) -> GapReport:
    """Duality gap between a primal value and the dual candidate ``r``.

    ``max_violation`` is reported for ``r`` as given; the dual value is taken
    at ``r`` rescaled onto the feasible set so it is a valid lower bound.
    """
    sup = max_certificate(r, patterns, scan_refine, loc_tol)
    r_feas = r if sup <= alpha else r * (alpha / sup)
    dual = dual_objective(r_feas, b)
    return GapReport(float(primal_value), dual, float(primal_value) - dual, sup - alpha)
