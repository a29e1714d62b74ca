"""Proximal-gradient separation of convolutional sources without touching the measure.

The separated channels ``x = A nu`` solve

    min_x  1/2 ||C x - b||^2 + f(x),    f(x) = min { alpha ||nu||_TV : A nu = x },

and although ``f`` itself is an infimum over measures, its proximal map is
available through Moreau's decomposition,

    prox_{lam f}(v) = v - P(v),

where ``P`` is the Euclidean projection onto ``{z : ||A_i* z_i||_inf <= lam alpha}``.
That set is cut out by a continuum of slabs, one per shift ``s``; the
projection is computed by an exchange method that alternates between
locating the violated peaks of the certificate and solving the projection
onto the finitely many slabs found so far.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .errors import ConfigError, ExchangeDivergence, GridMismatch, MaxItersExceeded
from .operators import (
    GridSignal, MultiChannelSignal, atom_matrix, certificate_sup, default_loc_tol,
    scan_peaks,
)
from .patterns import Pattern

__all__ = [
    "SolverConfig", "ActiveConstraint", "IterateLog", "IterateRow", "Projection",
    "SolveResult", "project_ball", "prox_step", "solve", "finite_projection",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    step: float | None = None          # None -> 1/n
    max_outer_iters: int = 5000
    fp_tol: float = 1e-6
    feas_tol: float = 1e-6
    scan_refine: int = 8
    loc_tol: float | None = None       # None -> grid step * 1e-4
    inner_max_iters: int = 200
    inner_tol: float = 1e-10
    acceleration: bool = True
    restart: str = "residual"          # "residual", "gradient" or "none"
    cd_sweeps: int = 10

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.step is not None and not self.step > 0:
            raise ConfigError(f"step must be positive, got {self.step}")
        if self.scan_refine < 2:
            raise ConfigError("scan_refine must be >= 2")
        if self.restart not in ("gradient", "residual", "none"):
            raise ConfigError(f"restart must be 'gradient', 'residual' or 'none', got {self.restart!r}")
        for name in ("fp_tol", "feas_tol", "inner_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    def resolved(self, n: int, grid) -> "SolverConfig":
        """Fill in the grid/channel dependent defaults and check the descent bound."""
        step = 1.0 / n if self.step is None else self.step
        if step > 1.0 / n * (1 + 1e-12):
            raise ConfigError(f"step {step} exceeds the descent bound 1/n = {1.0 / n}")
        loc_tol = default_loc_tol(grid) if self.loc_tol is None else self.loc_tol
        return replace(self, step=step, loc_tol=loc_tol)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ActiveConstraint:
    """Half-space ``sign * (A_i* z)(location) <= tau`` with multiplier ``mu``."""

    channel: int
    location: float
    sign: int
    mu: float = 0.0


class Projection(NamedTuple):
    u: GridSignal
    active: list
    exchanges: int


# -- finite projection -------------------------------------------------------

def finite_projection(v: np.ndarray, phi: np.ndarray, signs: np.ndarray, tau: float,
                      mu0: np.ndarray | None = None, tol: float = 1e-10,
                      sweeps: int = 10) -> np.ndarray:
    """Multipliers of ``min 1/2 ||u - v||^2  s.t.  signs_j <phi_j, u> <= tau``.

    The primal point is ``u = v - sum_j mu_j signs_j phi_j``. A few cyclic
    dual coordinate ascent sweeps (fixed order, warm-started from ``mu0``)
    are tried first; if they leave a KKT residual above ``tol`` the problem
    is solved exactly as a least-distance program through non-negative least
    squares. On return every multiplier is non-negative, slabs with
    ``mu_j > 0`` are tight and the others are satisfied, both to ``tol``
    up to roundoff.
    """
    J = phi.shape[0]
    if J == 0:
        return np.zeros(0)
    B = phi * signs[:, None]
    G = B @ B.T
    c = B @ v - tau
    diag = np.diag(G).copy()
    if np.any(diag <= 0):
        raise ValueError("zero atom in the finite projection")
    mu = np.zeros(J) if mu0 is None else np.maximum(np.asarray(mu0, float), 0.0).copy()
    for _ in range(sweeps):
        for j in range(J):
            mu[j] = max(0.0, mu[j] + (c[j] - G[j] @ mu) / diag[j])
        if _kkt_residual(G, c, mu) <= tol:
            return mu
    return _least_distance(B, c)


def _kkt_residual(G, c, mu):
    w = c - G @ mu                      # w_j = -(slack of slab j)
    act = mu > 0
    viol = float(w.max(initial=0.0))
    comp = float(np.abs(w[act]).max(initial=0.0))
    return max(viol, comp)


def _least_distance(B, c):
    """Solve ``min ||d||  s.t.  -B d >= c`` (``d = u - v``) by the classic
    reduction to NNLS on ``[-B^T; c^T] m ~ e_last``; ``mu = m / (1 - c.m)``."""
    E = np.vstack([-B.T, c[None, :]])
    f = np.zeros(E.shape[0])
    f[-1] = 1.0
    m, _ = optimize.nnls(E, f, maxiter=50 * E.shape[1])
    den = 1.0 - float(c @ m)
    if not den > 0:
        # only possible when the slabs have empty intersection, never with tau > 0
        raise ArithmeticError("finite projection is infeasible")
    return m / den


# -- semi-infinite projection ------------------------------------------------

def project_ball(v: GridSignal, y: Pattern, tau: float, cfg: SolverConfig,
                 warm: Sequence[ActiveConstraint] = (), channel: int = 0) -> Projection:
    """Project ``v`` onto ``{u : |(A* u)(s)| <= tau for every real s}``.

    Exchange method: scan ``|A* u|`` for peaks above ``tau (1 + feas_tol)``,
    add them to the working set, re-solve the finite projection, drop slabs
    whose multiplier is zero, repeat. ``warm`` seeds the working set,
    typically with the previous outer iteration's active constraints; a
    warm point closer than ``loc_tol`` to a violated peak is moved onto the
    peak (once), so drifting peaks do not pile up near-duplicate slabs.
    Points placed during this call are never moved: near a cusp of the
    certificate several violated peaks can sit within ``loc_tol`` of each
    other, and moving one slab back and forth between them would cycle.

    Raises :class:`ExchangeDivergence` if the scan still finds violations
    after ``inner_max_iters`` exchanges.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    grid = v.grid
    loc_tol = cfg.loc_tol if cfg.loc_tol is not None else default_loc_tol(grid)
    locs = [c.location for c in warm]
    signs = [c.sign for c in warm]
    movable = [True] * len(locs)
    mu = np.array([c.mu for c in warm], dtype=float)
    vv = v.values
    u = vv
    limit = tau * (1.0 + cfg.feas_tol)
    for exchange in range(cfg.inner_max_iters + 1):
        if locs:
            phi = atom_matrix(locs, y, grid)
            sg = np.array(signs, dtype=float)
            mu = finite_projection(vv, phi, sg, tau, mu, cfg.inner_tol, cfg.cd_sweeps)
            keep = mu > 0
            u = vv - (mu[keep] * sg[keep]) @ phi[keep]
            locs = [p for p, k in zip(locs, keep) if k]
            signs = [s for s, k in zip(signs, keep) if k]
            movable = [m for m, k in zip(movable, keep) if k]
            mu = mu[keep]
        else:
            u = vv
        u_sig = GridSignal(grid, u)
        pos, val = scan_peaks(u_sig, y, cfg.scan_refine, loc_tol, threshold=limit)
        if pos.size == 0:
            active = [ActiveConstraint(channel, float(p), int(s), float(m))
                      for p, s, m in zip(locs, signs, mu)]
            return Projection(u_sig, active, exchange)
        if exchange == cfg.inner_max_iters:
            worst = float(np.max(np.abs(val)))
            raise ExchangeDivergence(
                f"channel {channel}: certificate peak {worst:.6g} still exceeds tau={tau:.6g} "
                f"after {cfg.inner_max_iters} exchanges")
        mu_list = list(mu)
        for p, s_val in zip(pos, val):
            sign = 1 if s_val > 0 else -1
            j = _nearest(locs, p, loc_tol)
            if j is not None and movable[j]:
                # the warm point is (nearly) satisfied, the scan point is violated
                locs[j] = float(p)
                signs[j] = sign
                movable[j] = False
            else:
                locs.append(float(p))
                signs.append(sign)
                movable.append(False)
                mu_list.append(0.0)
        mu = np.array(mu_list)
    raise AssertionError("unreachable")


def _nearest(locs, p, tol):
    best, best_d = None, tol
    for j, q in enumerate(locs):
        d = abs(q - p)
        if d <= best_d:
            best, best_d = j, d
    return best


# -- outer iteration ---------------------------------------------------------

class IterateRow(NamedTuple):
    iter: int
    fp_residual: float
    feas_violation: float
    mix_residual: float
    active_total: int


@dataclass
class IterateLog:
    rows: list = field(default_factory=list)

    FIELDS = IterateRow._fields

    def append(self, row: IterateRow):
        if self.rows and row.iter <= self.rows[-1].iter:
            raise ValueError("iterate log rows must be increasing in iter")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.FIELDS)
            for r in self.rows:
                w.writerow([r.iter, repr(r.fp_residual), repr(r.feas_violation),
                            repr(r.mix_residual), r.active_total])


@dataclass
class SolveResult:
    x: MultiChannelSignal
    r: GridSignal
    log: IterateLog
    converged: bool
    iterations: int
    dual: GridSignal            # projection-side estimate of the residual, always feasible
    active: list


class _StepOut(NamedTuple):
    x: np.ndarray
    proj: np.ndarray
    active: list


def _prox_step_arrays(xv, bv, grid, patterns, cfg, warm):
    lam = cfg.step
    tau = lam * cfg.alpha
    v = xv - lam * (xv.sum(axis=0) - bv)[None, :]
    proj = np.empty_like(v)
    active = []
    for i, y in enumerate(patterns):
        res = project_ball(GridSignal(grid, v[i]), y, tau, cfg, warm[i] if warm else (), channel=i)
        proj[i] = res.u.values
        active.append(res.active)
    return _StepOut(v - proj, proj, active)


def prox_step(x: MultiChannelSignal, b: GridSignal, patterns: Sequence[Pattern],
              cfg: SolverConfig) -> MultiChannelSignal:
    """One forward-backward step ``x+ = v - P(v)`` with ``v = x - lam C*(C x - b)``."""
    _check_inputs(x, b, patterns)
    cfg = cfg.resolved(x.n, x.grid)
    out = _prox_step_arrays(x.values, b.values, x.grid, patterns, cfg, None)
    return MultiChannelSignal(x.grid, out.x)


def _check_inputs(x, b, patterns):
    if x.grid != b.grid:
        raise GridMismatch("iterate and data live on different grids")
    if len(patterns) != x.n:
        raise GridMismatch(f"{x.n} channels but {len(patterns)} patterns")


def _residual_violation(rv, grid, patterns, cfg):
    r = GridSignal(grid, rv)
    sup = max(certificate_sup(r, y, cfg.scan_refine, cfg.loc_tol)[0] for y in patterns)
    return sup - cfg.alpha


def solve(b: GridSignal, patterns: Sequence[Pattern], cfg: SolverConfig,
          x0: MultiChannelSignal | None = None) -> SolveResult:
    """Run the proximal-gradient iteration from ``x0`` (zero by default).

    Stops when ``||x+ - y||/lam <= fp_tol (1 + ||b||)``, ``y`` being the point
    the step was taken from (the extrapolated point under acceleration).
    Issues :class:`MaxItersExceeded` and returns the last iterate with
    ``converged=False`` if the budget runs out.
    """
    n = len(patterns)
    grid = b.grid
    if x0 is None:
        x0 = MultiChannelSignal.zeros(grid, n)
    _check_inputs(x0, b, patterns)
    cfg = cfg.resolved(n, grid)
    lam = cfg.step
    bv = b.values
    bnorm = float(np.linalg.norm(bv))
    stop = cfg.fp_tol * (1.0 + bnorm)

    x = x0.values.copy()
    yk = x.copy()
    t = 1.0
    warm = [() for _ in range(n)]
    logbook = IterateLog()
    converged = False
    prev_res = math.inf
    proj = np.zeros_like(x)
    it = 0
    for it in range(1, cfg.max_outer_iters + 1):
        out = _prox_step_arrays(yk, bv, grid, patterns, cfg, warm)
        warm = out.active
        proj = out.proj
        x_new = out.x
        fp = float(np.linalg.norm(x_new - yk)) / lam
        rv = bv - x_new.sum(axis=0)
        mix_res = float(np.linalg.norm(rv))
        viol = _residual_violation(rv, grid, patterns, cfg)
        logbook.append(IterateRow(it, fp, viol, mix_res, sum(len(a) for a in warm)))
        if fp <= stop:
            x = x_new
            converged = True
            break
        if not cfg.acceleration:
            yk = x_new
        else:
            if cfg.restart == "gradient":
                restart = float(np.sum((yk - x_new) * (x_new - x))) > 0
            elif cfg.restart == "residual":
                restart = mix_res > prev_res
            else:
                restart = False
            if restart:
                t = 1.0
                yk = x_new
            else:
                t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
                yk = x_new + ((t - 1.0) / t_new) * (x_new - x)
                t = t_new
        prev_res = mix_res
        x = x_new
        if it % 100 == 0:
            log.debug("iter %d fp=%.3e viol=%.3e res=%.4e", it, fp, viol, mix_res)
    if not converged:
        warnings.warn(f"proximal iteration stopped after {it} iterations without reaching "
                      f"fp_tol={cfg.fp_tol}", MaxItersExceeded, stacklevel=2)
    xs = MultiChannelSignal(grid, x)
    r = GridSignal(grid, bv - x.sum(axis=0))
    dual = GridSignal(grid, proj.mean(axis=0) / lam)
    return SolveResult(xs, r, logbook, converged, it, dual,
                       [c for chan in warm for c in chan])
