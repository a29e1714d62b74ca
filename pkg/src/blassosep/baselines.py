"""Reference solvers used as oracles and witness generators.

``grid_fista`` solves the grid-discretised LASSO (spikes restricted to grid
nodes) and ``frank_wolfe`` is a simplified sliding Frank-Wolfe solver for the
off-grid problem. Neither touches the dual-prox machinery.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, MaxItersExceeded
from .linesearch import golden_section
from .measures import SparseMeasure, tv_norm
from .operators import (
    Grid, GridSignal, MultiChannelSignal, atom_matrix, certificate_sup, default_loc_tol,
    forward, mix, power_iteration,
)
from .patterns import Pattern

__all__ = [
    "shrink", "GridLassoProblem", "GridFistaResult", "grid_fista",
    "FwConfig", "FwSolution", "frank_wolfe", "TvWitness", "tv_witness", "lasso_cd",
]


def shrink(z, t):
    """Soft threshold ``sign(z) max(|z| - t, 0)``."""
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


# -- grid LASSO ----------------------------------------------------------------

def _node_positions(grid: Grid, y: Pattern) -> np.ndarray:
    r = y.support_radius
    pad = int(math.ceil(r / grid.step)) if math.isfinite(r) else 0
    return grid.start + grid.step * np.arange(-pad, grid.count + pad)


@dataclass(frozen=True, eq=False)
class GridLassoProblem:
    """``min 1/2 ||sum_i D_i a_i - b||^2 + alpha sum_i ||a_i||_1``.

    Column ``j`` of ``D_i`` is pattern ``i`` centred on ``positions[i][j]``.
    Candidate positions are the grid nodes plus the nodes just outside the
    grid whose atoms still reach it; columns that vanish on the grid are
    left out.
    """

    grid: Grid
    b: np.ndarray
    alpha: float
    positions: tuple
    dictionaries: tuple

    @classmethod
    def build(cls, b: GridSignal, patterns: Sequence[Pattern], alpha: float) -> "GridLassoProblem":
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        positions, dicts = [], []
        for y in patterns:
            pos = _node_positions(b.grid, y)
            D = atom_matrix(pos, y, b.grid).T
            keep = np.any(D != 0.0, axis=0)
            positions.append(pos[keep])
            dicts.append(np.ascontiguousarray(D[:, keep]))
        return cls(b.grid, b.values.copy(), float(alpha), tuple(positions), tuple(dicts))

    @property
    def n(self) -> int:
        return len(self.dictionaries)

    def apply(self, coefs) -> np.ndarray:
        """Channel signals ``D_i a_i`` stacked as an ``(n, count)`` array."""
        return np.stack([D @ a for D, a in zip(self.dictionaries, coefs)])

    def adjoint(self, r: np.ndarray) -> list:
        return [D.T @ r for D in self.dictionaries]

    def objective(self, coefs) -> float:
        res = self.apply(coefs).sum(axis=0) - self.b
        return 0.5 * float(res @ res) + self.alpha * sum(float(np.abs(a).sum()) for a in coefs)

    def lipschitz(self) -> float:
        """``||[D_1 ... D_n]||^2`` by power iteration."""
        sizes = [D.shape[1] for D in self.dictionaries]
        cuts = np.cumsum(sizes)[:-1]

        def normal(v):
            r = sum(D @ a for D, a in zip(self.dictionaries, np.split(v, cuts)))
            return np.concatenate(self.adjoint(r))

        return power_iteration(normal, (sum(sizes),))

    def measures(self, coefs) -> list:
        return [SparseMeasure.from_arrays(p[a != 0], a[a != 0]) for p, a in zip(self.positions, coefs)]


class GridFistaResult(NamedTuple):
    coefs: list
    iterations: int
    converged: bool


def grid_fista(problem: GridLassoProblem, iters: int = 50000, tol: float = 1e-10,
               restart: bool = True) -> GridFistaResult:
    """FISTA with soft thresholding for :class:`GridLassoProblem`.

    Step ``1/L`` with ``L`` from power iteration (inflated by ``1e-9`` to
    cover its error from below). Stops once ``||a+ - y|| L <= tol (1 + ||b||)``.
    ``restart`` resets the momentum whenever it points uphill.
    """
    L = problem.lipschitz() * (1.0 + 1e-9)
    a = [np.zeros(D.shape[1]) for D in problem.dictionaries]
    if L == 0.0:
        return GridFistaResult(a, 0, True)
    step = 1.0 / L
    thr = problem.alpha * step
    stop = tol * (1.0 + float(np.linalg.norm(problem.b)))
    yk = [ai.copy() for ai in a]
    t = 1.0
    for k in range(1, iters + 1):
        r = problem.apply(yk).sum(axis=0) - problem.b
        grads = problem.adjoint(r)
        a_new = [shrink(yi - step * g, thr) for yi, g in zip(yk, grads)]
        diff = math.sqrt(sum(float(np.sum((an - yi) ** 2)) for an, yi in zip(a_new, yk)))
        if diff * L <= stop:
            return GridFistaResult(a_new, k, True)
        uphill = sum(float(np.dot(yi - an, an - ai)) for yi, an, ai in zip(yk, a_new, a)) > 0
        if restart and uphill:
            t = 1.0
            yk = [an.copy() for an in a_new]
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            beta = (t - 1.0) / t_new
            yk = [an + beta * (an - ai) for an, ai in zip(a_new, a)]
            t = t_new
        a = a_new
    warnings.warn(f"grid FISTA stopped after {iters} iterations", MaxItersExceeded, stacklevel=2)
    return GridFistaResult(a, iters, False)


# -- Frank-Wolfe ---------------------------------------------------------------

def lasso_cd(G: np.ndarray, c: np.ndarray, alpha: float, a0=None, tol: float = 1e-13,
             sweeps: int = 20, max_steps: int | None = None) -> np.ndarray:
    """Solve ``min 1/2 a^T G a - c^T a + alpha ||a||_1`` for a small dense PSD ``G``.

    A few cyclic coordinate-descent sweeps (warm-started from ``a0``) find a
    rough support; feature-sign active-set steps then finish the job: solve
    the quadratic on the current support with the current signs, walk
    towards that point stopping at the best sign change, and bring in the
    worst violated coordinate once the support is optimal. Plain sweeps
    crawl when atoms are nearly duplicated, the active-set steps do not.
    The result satisfies the optimality conditions to ``tol (1 + ||c||)``.
    """
    K = c.size
    a = np.zeros(K) if a0 is None else np.array(a0, dtype=float)
    if K == 0:
        return a
    diag = np.diag(G).copy()
    g = c - G @ a
    scale = tol * (1.0 + math.sqrt(float(c @ c)))
    for _ in range(sweeps):
        delta = 0.0
        for j in range(K):
            z = g[j] + diag[j] * a[j]
            new = math.copysign(max(abs(z) - alpha, 0.0), z) / diag[j]
            step = new - a[j]
            if step != 0.0:
                g -= G[:, j] * step
                a[j] = new
                delta = max(delta, abs(step) * math.sqrt(diag[j]))
        if delta <= scale:
            break
    return _feature_sign(G, c, alpha, a, scale, max_steps or 20 * K + 100)


def _lasso_objective(G, c, alpha, a):
    return 0.5 * float(a @ G @ a) - float(c @ a) + alpha * float(np.abs(a).sum())


def _feature_sign(G, c, alpha, a, scale, max_steps):
    theta = np.sign(a)
    for _ in range(max_steps):
        g = c - G @ a
        S = a != 0
        if np.all(np.abs(g[S] - alpha * theta[S]) <= scale):
            viol = np.where(S, -np.inf, np.abs(g) - alpha)
            j = int(np.argmax(viol))
            if viol[j] <= scale:
                return a
            theta[j] = np.sign(g[j])
        A = np.flatnonzero(theta)
        target = np.zeros_like(a)
        target[A] = np.linalg.lstsq(G[np.ix_(A, A)], c[A] - alpha * theta[A], rcond=None)[0]
        # the objective is quadratic between sign changes; test the end point and every crossing
        best, best_val = target, _lasso_objective(G, c, alpha, target)
        d = target - a
        for k in A:
            if a[k] != 0 and a[k] * target[k] < 0:
                z = a + (a[k] / (a[k] - target[k])) * d
                z[k] = 0.0
                val = _lasso_objective(G, c, alpha, z)
                if val < best_val:
                    best, best_val = z, val
        if best_val >= _lasso_objective(G, c, alpha, a) and np.array_equal(np.sign(best), np.sign(a)):
            return a
        a = best
        theta = np.sign(a)
    return a


@dataclass(frozen=True)
class FwConfig:
    tol: float = 1e-6                 # relative certificate slack at termination
    max_spikes: int = 50              # per channel
    max_iters: int | None = None      # None -> 2 * n * max_spikes
    scan_refine: int = 8
    loc_tol: float | None = None
    slide: bool = True
    slide_radius: float | None = None  # None -> grid step
    cd_tol: float = 1e-13

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("fw.tol must be positive")
        if self.max_spikes < 1:
            raise ConfigError("fw.max_spikes must be >= 1")
        if self.scan_refine < 2:
            raise ConfigError("fw.scan_refine must be >= 2")


@dataclass
class FwSolution:
    measures: list
    cert_sup: list
    iterations: int
    converged: bool
    objective: list = field(default_factory=list)   # value after every iteration

    @property
    def tv(self) -> float:
        return math.fsum(tv_norm(m) for m in self.measures)

    def channels(self, patterns: Sequence[Pattern], grid: Grid) -> MultiChannelSignal:
        return MultiChannelSignal.from_channels(
            [forward(m, y, grid) for m, y in zip(self.measures, patterns)])


class _Atoms:
    """Working set of spikes across channels."""

    def __init__(self, grid, patterns):
        self.grid = grid
        self.patterns = patterns
        self.chan: list[int] = []
        self.pos: list[float] = []
        self.amp = np.zeros(0)

    def matrix(self) -> np.ndarray:
        if not self.pos:
            return np.zeros((0, self.grid.count))
        return np.vstack([atom_matrix([p], self.patterns[i], self.grid)
                          for i, p in zip(self.chan, self.pos)])

    def fit(self, phi=None) -> np.ndarray:
        if not self.pos:
            return np.zeros(self.grid.count)
        phi = self.matrix() if phi is None else phi
        return self.amp @ phi


def _fw_objective(b, fit, amp, alpha):
    res = fit - b
    return 0.5 * float(res @ res) + alpha * math.fsum(np.abs(amp))


def frank_wolfe(b: GridSignal, patterns: Sequence[Pattern], alpha: float,
                cfg: FwConfig | None = None) -> FwSolution:
    """Greedy spike insertion with fully corrective amplitude refits and sliding.

    Each iteration adds a spike where ``|A_i* r|`` is largest over all
    channels, re-fits every amplitude by l1-penalised coordinate descent,
    slides each spike by golden-section search over ``+-slide_radius``
    (amplitude in closed form, moves kept only when they lower the
    objective), re-fits again and drops zero amplitudes. Stops when the
    certificate is below ``alpha (1 + tol)`` on every channel.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    cfg = cfg or FwConfig()
    grid = b.grid
    n = len(patterns)
    loc_tol = cfg.loc_tol if cfg.loc_tol is not None else default_loc_tol(grid)
    radius = cfg.slide_radius if cfg.slide_radius is not None else grid.step
    max_iters = cfg.max_iters if cfg.max_iters is not None else 2 * n * cfg.max_spikes
    bv = b.values
    atoms = _Atoms(grid, patterns)
    history = []
    converged = False
    sups = [0.0] * n
    it = 0
    for it in range(1, max_iters + 2):
        r = GridSignal(grid, bv - atoms.fit())
        scans = [certificate_sup(r, y, cfg.scan_refine, loc_tol) for y in patterns]
        sups = [s for s, _ in scans]
        i_star = int(np.argmax(sups))
        if sups[i_star] <= alpha * (1.0 + cfg.tol):
            converged = True
            break
        if it > max_iters:
            break
        if atoms.chan.count(i_star) >= cfg.max_spikes:
            warnings.warn(f"Frank-Wolfe spike budget {cfg.max_spikes} exhausted on channel {i_star}",
                          MaxItersExceeded, stacklevel=2)
            break
        atoms.chan.append(i_star)
        atoms.pos.append(scans[i_star][1])
        atoms.amp = np.append(atoms.amp, 0.0)
        _refit(atoms, bv, alpha, cfg.cd_tol)
        if cfg.slide:
            _slide(atoms, bv, alpha, radius, loc_tol)
            _refit(atoms, bv, alpha, cfg.cd_tol)
        _drop_zeros(atoms)
        history.append(_fw_objective(bv, atoms.fit(), atoms.amp, alpha))
    else:
        it = max_iters + 1
    if not converged and it > max_iters:
        warnings.warn(f"Frank-Wolfe stopped after {max_iters} iterations", MaxItersExceeded,
                      stacklevel=2)
    measures = []
    for i in range(n):
        sel = [k for k, c in enumerate(atoms.chan) if c == i]
        measures.append(SparseMeasure.from_arrays([atoms.pos[k] for k in sel], atoms.amp[sel]))
    return FwSolution(measures, sups, len(history), converged, history)


def _refit(atoms, bv, alpha, tol):
    phi = atoms.matrix()
    atoms.amp = lasso_cd(phi @ phi.T, phi @ bv, alpha, atoms.amp, tol)


def _slide(atoms, bv, alpha, radius, loc_tol):
    phi = atoms.matrix()
    fit = atoms.amp @ phi
    for k in range(len(atoms.pos)):
        y = atoms.patterns[atoms.chan[k]]
        r_k = bv - fit + atoms.amp[k] * phi[k]

        def gain(s):
            rows = atom_matrix(s, y, atoms.grid)
            corr = rows @ r_k
            nrm2 = np.einsum("ij,ij->i", rows, rows)
            g = np.maximum(np.abs(corr) - alpha, 0.0) ** 2
            return np.where(nrm2 > 0, g / np.where(nrm2 > 0, nrm2, 1.0), 0.0)

        p = atoms.pos[k]
        s_new, _ = golden_section(gain, [p - radius], [p + radius], loc_tol, maximize=True)
        s_new = float(s_new[0])
        # compare the exact partial objectives at the old and new positions
        cand = atom_matrix([s_new], y, atoms.grid)[0]
        nrm2 = float(cand @ cand)
        if nrm2 == 0.0:
            continue
        a_new = float(shrink(cand @ r_k, alpha)) / nrm2
        old_val = _partial(r_k, phi[k], atoms.amp[k], alpha)
        new_val = _partial(r_k, cand, a_new, alpha)
        if new_val < old_val:
            atoms.pos[k] = s_new
            atoms.amp[k] = a_new
            phi[k] = cand
            fit = bv - r_k + a_new * cand


def _partial(r_k, atom, a, alpha):
    res = r_k - a * atom
    return 0.5 * float(res @ res) + alpha * abs(a)


def _drop_zeros(atoms):
    keep = atoms.amp != 0.0
    atoms.chan = [c for c, k in zip(atoms.chan, keep) if k]
    atoms.pos = [p for p, k in zip(atoms.pos, keep) if k]
    atoms.amp = atoms.amp[keep]


# -- TV witness ----------------------------------------------------------------

class TvWitness(NamedTuple):
    tv: float
    fit_residual: float          # ||C A nu - C x||
    solution: FwSolution


def tv_witness(x: MultiChannelSignal, patterns: Sequence[Pattern], alpha: float,
               cfg: FwConfig | None = None, rel_alpha: float = 1e-2) -> TvWitness:
    """TV of a measure whose mixed image approximates ``mix(x)``.

    Runs :func:`frank_wolfe` on ``mix(x)`` with the small penalty
    ``rel_alpha * alpha``. The returned measure is a valid primal point for
    any data, so its objective is an upper bound regardless of how well it
    fits; ``fit_residual`` says how far its image is from ``mix(x)``.
    """
    target = mix(x)
    if not np.any(target.values):
        empty = FwSolution([SparseMeasure.from_pairs([]) for _ in patterns], [0.0] * len(patterns),
                           0, True, [])
        return TvWitness(0.0, 0.0, empty)
    cfg = cfg or FwConfig()
    sol = frank_wolfe(target, patterns, rel_alpha * alpha, cfg)
    fit = mix(sol.channels(patterns, x.grid))
    return TvWitness(sol.tv, float(np.linalg.norm(fit.values - target.values)), sol)

