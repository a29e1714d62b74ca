"""Grid signals, the convolution operator A, its certificate A*, and the mixer C.

Signals live on a finite uniform window that stands in for l2(Z): values are
taken to be zero outside the window. The pairing between a spike measure and
a grid signal is the plain sum ``sum_k u[k] * (nu * y)(omega_k)``, so the
adjoint of ``forward`` evaluated at ``s`` is ``sum_k u[k] * y(omega_k - s)``
without any quadrature weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import GridMismatch, NonFiniteInput
from .linesearch import golden_section
from .measures import SparseMeasure
from .patterns import Pattern

__all__ = [
    "Grid", "GridSignal", "MultiChannelSignal", "Certificate",
    "forward", "atom_matrix", "adjoint_eval", "scan_adjoint", "scan_peaks",
    "certificate_sup", "mix", "mix_adjoint", "power_iteration", "default_loc_tol",
]


@dataclass(frozen=True)
class Grid:
    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.step)):
            raise NonFiniteInput("grid start/step must be finite")
        if self.step <= 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"grid count must be an integer >= 2, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_interval(cls, start: float, stop: float, step: float) -> "Grid":
        count = int(round((stop - start) / step)) + 1
        return cls(float(start), float(step), count)

    @classmethod
    def from_nodes(cls, nodes, rtol: float = 1e-9) -> "Grid":
        nodes = np.asarray(nodes, dtype=float)
        if nodes.size < 2:
            raise GridMismatch("need at least two nodes to infer a grid")
        grid = cls(float(nodes[0]), float((nodes[-1] - nodes[0]) / (nodes.size - 1)), nodes.size)
        if not np.allclose(grid.nodes, nodes, rtol=0, atol=rtol * grid.step):
            raise GridMismatch("nodes are not uniformly spaced")
        return grid

    @cached_property
    def nodes(self) -> np.ndarray:
        out = self.start + self.step * np.arange(self.count)
        out.flags.writeable = False
        return out

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.count - 1)

    def matches(self, other: "Grid", rtol: float = 1e-9) -> bool:
        return (self.count == other.count
                and abs(self.step - other.step) <= rtol * self.step
                and abs(self.start - other.start) <= rtol * self.step)


def _frozen(values, shape=None):
    arr = np.array(values, dtype=float)
    if shape is not None and arr.shape != shape:
        raise GridMismatch(f"expected values of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("signal values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GridSignal:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, (self.grid.count,)))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridSignal":
        return cls(grid, np.zeros(grid.count))

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def inner(self, other: "GridSignal") -> float:
        _check_same_grid(self.grid, other.grid)
        return float(np.dot(self.values, other.values))

    def __add__(self, other):
        _check_same_grid(self.grid, other.grid)
        return GridSignal(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self.grid, other.grid)
        return GridSignal(self.grid, self.values - other.values)

    def __mul__(self, c: float):
        return GridSignal(self.grid, self.values * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class MultiChannelSignal:
    """``n`` signals on one grid, stored as an ``(n, count)`` array."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise GridMismatch(f"multichannel values must be (n, count), got {arr.shape}")
        object.__setattr__(self, "values", _frozen(arr, (arr.shape[0], self.grid.count)))

    @classmethod
    def from_channels(cls, channels: Sequence[GridSignal]) -> "MultiChannelSignal":
        if not channels:
            raise GridMismatch("need at least one channel")
        grid = channels[0].grid
        for ch in channels[1:]:
            _check_same_grid(grid, ch.grid)
        return cls(grid, np.stack([ch.values for ch in channels]))

    @classmethod
    def zeros(cls, grid: Grid, n: int) -> "MultiChannelSignal":
        return cls(grid, np.zeros((n, grid.count)))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> list[GridSignal]:
        return [GridSignal(self.grid, row) for row in self.values]

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def inner(self, other: "MultiChannelSignal") -> float:
        _check_same_grid(self.grid, other.grid)
        return float(np.sum(self.values * other.values))


def _check_same_grid(a: Grid, b: Grid):
    if a != b:
        raise GridMismatch(f"grids differ: {a} vs {b}")


def default_loc_tol(grid: Grid) -> float:
    return grid.step * 1e-4


# -- forward / adjoint -------------------------------------------------------

def atom_matrix(positions, y: Pattern, grid: Grid) -> np.ndarray:
    """Rows ``phi_s[k] = y(omega_k - s)`` for each position ``s``."""
    positions = np.asarray(positions, dtype=float).reshape(-1)
    return y(grid.nodes[None, :] - positions[:, None]).reshape(positions.size, grid.count)


def forward(measure: SparseMeasure, y: Pattern, grid: Grid) -> GridSignal:
    """Sample ``measure * y`` on the grid; spikes integrate pointwise, no quadrature."""
    if len(measure) == 0:
        return GridSignal.zeros(grid)
    phi = atom_matrix(measure.positions, y, grid)
    return GridSignal(grid, measure.amplitudes @ phi)


def _window(grid: Grid, y: Pattern):
    r = y.support_radius
    if not math.isfinite(r):
        raise ValueError("certificate evaluation needs a pattern with finite support radius")
    return r, int(math.ceil(r / grid.step))


def adjoint_eval(u: GridSignal, y: Pattern, s):
    """Evaluate the certificate ``(A* u)(s) = sum_k u[k] y(omega_k - s)``.

    Only nodes within the support radius of ``s`` are visited. ``s`` may be a
    scalar or an array.
    """
    grid = u.grid
    _, half = _window(grid, y)
    s_arr = np.asarray(s, dtype=float)
    flat = s_arr.reshape(-1)
    centre = np.floor((flat - grid.start) / grid.step).astype(np.int64)
    offs = np.arange(-half - 1, half + 2)
    idx = centre[:, None] + offs[None, :]
    valid = (idx >= 0) & (idx < grid.count)
    idx_c = np.clip(idx, 0, grid.count - 1)
    weights = np.where(valid, y(grid.nodes[idx_c] - flat[:, None]), 0.0)
    out = np.einsum("ij,ij->i", weights, u.values[idx_c])
    return float(out[0]) if s_arr.ndim == 0 else out.reshape(s_arr.shape)


def scan_adjoint(u: GridSignal, y: Pattern, refine: int):
    """Certificate values on the grid refined ``refine`` times and extended by
    the support radius on both sides.

    Returns ``(s, values)``; the original nodes are among the scan points
    (every ``refine``-th entry, offset by the extension).
    """
    if refine < 1:
        raise ValueError("refine must be >= 1")
    grid = u.grid
    _, pad = _window(grid, y)
    half = pad + 1
    m = grid.count
    upad = np.zeros(m + 2 * (pad + half))
    upad[pad + half: pad + half + m] = u.values
    offsets = np.arange(-half, half + 1) * grid.step
    out = np.empty((m + 2 * pad, refine))
    for p in range(refine):
        kernel = y(offsets - p * grid.step / refine)
        out[:, p] = np.correlate(upad, kernel, mode="valid")
    q = np.arange(-pad, m + pad)
    s = grid.start + (q[:, None] + np.arange(refine)[None, :] / refine) * grid.step
    # drop the sub-node points past the last extended node
    n_keep = (m + 2 * pad - 1) * refine + 1
    return s.reshape(-1)[:n_keep], out.reshape(-1)[:n_keep]


def scan_peaks(u: GridSignal, y: Pattern, refine: int = 8, loc_tol: float | None = None,
               threshold: float = 0.0):
    """Refined local maxima of ``|A* u|`` whose refined magnitude exceeds ``threshold``.

    Candidates are scan points at least as large as both neighbours (the
    leftmost point of a plateau); each is refined by golden-section search
    on the bracket formed by its two scan neighbours. Returns ``(s, value)``
    arrays sorted by location, ``value`` carrying the sign of ``A* u``.
    """
    grid = u.grid
    if loc_tol is None:
        loc_tol = default_loc_tol(grid)
    s, vals = scan_adjoint(u, y, refine)
    a = np.abs(vals)
    left = np.concatenate(([-1.0], a[:-1]))
    right = np.concatenate((a[1:], [-1.0]))
    cand = np.flatnonzero((a > left) & (a >= right) & (a > 0))
    if cand.size == 0:
        return np.empty(0), np.empty(0)
    h = grid.step / refine
    lo = s[cand] - h
    hi = s[cand] + h

    def mag(pts):
        return np.abs(adjoint_eval(u, y, pts))

    xr, fr = golden_section(mag, lo, hi, loc_tol, maximize=True)
    # refinement must never lose the coarse maximum
    better = fr > a[cand]
    pos = np.where(better, xr, s[cand])
    val = adjoint_eval(u, y, pos)
    keep = np.abs(val) > threshold
    pos, val = pos[keep], val[keep]
    order = np.argsort(pos, kind="stable")
    return pos[order], val[order]


def certificate_sup(u: GridSignal, y: Pattern, scan_refine: int = 8,
                    loc_tol: float | None = None) -> tuple[float, float]:
    """``(sup_s |A* u (s)|, argmax)``; ``(0.0, grid.start)`` for a zero certificate."""
    pos, val = scan_peaks(u, y, scan_refine, loc_tol)
    if pos.size == 0:
        return 0.0, u.grid.start
    j = int(np.argmax(np.abs(val)))
    return float(abs(val[j])), float(pos[j])


@dataclass(frozen=True, eq=False)
class Certificate:
    """The continuous function ``s -> (A_i* u)(s)`` for one pattern."""

    pattern: Pattern
    signal: GridSignal

    def __call__(self, s):
        return adjoint_eval(self.signal, self.pattern, s)

    def sup(self, scan_refine: int = 8, loc_tol: float | None = None):
        return certificate_sup(self.signal, self.pattern, scan_refine, loc_tol)

    def peaks(self, threshold: float = 0.0, scan_refine: int = 8, loc_tol: float | None = None):
        return scan_peaks(self.signal, self.pattern, scan_refine, loc_tol, threshold)


# -- mixing ------------------------------------------------------------------

def mix(x: MultiChannelSignal) -> GridSignal:
    """``C x``: pointwise sum over channels."""
    return GridSignal(x.grid, x.values.sum(axis=0))


def mix_adjoint(u: GridSignal, n: int) -> MultiChannelSignal:
    """``C* u``: ``u`` copied into each of ``n`` channels."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return MultiChannelSignal(u.grid, np.broadcast_to(u.values, (n, u.grid.count)))


def power_iteration(normal_op, shape, iters: int = 1000, tol: float = 1e-12, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD operator given as an array map."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(shape)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = normal_op(v)
        new = float(np.vdot(v, w))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if abs(new - est) <= tol * max(abs(new), 1.0):
            return new
        est = new
    return est
