"""Golden-section search, vectorized over independent brackets."""

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def golden_section(f, lo, hi, tol, maximize=False):
    """Locate an extremum of ``f`` inside each bracket ``[lo[i], hi[i]]``.

    ``f`` maps an array of abscissae to an array of values; all brackets
    advance in lockstep, so ``f`` is called with one point per bracket per
    step. Each function is assumed unimodal on its bracket. Iteration stops
    once every bracket is narrower than ``tol``.

    Returns ``(x, fx)``: the best point seen per bracket and its value.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float)).copy()
    hi = np.atleast_1d(np.asarray(hi, dtype=float)).copy()
    sgn = -1.0 if maximize else 1.0

    def g(x):
        return sgn * np.asarray(f(x), dtype=float)

    width = float(np.max(hi - lo)) if lo.size else 0.0
    steps = 0 if width <= tol else int(math.ceil(math.log(tol / width) / math.log(INV_PHI)))

    c = lo + INV_PHI2 * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    gc, gd = g(c), g(d)
    for _ in range(steps):
        left = gc < gd
        # minimum in [lo, d]: shift d <- c and probe a new c
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_c = lo + INV_PHI2 * (hi - lo)
        new_d = lo + INV_PHI * (hi - lo)
        probe = np.where(left, new_c, new_d)
        gp = g(probe)
        c, gc, d, gd = (np.where(left, new_c, d), np.where(left, gp, gd),
                        np.where(left, c, new_d), np.where(left, gc, gp))
    x = np.where(gc < gd, c, d)
    gx = np.minimum(gc, gd)
    return x, sgn * gx
