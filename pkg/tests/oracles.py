"""Independent reference implementations used only by the tests.

None of these share code paths with the package beyond pattern evaluation:
sums are written out as loops, the projection oracle discretises the shift
variable densely and runs Dykstra's algorithm, and the PRNG reference is the
textbook sequential SplitMix64.
"""

import math

import numba
import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64_sequential(seed, count):
    state = seed & MASK64
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def brute_adjoint(u_values, nodes, y, s):
    """``sum_k u[k] y(omega_k - s)`` as a plain Python loop."""
    return math.fsum(float(u) * float(y(float(w) - s)) for u, w in zip(u_values, nodes))


def dense_shifts(grid, y, refine):
    """Shift positions at ``step / refine`` over the window extended by the support radius."""
    r = y.support_radius
    pad = int(math.ceil(r / grid.step))
    q = np.arange(-pad * refine, (grid.count - 1 + pad) * refine + 1)
    return grid.start + q * (grid.step / refine)


def dense_certificate(u_values, grid, y, refine):
    s = dense_shifts(grid, y, refine)
    rows = y(grid.nodes[None, :] - s[:, None])
    return s, rows @ u_values


def slab_rows(grid, y, refine):
    """Windowed rows of the slab constraints ``|<phi_s, u>| <= tau`` on the dense shift set."""
    s = dense_shifts(grid, y, refine)
    full = y(grid.nodes[None, :] - s[:, None])
    nz = full != 0.0
    keep = nz.any(axis=1)
    full, nz = full[keep], nz[keep]
    first = nz.argmax(axis=1)
    last = grid.count - 1 - nz[:, ::-1].argmax(axis=1)
    width = int((last - first).max()) + 1
    starts = np.minimum(first, grid.count - width)
    W = np.zeros((full.shape[0], width))
    for j in range(full.shape[0]):
        W[j] = full[j, starts[j]:starts[j] + width]
    return starts.astype(np.int64), W


@numba.njit(cache=True)
def _dykstra(v, starts, W, tau, tol, max_sweeps):
    J, width = W.shape
    u = v.copy()
    q = np.zeros((J, width))
    nrm2 = np.empty(J)
    for j in range(J):
        acc = 0.0
        for k in range(width):
            acc += W[j, k] * W[j, k]
        nrm2[j] = acc
    z = np.empty(width)
    sweeps = 0
    for sweep in range(max_sweeps):
        sweeps = sweep + 1
        change = 0.0
        for j in range(J):
            s0 = starts[j]
            t = 0.0
            for k in range(width):
                z[k] = u[s0 + k] + q[j, k]
                t += W[j, k] * z[k]
            c = 0.0
            if t > tau:
                c = (t - tau) / nrm2[j]
            elif t < -tau:
                c = (t + tau) / nrm2[j]
            for k in range(width):
                new = z[k] - c * W[j, k]
                d = new - u[s0 + k]
                change += d * d
                u[s0 + k] = new
                q[j, k] = c * W[j, k]
        if math.sqrt(change) <= tol:
            break
    return u, sweeps


def dykstra_projection(v, grid, y, tau, refine=64, tol=1e-10, max_sweeps=200000):
    """Projection of ``v`` onto ``{u : |<phi_s, u>| <= tau}`` over the dense shift set.

    Returns ``(u, sweeps)``; iteration stops once a full sweep moves ``u`` by
    at most ``tol`` in norm.
    """
    starts, W = slab_rows(grid, y, refine)
    return _dykstra(np.asarray(v, dtype=float), starts, W, float(tau), tol, max_sweeps)


def soft_threshold_scalar(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def grid_ista_trajectory(b, h, alpha, lam, steps):
    """ISTA in coefficient space for a dictionary ``h * I``, mapped back to signals.

    The x-space step ``lam`` corresponds to the coefficient step ``lam / h**2``.
    """
    a = np.zeros_like(b)
    out = []
    for _ in range(steps):
        grad = h * (h * a - b)
        a = np.array([soft_threshold_scalar(z, lam * alpha / h ** 2)
                      for z in a - (lam / h ** 2) * grad])
        out.append(h * a)
    return out
