"""Ground-truth instances: spikes, patterns, mixtures and noise.

Noise comes from a small portable generator so that a seed means the same
samples everywhere. It is SplitMix64 used in counter mode: draw ``i``
(``i = 0, 1, ...``) is ``mix64(seed + (i + 1) * 0x9E3779B97F4A7C15 mod 2**64)``,
which coincides with the ``i``-th output of the usual sequential SplitMix64
started from ``seed``. For seed 0 the first three draws are

    0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F.

Gaussian samples ``2j`` and ``2j+1`` come from draws ``2j`` and ``2j+1``
by Box-Muller, with ``u1 = ((z >> 11) + 1) / 2**53`` in (0, 1]
and ``u2 = (z >> 11) / 2**53`` in [0, 1):
``sqrt(-2 ln u1) cos(2 pi u2)`` and ``sqrt(-2 ln u1) sin(2 pi u2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import SpecViolation
from .measures import SparseMeasure
from .operators import Grid, GridSignal, MultiChannelSignal, forward, mix
from .patterns import HalfEllipse, Pattern, Triangle

__all__ = [
    "GOLDEN_GAMMA", "splitmix64", "uniform53", "gaussian", "NoiseSpec", "ScenarioSpec",
    "Scenario", "generate", "figure1",
]

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Draws ``offset .. offset + count - 1`` of the counter-mode generator."""
    if count < 0:
        raise ValueError("count must be non-negative")
    seed = int(seed) % 2 ** 64
    ctr = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + ctr * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return z


def uniform53(z: np.ndarray, open_zero: bool = False) -> np.ndarray:
    """Top 53 bits as a double in [0, 1), or (0, 1] with ``open_zero``."""
    top = (z >> np.uint64(11)).astype(np.float64)
    if open_zero:
        top = top + 1.0
    return top * 2.0 ** -53


def gaussian(seed: int, count: int) -> np.ndarray:
    """``count`` standard normal samples by Box-Muller on consecutive draw pairs."""
    pairs = (count + 1) // 2
    z = splitmix64(seed, 2 * pairs)
    u1 = uniform53(z[0::2], open_zero=True)
    u2 = uniform53(z[1::2])
    rad = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * pairs)
    out[0::2] = rad * np.cos(2.0 * np.pi * u2)
    out[1::2] = rad * np.sin(2.0 * np.pi * u2)
    return out[:count]


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    seed: int = 0
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"noise.kind: only 'gaussian' is supported, got {self.kind!r}")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"noise.sigma must be >= 0, got {self.sigma!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    grid: Grid
    patterns: tuple
    spikes: tuple                      # one SparseMeasure per pattern
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if len(self.patterns) != len(self.spikes):
            raise ValueError(f"{len(self.patterns)} patterns but {len(self.spikes)} spike lists")
        if not self.patterns:
            raise ValueError("at least one pattern is required")

    def check(self):
        """Raise :class:`SpecViolation` if a spike's atom would be cut by the window edge."""
        lo, hi = self.grid.start, self.grid.stop
        for i, (y, nu) in enumerate(zip(self.patterns, self.spikes)):
            r = y.support_radius
            for sp in nu:
                if not (lo + r <= sp.position <= hi - r):
                    raise SpecViolation(
                        f"channel {i}: spike at {sp.position} is closer than the support radius "
                        f"{r} to the window [{lo}, {hi}]")


class Scenario(NamedTuple):
    b: GridSignal
    truth: list
    clean: MultiChannelSignal


def generate(spec: ScenarioSpec) -> Scenario:
    """Clean channels ``A_i nu_i``, and their mixture plus Gaussian noise."""
    spec.check()
    chans = [forward(nu, y, spec.grid) for y, nu in zip(spec.patterns, spec.spikes)]
    clean = MultiChannelSignal.from_channels(chans)
    b = mix(clean).values
    if spec.noise.sigma > 0:
        b = b + spec.noise.sigma * gaussian(spec.noise.seed, spec.grid.count)
    return Scenario(GridSignal(spec.grid, b), list(spec.spikes), clean)


def figure1(sigma: float = 0.0, seed: int = 0, step: float = 0.01) -> ScenarioSpec:
    """Two half-ellipses (channel 0) and two triangles (channel 1) on [0, 7]."""
    grid = Grid.from_interval(0.0, 7.0, step)
    patterns: Sequence[Pattern] = (HalfEllipse(0.5), Triangle(0.5))
    spikes = (SparseMeasure.from_pairs([(1.0, 1.4), (4.0, 1.0)]),
              SparseMeasure.from_pairs([(2.7, 0.9), (5.9, 1.2)]))
    return ScenarioSpec(grid, tuple(patterns), spikes, NoiseSpec(sigma, seed))
