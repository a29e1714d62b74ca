"""Convolution kernels (patterns) in C0(R).

All built-in patterns are even, continuous and compactly supported, so
both the forward convolution and the certificate ``s -> <u, y(. - s)>`` only
ever touch a finite window of grid nodes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "Pattern", "HalfEllipse", "Triangle", "Gaussian", "RaisedCosine",
    "pattern_from_spec", "check_wiener", "wiener_tail",
]


class Pattern:
    """Base class: a real function on R with a (possibly infinite) support radius.

    Subclasses implement :meth:`evaluate` on float arrays. ``kind`` names the
    pattern in config files.
    """

    kind = "custom"

    def evaluate(self, omega: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, omega):
        arr = np.asarray(omega, dtype=float)
        out = self.evaluate(arr)
        return float(out) if out.ndim == 0 else out

    @property
    def support_radius(self) -> float:
        return math.inf

    @property
    def peak(self) -> float:
        return float(self.evaluate(np.zeros(())))

    def to_spec(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


def _positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class HalfEllipse(Pattern):
    width: float
    height: float = 1.0

    kind = "half_ellipse"

    def __post_init__(self):
        _positive("width", self.width)
        _positive("height", self.height)

    def evaluate(self, omega):
        t = omega / self.width
        return self.height * np.sqrt(np.maximum(0.0, 1.0 - t * t))

    @property
    def support_radius(self):
        return float(self.width)


@dataclass(frozen=True)
class Triangle(Pattern):
    width: float
    height: float = 1.0

    kind = "triangle"

    def __post_init__(self):
        _positive("width", self.width)
        _positive("height", self.height)

    def evaluate(self, omega):
        return self.height * np.maximum(0.0, 1.0 - np.abs(omega) / self.width)

    @property
    def support_radius(self):
        return float(self.width)


@dataclass(frozen=True)
class Gaussian(Pattern):
    """Gaussian bump truncated at ``radius``, shifted down so it vanishes there."""

    sigma: float
    height: float = 1.0
    radius: float = 4.0

    kind = "gaussian"

    def __post_init__(self):
        _positive("sigma", self.sigma)
        _positive("height", self.height)
        _positive("radius", self.radius)

    def evaluate(self, omega):
        floor = math.exp(-self.radius ** 2 / (2 * self.sigma ** 2))
        val = np.exp(-omega * omega / (2 * self.sigma ** 2)) - floor
        return np.where(np.abs(omega) <= self.radius, self.height * np.maximum(val, 0.0), 0.0)

    @property
    def support_radius(self):
        return float(self.radius)


@dataclass(frozen=True)
class RaisedCosine(Pattern):
    width: float
    height: float = 1.0

    kind = "raised_cosine"

    def __post_init__(self):
        _positive("width", self.width)
        _positive("height", self.height)

    def evaluate(self, omega):
        inside = np.abs(omega) <= self.width
        val = 0.5 * self.height * (1.0 + np.cos(np.pi * np.clip(omega / self.width, -1, 1)))
        return np.where(inside, val, 0.0)

    @property
    def support_radius(self):
        return float(self.width)


_KINDS = {cls.kind: cls for cls in (HalfEllipse, Triangle, Gaussian, RaisedCosine)}


def pattern_from_spec(spec: dict) -> Pattern:
    """Build a pattern from a config mapping such as
    ``{"kind": "half_ellipse", "width": 0.5, "height": 1.4}``."""
    if not isinstance(spec, dict):
        raise ConfigError(f"pattern spec must be an object, got {type(spec).__name__}")
    params = dict(spec)
    kind = params.pop("kind", None)
    if kind not in _KINDS:
        raise ConfigError(f"pattern.kind: unknown kind {kind!r}; expected one of {sorted(_KINDS)}")
    try:
        return _KINDS[kind](**params)
    except TypeError as exc:
        raise ConfigError(f"pattern ({kind}): {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"pattern ({kind}).{exc}") from None


def wiener_tail(y: Pattern, probe_spacing: float, *, start: float | None = None,
                n_tiles: int = 1000, samples_per_tile: int = 16) -> float:
    """Sampled sup-sum of ``|y|`` over tiles of width ``probe_spacing`` beyond ``start``.

    Tiles ``[start + k d, start + (k+1) d]`` for ``k < n_tiles`` are taken on
    both sides of the origin. ``start`` defaults to the support radius, or to
    ``n_tiles * probe_spacing`` for patterns of unbounded support.
    """
    if probe_spacing <= 0:
        raise ValueError("probe_spacing must be positive")
    if start is None:
        r = y.support_radius
        start = r if math.isfinite(r) else n_tiles * probe_spacing
    offs = np.linspace(0.0, probe_spacing, samples_per_tile)
    edges = start + probe_spacing * np.arange(n_tiles)
    pts = edges[:, None] + offs[None, :]
    right = np.abs(y(pts)).max(axis=1)
    left = np.abs(y(-pts)).max(axis=1)
    return float(right.sum() + left.sum())


def check_wiener(y: Pattern, probe_spacing: float, tail_tol: float, **kwargs) -> bool:
    """True iff the sampled Wiener-amalgam tail of ``y`` is below ``tail_tol``."""
    return wiener_tail(y, probe_spacing, **kwargs) < tail_tol
