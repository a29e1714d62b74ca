"""Finite signed spike trains standing in for Radon measures on the real line."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NonFiniteInput

__all__ = ["Spike", "SparseMeasure", "normalize", "tv_norm", "add", "scale"]


@dataclass(frozen=True)
class Spike:
    position: float
    amplitude: float

    def __post_init__(self):
        if not (math.isfinite(self.position) and math.isfinite(self.amplitude)):
            raise NonFiniteInput(
                f"spike fields must be finite, got ({self.position!r}, {self.amplitude!r})")


@dataclass(frozen=True)
class SparseMeasure:
    """A finite linear combination of translated Dirac measures.

    Construction does not reorder anything; call :func:`normalize` (or use
    :meth:`from_pairs`) to get the canonical form, i.e. strictly increasing
    positions with no zero amplitudes.
    """

    spikes: tuple[Spike, ...] = ()

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "SparseMeasure":
        return normalize(cls(tuple(Spike(float(p), float(a)) for p, a in pairs)))

    @classmethod
    def from_arrays(cls, positions, amplitudes) -> "SparseMeasure":
        return cls.from_pairs(zip(np.asarray(positions, float), np.asarray(amplitudes, float)))

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.spikes], dtype=float)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([s.amplitude for s in self.spikes], dtype=float)

    def __len__(self):
        return len(self.spikes)

    def __iter__(self):
        return iter(self.spikes)

    def __add__(self, other: "SparseMeasure") -> "SparseMeasure":
        return add(self, other)

    def __rmul__(self, c: float) -> "SparseMeasure":
        return scale(self, c)

    def is_canonical(self) -> bool:
        pos = self.positions
        return bool(np.all(np.diff(pos) > 0) and np.all(self.amplitudes != 0))


def normalize(measure: SparseMeasure) -> SparseMeasure:
    """Sort by position, merge bitwise-equal positions, drop zero amplitudes."""
    merged: dict[float, float] = {}
    for spike in measure.spikes:
        # Spike validates on construction, but callers may hand in raw tuples
        if not (math.isfinite(spike.position) and math.isfinite(spike.amplitude)):
            raise NonFiniteInput("spike fields must be finite")
        # -0.0 and 0.0 compare equal and hash equal, so they merge
        merged[spike.position] = merged.get(spike.position, 0.0) + spike.amplitude
    out = tuple(Spike(p, a) for p, a in sorted(merged.items()) if a != 0.0)
    return SparseMeasure(out)


def tv_norm(measure: SparseMeasure) -> float:
    """Total variation of a spike train: the sum of absolute amplitudes."""
    return float(math.fsum(abs(s.amplitude) for s in measure.spikes))


def add(a: SparseMeasure, b: SparseMeasure) -> SparseMeasure:
    return normalize(SparseMeasure(a.spikes + b.spikes))


def scale(measure: SparseMeasure, c: float) -> SparseMeasure:
    return normalize(SparseMeasure(tuple(Spike(s.position, c * s.amplitude)
                                         for s in measure.spikes)))
