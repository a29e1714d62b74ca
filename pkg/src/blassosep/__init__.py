"""Off-the-grid convolutional source separation with the Beurling LASSO.

The separated channels ``x = A nu`` are computed by proximal gradient steps
whose proximal map is obtained from a projection onto the dual constraint
set (Moreau decomposition), so the measure ``nu`` is never parametrised.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

from .errors import (  # noqa: E402
    BlassoSepError, ConfigError, ExchangeDivergence, GridMismatch, MaxItersExceeded,
    NonFiniteInput, SpecViolation,
)
from .measures import SparseMeasure, Spike, tv_norm  # noqa: E402
from .operators import Grid, GridSignal, MultiChannelSignal, forward, mix, mix_adjoint  # noqa: E402
from .patterns import Gaussian, HalfEllipse, RaisedCosine, Triangle  # noqa: E402
from .prox_solver import SolverConfig, project_ball, prox_step, solve  # noqa: E402

__all__ = [
    "__version__", "BlassoSepError", "ConfigError", "ExchangeDivergence", "GridMismatch",
    "MaxItersExceeded", "NonFiniteInput", "SpecViolation", "SparseMeasure", "Spike", "tv_norm",
    "Grid", "GridSignal", "MultiChannelSignal", "forward", "mix", "mix_adjoint",
    "Gaussian", "HalfEllipse", "RaisedCosine", "Triangle",
    "SolverConfig", "project_ball", "prox_step", "solve",
]
