"""Exception and warning types shared across the package."""


class BlassoSepError(Exception):
    """Base class for errors raised by this package."""


class NonFiniteInput(BlassoSepError, ValueError):
    pass


class GridMismatch(BlassoSepError, ValueError):
    pass


class SpecViolation(BlassoSepError, ValueError):
    """A scenario breaks one of its own invariants (e.g. spikes too close to the edge)."""


class ConfigError(BlassoSepError, ValueError):
    pass


class ExchangeDivergence(BlassoSepError, RuntimeError):
    """The exchange loop of a semi-infinite projection did not reach feasibility."""


class MaxItersExceeded(RuntimeWarning):
    """Issued when an iterative solver stops on its iteration or atom budget.

    The solver still returns its last iterate; the result carries
    ``converged=False``.
    """
