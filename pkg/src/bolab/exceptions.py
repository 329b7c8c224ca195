"""Exception types raised by the numerical engine."""


class BOError(Exception):
    """Base class for all errors raised by bolab."""


class UnsupportedMultiplicityError(BOError, ValueError):
    """A pole of multiplicity above the supported cap was produced or requested."""


class ParameterError(BOError, ValueError):
    """Soliton parameters violate an invariant (half-plane, distinctness, ...)."""


class IllConditionedError(BOError, RuntimeError):
    """The Gram matrix of the rational basis is too close to singular."""


class SpectralError(BOError, RuntimeError):
    """The computed Lax spectrum violates a structural property."""


class AlgebraError(BOError, RuntimeError):
    """Internal consistency failure in exact rational calculus."""


class IntegrationError(BOError, RuntimeError):
    """The pseudo-spectral time loop produced non-finite values."""

    def __init__(self, message, last_valid_time):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class NumericalPathologyWarning(RuntimeWarning):
    """A resolvent evaluation was close to singular and had to be shifted."""
