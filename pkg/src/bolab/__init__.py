"""Benjamin-Ono multisoliton lab: rational Hardy algebra, Lax spectra and explicit-formula evolution."""

__version__ = "0.1.0"

from .exceptions import (
    AlgebraError,
    BOError,
    IllConditionedError,
    IntegrationError,
    NumericalPathologyWarning,
    ParameterError,
    SpectralError,
    UnsupportedMultiplicityError,
)
from .rational_hardy import RationalHardy, inner_product, project_szego
from .soliton_model import SolitonParams, profile_eval
from .lax_spectrum import LaxSystem, Spectrum, build_system, solve_spectrum
from .evolution import pi_u, pole_dynamics, resolution_residual, u_field

__all__ = [
    "AlgebraError",
    "BOError",
    "IllConditionedError",
    "IntegrationError",
    "LaxSystem",
    "NumericalPathologyWarning",
    "ParameterError",
    "RationalHardy",
    "SolitonParams",
    "SpectralError",
    "Spectrum",
    "UnsupportedMultiplicityError",
    "build_system",
    "inner_product",
    "pi_u",
    "pole_dynamics",
    "profile_eval",
    "project_szego",
    "resolution_residual",
    "solve_spectrum",
    "u_field",
]
