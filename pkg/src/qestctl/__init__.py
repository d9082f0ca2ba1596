"""Pulse design and parameter estimation for a driven, damped spin-1/2."""
from .qmodel import (
    DOWN,
    UP,
    BlochVector,
    DomainError,
    ModelParams,
    NumericalFailure,
    ParamName,
    PiecewisePulse,
    Povm,
    PulseSegment,
    PureState,
    QubitState,
    UnsupportedParameterError,
    sigma_z_povm,
)

__version__ = "0.1.0"

__all__ = [
    "DOWN", "UP", "BlochVector", "DomainError", "ModelParams", "NumericalFailure",
    "ParamName", "PiecewisePulse", "Povm", "PulseSegment", "PureState", "QubitState",
    "UnsupportedParameterError", "sigma_z_povm", "__version__",
]
