"""Spectral-basis lab for the adiabatic theorem with a time-dependent Aharonov-Bohm flux."""

from .spectral import ModelParams, ZetaSpec, ZetaFamily
from .specfun import DomainError, QuadratureError

__version__ = "0.1.0"

__all__ = ["ModelParams", "ZetaSpec", "ZetaFamily", "DomainError", "QuadratureError"]
