"""Elliptic gamma functions, torus quadrature and identity verification."""

from .core import Bases, TruncationPolicy, elliptic_gamma, qpochhammer_inf, residue_constant, shifted_factorial, theta
from .quadrature import IntegralEstimate, TorusGrid, integrate_torus, kappa_constants

__version__ = "0.1.0"

__all__ = [
    "Bases",
    "TruncationPolicy",
    "IntegralEstimate",
    "TorusGrid",
    "elliptic_gamma",
    "integrate_torus",
    "kappa_constants",
    "qpochhammer_inf",
    "residue_constant",
    "shifted_factorial",
    "theta",
]
