"""Spectral solver for the cohomological equation ``f o gamma - f = g`` of a
screw motion ``gamma(x, R) = (t + R0 x, R0 R)`` on ``T^3 x SO(3)``."""
from .closure import solve_all
from .kernels import BACKEND
from .lattice import LatticeRotation, enumerate_group, euler_zyz, validate
from .spectrum import (
    CoefficientField,
    PhasePoint,
    ScrewMotion,
    TruncationSpec,
    evaluate,
    koopman_minus_id,
    random_field,
    sample_haar,
    transport,
    zero_mean,
)
from .wigner import irrep, small_d

__all__ = [
    "BACKEND",
    "CoefficientField",
    "LatticeRotation",
    "PhasePoint",
    "ScrewMotion",
    "TruncationSpec",
    "enumerate_group",
    "euler_zyz",
    "evaluate",
    "irrep",
    "koopman_minus_id",
    "random_field",
    "sample_haar",
    "small_d",
    "solve_all",
    "transport",
    "validate",
    "zero_mean",
]
