"""Wigner D-matrices: the irreducible unitary representations of SO(3).

Rows and columns are indexed by ``m, n = -ell..ell`` in ascending order, and

    D^ell(R)[m, n] = exp(-1j*m*alpha) * d^ell[m, n](beta) * exp(-1j*n*gamma)

with ``(alpha, beta, gamma) = euler_zyz(R)``.
"""
from __future__ import annotations

import functools

import numpy as np

from . import kernels
from .errors import EllTooLarge
from .lattice import LatticeRotation, euler_zyz

ELL_CAP = 16


def small_d(ell: int, beta: float, cap: int = ELL_CAP) -> np.ndarray:
    """Real orthogonal Wigner small-d matrix ``d^ell(beta)``.

    Evaluated with the Wigner sum formula; factorials go through log-gamma
    so ``ell`` up to ``cap`` stays finite in double precision.
    """
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    if ell > cap:
        raise EllTooLarge(f"ell = {ell} exceeds the cap {cap}")
    if beta == 0.0:
        return np.eye(2 * ell + 1)
    return kernels.small_d(int(ell), float(beta))


def irrep_euler(ell: int, alpha: float, beta: float, gamma: float) -> np.ndarray:
    m = np.arange(-ell, ell + 1)
    left = np.exp(-1j * m * alpha)
    right = np.exp(-1j * m * gamma)
    return left[:, None] * small_d(ell, beta) * right[None, :]


def irrep(ell: int, rotation) -> np.ndarray:
    """``D^ell(rotation)`` as a complex ``(2 ell + 1) x (2 ell + 1)`` array."""
    if isinstance(rotation, LatticeRotation):
        return lattice_irrep(ell, rotation).copy()
    ang = euler_zyz(rotation)
    return irrep_euler(ell, ang.alpha, ang.beta, ang.gamma)


@functools.lru_cache(maxsize=1024)
def _lattice_irrep(ell: int, matrix) -> np.ndarray:
    ang = euler_zyz(np.array(matrix, dtype=float))
    out = irrep_euler(ell, ang.alpha, ang.beta, ang.gamma)
    out.setflags(write=False)
    return out


def lattice_irrep(ell: int, rot: LatticeRotation) -> np.ndarray:
    """Memoized, read-only ``D^ell`` of a lattice rotation."""
    return _lattice_irrep(int(ell), rot.matrix)

