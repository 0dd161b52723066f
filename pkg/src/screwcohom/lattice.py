"""Rotations of the integer lattice and Z-Y-Z Euler angles.

The admissible rotational parts of a screw motion on T^3 are the matrices in
SO(3) with integer entries, i.e. the 24 signed permutation matrices with
determinant +1 (the rotation group of the cube).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import NotARotation, NotOrthogonal, NotSignedPermutation, NotSpecial

IntMatrix = tuple[tuple[int, int, int], tuple[int, int, int], tuple[int, int, int]]

_IDENTITY: IntMatrix = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
_TWO_PI = 2.0 * math.pi


def _matmul(a, b) -> IntMatrix:
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3))
        for i in range(3)
    )


def _transpose(a) -> IntMatrix:
    return tuple(tuple(a[j][i] for j in range(3)) for i in range(3))


def _det(a) -> int:
    return (
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    )


@dataclass(frozen=True)
class LatticeRotation:
    """An integer rotation matrix together with its order."""

    matrix: IntMatrix
    order: int

    @property
    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.int64)

    def apply(self, k) -> tuple[int, int, int]:
        """Integer matrix-vector product ``matrix @ k``."""
        m = self.matrix
        return tuple(m[i][0] * k[0] + m[i][1] * k[1] + m[i][2] * k[2] for i in range(3))

    def apply_transpose(self, k) -> tuple[int, int, int]:
        m = self.matrix
        return tuple(m[0][i] * k[0] + m[1][i] * k[1] + m[2][i] * k[2] for i in range(3))

    def power(self, j: int) -> "LatticeRotation":
        result = _IDENTITY
        for _ in range(j % self.order):
            result = _matmul(result, self.matrix)
        return validate(result)

    def __matmul__(self, other: "LatticeRotation") -> "LatticeRotation":
        return validate(_matmul(self.matrix, other.matrix))

    def to_list(self) -> list[list[int]]:
        return [list(row) for row in self.matrix]


def _as_int_matrix(raw) -> IntMatrix:
    try:
        rows = [list(r) for r in raw]
    except TypeError as exc:
        raise NotSignedPermutation("matrix must be a 3x3 array of integers") from exc
    if len(rows) != 3 or any(len(r) != 3 for r in rows):
        raise NotSignedPermutation("matrix must be 3x3")
    out = []
    for r in rows:
        row = []
        for v in r:
            if isinstance(v, bool):
                raise NotSignedPermutation(f"entry {v!r} is not an integer")
            if isinstance(v, (int, np.integer)):
                row.append(int(v))
            elif isinstance(v, (float, np.floating)) and float(v).is_integer():
                row.append(int(v))
            else:
                raise NotSignedPermutation(f"entry {v!r} is not an integer")
        out.append(tuple(row))
    return tuple(out)


def validate(raw) -> LatticeRotation:
    """Check that ``raw`` is an integer rotation and compute its order.

    All checks use exact integer arithmetic. Raises
    :class:`NotSignedPermutation`, :class:`NotOrthogonal` or
    :class:`NotSpecial` naming the violated invariant.
    """
    m = _as_int_matrix(raw)
    if _matmul(_transpose(m), m) != _IDENTITY:
        raise NotOrthogonal(f"matrix^T matrix != I for {m}")
    for row in m:
        if any(v not in (-1, 0, 1) for v in row) or sum(v != 0 for v in row) != 1:
            raise NotSignedPermutation(f"row {row} is not a signed unit vector")
    for col in _transpose(m):
        if sum(v != 0 for v in col) != 1:
            raise NotSignedPermutation(f"column {col} is not a signed unit vector")
    if _det(m) != 1:
        raise NotSpecial(f"det = {_det(m)}, expected +1")
    power, order = m, 1
    while power != _IDENTITY:
        power = _matmul(power, m)
        order += 1
        if order > 4:  # unreachable for signed permutations with det 1
            raise NotSignedPermutation("rotation order exceeds 4")
    return LatticeRotation(matrix=m, order=order)


def identity() -> LatticeRotation:
    return LatticeRotation(matrix=_IDENTITY, order=1)


def enumerate_group() -> list[LatticeRotation]:
    """All 24 signed permutation matrices with determinant +1, sorted."""
    found = set()
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = tuple(
                tuple(signs[i] if j == perm[i] else 0 for j in range(3)) for i in range(3)
            )
            if _det(m) == 1:
                found.add(m)
    return [validate(m) for m in sorted(found)]


def rotation_axis(rot: LatticeRotation) -> tuple[int, int, int] | None:
    """Integer axis of a nontrivial lattice rotation, oriented so the rotation
    angle is 2*pi/order counterclockwise (for order 2 the first nonzero
    component is positive). ``None`` for the identity."""
    if rot.order == 1:
        return None
    m = rot.matrix
    # axis spans the kernel of (m - I); for signed permutations the sum of
    # the columns of (m + m^T + (1 - tr) I) is parallel to it
    tr = m[0][0] + m[1][1] + m[2][2]
    sym = [[m[i][j] + m[j][i] + (1 - tr) * (i == j) for j in range(3)] for i in range(3)]
    axis = None
    for col in range(3):
        cand = [sym[i][col] for i in range(3)]
        if any(cand):
            axis = cand
            break
    g = math.gcd(*axis)
    axis = [a // g for a in axis]
    if rot.order == 2:
        first = next(a for a in axis if a != 0)
        if first < 0:
            axis = [-a for a in axis]
    else:
        # antisymmetric part m - m^T encodes 2 sin(theta) * axis
        w = (m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1])
        if sum(a * b for a, b in zip(w, axis)) < 0:
            axis = [-a for a in axis]
    return tuple(axis)


def classify(rot: LatticeRotation) -> str:
    """Short human-readable label such as ``'C4 about [0, 0, 1]'``."""
    if rot.order == 1:
        return "identity"
    return f"C{rot.order} about {list(rotation_axis(rot))}"


def rz(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def ry(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


@dataclass(frozen=True)
class EulerAngles:
    """Z-Y-Z angles with ``rotation = Rz(alpha) @ Ry(beta) @ Rz(gamma)``."""

    alpha: float
    beta: float
    gamma: float

    def matrix(self) -> np.ndarray:
        return rz(self.alpha) @ ry(self.beta) @ rz(self.gamma)


def _wrap(angle: float) -> float:
    a = angle % _TWO_PI
    return 0.0 if a >= _TWO_PI or a == 0.0 else a


def check_rotation(rotation, tol: float = 1e-10) -> np.ndarray:
    r = np.asarray(rotation, dtype=float)
    if r.shape != (3, 3):
        raise NotARotation(f"expected a 3x3 matrix, got shape {r.shape}")
    err = np.max(np.abs(r.T @ r - np.eye(3)))
    if not err <= tol:
        raise NotARotation(f"not orthonormal (error {err:.3g} > {tol:g})")
    if np.linalg.det(r) <= 0:
        raise NotARotation("determinant is not +1")
    return r


def euler_zyz(rotation) -> EulerAngles:
    """Decompose a rotation into Z-Y-Z Euler angles.

    At gimbal lock (``|sin(beta)| < 1e-12``) gamma is set to zero and the
    whole rotation about z is folded into alpha.
    """
    r = check_rotation(rotation)
    sin_beta = math.hypot(r[0, 2], r[1, 2])
    beta = math.atan2(sin_beta, r[2, 2])
    if sin_beta < 1e-12:
        if r[2, 2] > 0:
            beta = 0.0
            alpha = math.atan2(r[1, 0], r[0, 0])
        else:
            beta = math.pi
            alpha = math.atan2(-r[1, 0], r[1, 1])
        return EulerAngles(_wrap(alpha), beta, 0.0)
    alpha = math.atan2(r[1, 2], r[0, 2])
    gamma = math.atan2(r[2, 1], -r[2, 0])
    return EulerAngles(_wrap(alpha), beta, _wrap(gamma))
