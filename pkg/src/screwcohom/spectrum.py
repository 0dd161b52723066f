"""Truncated Fourier/Peter-Weyl coefficient fields on T^3 x SO(3).

A function is stored as sparse blocks ``(k, ell, n) -> F`` where ``F`` is the
length ``2 ell + 1`` vector of coefficients ``f[k, ell, m, n]`` indexed by
``m = -ell..ell``, so that

    f(x, R) = sum f[k, ell, m, n] * exp(2 pi i k.x) * D^ell(R)[m, n].

Absent blocks are zero. The basis is orthogonal but not orthonormal:
``||D^ell_mn||^2 = 1 / (2 ell + 1)`` under Haar measure, and the field norm
carries that weight so it equals the L2 norm of the function.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .errors import InputError, SpecMismatch
from .lattice import LatticeRotation, check_rotation, identity
from .wigner import irrep, lattice_irrep

Freq = tuple[int, int, int]
BlockKey = tuple[Freq, int, int]

_QUARTER_TURNS = {
    Fraction(0): 1.0 + 0.0j,
    Fraction(1, 4): 1.0j,
    Fraction(1, 2): -1.0 + 0.0j,
    Fraction(3, 4): -1.0j,
}


_RATIONAL = re.compile(r"([+-]?\d+)(?:/(\d+))?")


def parse_rational(text) -> Fraction:
    """Parse ``"a/b"``, ``"a"`` or an int into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise InputError(f"malformed rational {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise InputError(f"malformed rational {text!r}: expected a string 'a/b'")
    match = _RATIONAL.fullmatch(text.strip())
    if match is None or int(match.group(2) or 1) == 0:
        raise InputError(f"malformed rational {text!r}")
    return Fraction(int(match.group(1)), int(match.group(2) or 1))


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def unit_phase(theta: Fraction) -> complex:
    """``exp(2 pi i theta)`` for an exact rational number of turns."""
    theta = Fraction(theta) % 1
    if theta in _QUARTER_TURNS:
        return _QUARTER_TURNS[theta]
    ang = 2.0 * math.pi * float(theta)
    return complex(math.cos(ang), math.sin(ang))


@dataclass(frozen=True)
class TruncationSpec:
    """Frequencies ``|k|_inf <= kmax`` and representations ``ell <= lmax``."""

    kmax: int
    lmax: int

    def __post_init__(self):
        if self.kmax < 0 or self.lmax < 0:
            raise InputError("kmax and lmax must be nonnegative")

    def frequencies(self) -> list[Freq]:
        r = range(-self.kmax, self.kmax + 1)
        return list(itertools.product(r, r, r))

    def contains(self, k) -> bool:
        return max(abs(c) for c in k) <= self.kmax

    def block_keys(self) -> list[BlockKey]:
        return [
            (k, ell, n)
            for k in self.frequencies()
            for ell in range(self.lmax + 1)
            for n in range(-ell, ell + 1)
        ]


@dataclass(frozen=True)
class ScrewMotion:
    """gamma(x, R) = (t + R0 x mod 1, R0 R) with exact rational t."""

    t: tuple[Fraction, Fraction, Fraction]
    rotation: LatticeRotation

    def __post_init__(self):
        if len(self.t) != 3:
            raise InputError("t must have three components")
        object.__setattr__(self, "t", tuple(Fraction(c) % 1 for c in self.t))

    @classmethod
    def from_strings(cls, t, rotation: LatticeRotation) -> "ScrewMotion":
        return cls(tuple(parse_rational(c) for c in t), rotation)

    @classmethod
    def identity(cls) -> "ScrewMotion":
        return cls((Fraction(0),) * 3, identity())

    @property
    def t_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.t])

    def phase(self, k) -> Fraction:
        """Exact ``k . t mod 1``."""
        return sum((c * tc for c, tc in zip(k, self.t)), Fraction(0)) % 1

    def apply(self, point: "PhasePoint") -> "PhasePoint":
        r0 = self.rotation.array.astype(float)
        x = np.mod(self.t_float + r0 @ point.x, 1.0)
        return PhasePoint(x, r0 @ point.R)


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "R", check_rotation(self.R))


def transfer_matrix(ell: int, rot: LatticeRotation) -> np.ndarray:
    """Matrix acting on the m-index of a block under ``f -> f o gamma``.

    Since ``D(R0 R)[m, n] = sum_m' D(R0)[m, m'] D(R)[m', n]``, the coefficient
    of ``D[m', n]`` in ``f o gamma`` is ``sum_m D(R0)[m, m'] F[m]``: the
    transpose of ``D^ell(R0)`` acts on the vector F.
    """
    return lattice_irrep(ell, rot).T


class CoefficientField:
    """Immutable sparse coefficient field."""

    def __init__(self, spec: TruncationSpec, blocks: Mapping[BlockKey, Iterable[complex]] | None = None):
        self.spec = spec
        store = {}
        for key, vec in (blocks or {}).items():
            k, ell, n = key
            k = tuple(int(c) for c in k)
            ell, n = int(ell), int(n)
            if not spec.contains(k) or ell > spec.lmax:
                raise SpecMismatch(f"block (k={k}, l={ell}) outside truncation {spec}")
            if ell < 0 or abs(n) > ell:
                raise InputError(f"invalid indices l={ell}, n={n}")
            arr = np.array(vec, dtype=complex).reshape(-1)
            if arr.shape != (2 * ell + 1,):
                raise InputError(f"block {key} has length {arr.size}, expected {2 * ell + 1}")
            arr.setflags(write=False)
            store[(k, ell, n)] = arr
        self._blocks = store
        self._packed = None

    @classmethod
    def _unchecked(cls, spec: TruncationSpec, store: dict) -> "CoefficientField":
        # for blocks derived from an already validated field
        field = cls.__new__(cls)
        field.spec = spec
        for vec in store.values():
            vec.setflags(write=False)
        field._blocks = store
        field._packed = None
        return field

    @property
    def blocks(self) -> Mapping[BlockKey, np.ndarray]:
        return self._blocks

    def block(self, k, ell: int, n: int) -> np.ndarray:
        vec = self._blocks.get((tuple(k), ell, n))
        return np.zeros(2 * ell + 1, dtype=complex) if vec is None else vec

    def __len__(self):
        return len(self._blocks)

    def norm_sq(self) -> float:
        return float(
            sum(np.vdot(v, v).real / (2 * key[1] + 1) for key, v in sorted(self._blocks.items()))
        )

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def _combine(self, other: "CoefficientField", sign: float) -> "CoefficientField":
        if other.spec != self.spec:
            raise SpecMismatch("fields have different truncations")
        out = dict(self._blocks)
        for key, vec in other._blocks.items():
            out[key] = out[key] + sign * vec if key in out else sign * vec
        return CoefficientField._unchecked(self.spec, out)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar):
        scalar = complex(scalar)
        return CoefficientField._unchecked(self.spec, {k: scalar * v for k, v in self._blocks.items()})

    __rmul__ = __mul__

    def with_blocks(self, updates: Mapping[BlockKey, np.ndarray]) -> "CoefficientField":
        out = dict(self._blocks)
        out.update(updates)
        return CoefficientField(self.spec, out)

    def pruned(self, atol: float = 0.0) -> "CoefficientField":
        return CoefficientField(
            self.spec, {k: v for k, v in self._blocks.items() if np.max(np.abs(v)) > atol}
        )

    def packed(self):
        """Per-ell arrays ``(coeffs, ks, ncol)`` for the series kernel."""
        if self._packed is None:
            groups = {}
            for (k, ell, n), vec in sorted(self._blocks.items()):
                groups.setdefault(ell, []).append((k, n + ell, vec))
            packed = {}
            for ell, rows in groups.items():
                coeffs = np.ascontiguousarray([r[2] for r in rows], dtype=complex)
                ks = np.ascontiguousarray([r[0] for r in rows], dtype=np.int64)
                ncol = np.ascontiguousarray([r[1] for r in rows], dtype=np.int64)
                packed[ell] = (coeffs, ks, ncol)
            self._packed = packed
        return self._packed

    def __repr__(self):
        return f"CoefficientField({self.spec}, {len(self)} blocks)"


def zeros(spec: TruncationSpec) -> CoefficientField:
    return CoefficientField(spec)


def evaluate_many(field: CoefficientField, points) -> np.ndarray:
    """Values of the truncated series at several phase points."""
    points = list(points)
    out = np.zeros(len(points), dtype=complex)
    if not points:
        return out
    xs = np.ascontiguousarray([p.x for p in points], dtype=float)
    for ell, (coeffs, ks, ncol) in field.packed().items():
        dmats = np.ascontiguousarray([irrep(ell, p.R) for p in points], dtype=complex)
        out += kernels.series_sum(coeffs, ks, ncol, xs, dmats)
    return out


def evaluate(field: CoefficientField, point: PhasePoint) -> complex:
    return complex(evaluate_many(field, [point])[0])


def transport(field: CoefficientField, screw: ScrewMotion) -> CoefficientField:
    """Coefficients of ``f o gamma``.

    The output block at ``k`` is ``exp(2 pi i (R0 k).t) W_ell F(R0 k)`` where
    ``W_ell`` is :func:`transfer_matrix`.
    """
    rot = screw.rotation
    transfers = {ell: transfer_matrix(ell, rot) for ell in range(field.spec.lmax + 1)}
    targets = {}
    out = {}
    for (kp, ell, n), vec in field.blocks.items():
        if kp not in targets:
            # input frequency kp = R0 k feeds output frequency k = R0^T kp
            targets[kp] = (rot.apply_transpose(kp), unit_phase(screw.phase(kp)))
        k, phase = targets[kp]
        out[(k, ell, n)] = phase * (transfers[ell] @ vec)
    return CoefficientField._unchecked(field.spec, out)


def koopman_minus_id(field: CoefficientField, screw: ScrewMotion) -> CoefficientField:
    """Coefficients of ``f o gamma - f``."""
    return transport(field, screw) - field


def mean(field: CoefficientField) -> complex:
    return complex(field.block((0, 0, 0), 0, 0)[0])


def zero_mean(field: CoefficientField, atol: float = 1e-12) -> bool:
    """True iff the Haar integral (the k=0, ell=0 coefficient) vanishes."""
    return abs(mean(field)) <= atol


def random_field(spec: TruncationSpec, seed: int, decay: float = 0.0) -> CoefficientField:
    """Dense random field with complex Gaussian coefficients.

    Magnitudes are scaled by ``(1 + |k|_2)^-decay * (1 + ell)^-decay``.
    No conjugate symmetry is imposed, so the function is complex-valued.
    """
    rng = np.random.default_rng(seed)
    blocks = {}
    for k in spec.frequencies():
        kscale = (1.0 + math.sqrt(k[0] ** 2 + k[1] ** 2 + k[2] ** 2)) ** (-decay)
        for ell in range(spec.lmax + 1):
            scale = kscale * (1.0 + ell) ** (-decay) / math.sqrt(2.0)
            dim = 2 * ell + 1
            z = rng.standard_normal((dim, 2 * dim))
            vals = scale * (z[:, :dim] + 1j * z[:, dim:])
            for i, n in enumerate(range(-ell, ell + 1)):
                blocks[(k, ell, n)] = vals[i]
    return CoefficientField._unchecked(spec, blocks)


def quaternion_to_matrix(q) -> np.ndarray:
    w, x, y, z = q / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def sample_haar(seed: int, count: int) -> list[PhasePoint]:
    """Haar-random points: uniform x on T^3, R from a uniform unit quaternion."""
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(count):
        x = rng.random(3)
        q = rng.standard_normal(4)
        points.append(PhasePoint(x, quaternion_to_matrix(q)))
    return points


# -- coefficient files --------------------------------------------------------

_RECORD_KEYS = {"k", "l", "m", "n", "re", "im"}


def _int_field(rec, name, where):
    v = rec[name]
    if isinstance(v, bool) or not isinstance(v, int):
        raise InputError(f"{where}: field '{name}' must be an integer, got {v!r}")
    return v


def field_from_records(spec: TruncationSpec, records, where: str = "g") -> CoefficientField:
    """Build a field from ``{"k", "l", "m", "n", "re", "im"}`` records."""
    if not isinstance(records, list):
        raise InputError(f"{where}: expected a JSON array of coefficient records")
    seen = set()
    blocks: dict[BlockKey, np.ndarray] = {}
    for i, rec in enumerate(records):
        at = f"{where}[{i}]"
        if not isinstance(rec, dict):
            raise InputError(f"{at}: expected an object")
        missing = _RECORD_KEYS - rec.keys()
        if missing:
            raise InputError(f"{at}: missing field(s) {sorted(missing)}")
        k = rec["k"]
        if not isinstance(k, list) or len(k) != 3 or any(isinstance(c, bool) or not isinstance(c, int) for c in k):
            raise InputError(f"{at}: field 'k' must be a list of 3 integers")
        ell, m, n = (_int_field(rec, name, at) for name in ("l", "m", "n"))
        if ell < 0 or abs(m) > ell or abs(n) > ell:
            raise InputError(f"{at}: need l >= 0 and |m|, |n| <= l")
        try:
            val = complex(float(rec["re"]), float(rec["im"]))
        except (TypeError, ValueError) as exc:
            raise InputError(f"{at}: 're'/'im' must be numbers") from exc
        key = (tuple(k), ell, m, n)
        if key in seen:
            raise InputError(f"{at}: duplicate coefficient k={k}, l={ell}, m={m}, n={n}")
        seen.add(key)
        if not spec.contains(k) or ell > spec.lmax:
            raise SpecMismatch(f"{at}: k={k}, l={ell} outside truncation kmax={spec.kmax}, lmax={spec.lmax}")
        bkey = (tuple(k), ell, n)
        if bkey not in blocks:
            blocks[bkey] = np.zeros(2 * ell + 1, dtype=complex)
        blocks[bkey][m + ell] = val
    return CoefficientField(spec, blocks)


def field_to_records(field: CoefficientField) -> list[dict]:
    """Records ordered by k (lexicographic), then l, m, n; exact zeros omitted."""
    rows = []
    for (k, ell, n), vec in field.blocks.items():
        for i, v in enumerate(vec):
            if v != 0:
                rows.append(((k, ell, i - ell, n), v))
    rows.sort(key=lambda r: r[0])
    return [
        {"k": list(k), "l": ell, "m": m, "n": n, "re": float(v.real), "im": float(v.imag)}
        for (k, ell, m, n), v in rows
    ]
