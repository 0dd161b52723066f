"""Screw motions about the z-axis: rotation by 2 pi q/p and pitch t = (0, 0, h).

Every axial frequency ``(0, 0, kz)`` is fixed by the rotation, each step
contributes the phase ``kz h``, and the p-step monodromy is the scalar
``exp(2 pi i p kz h)``. Resonance therefore happens exactly when
``p kz h`` is an integer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .closure import DEFAULT_TOL, build_forcing, build_monodromy, OrbitBlock, solve_all
from .errors import InputError, NotLatticeRealizable
from .lattice import LatticeRotation, validate
from .orbits import enumerate_orbits, orbit_of
from .spectrum import CoefficientField, ScrewMotion, TruncationSpec, format_rational, parse_rational, unit_phase

PITCH_DENOMINATOR_CAP = 10**6


@dataclass(frozen=True)
class AxialScrew:
    p: int
    q: int
    h: Fraction

    def __post_init__(self):
        if self.p < 1:
            raise InputError("p must be a positive integer")
        if math.gcd(self.p, self.q) != 1:
            raise InputError(f"p={self.p} and q={self.q} are not coprime")
        object.__setattr__(self, "h", Fraction(self.h) % 1)

    @property
    def angle(self) -> float:
        return 2.0 * math.pi * self.q / self.p

    def rotation(self) -> LatticeRotation:
        return z_rotation(self.p, self.q)

    def screw(self) -> ScrewMotion:
        return ScrewMotion((Fraction(0), Fraction(0), self.h), self.rotation())


def parse_pitch(value) -> tuple[Fraction, str | None]:
    """Exact pitch from ``"a/b"`` text or a float.

    Floats go through a continued-fraction approximation with denominator
    at most 10^6; the second return value describes that conversion.
    """
    if isinstance(value, float):
        h = Fraction(value).limit_denominator(PITCH_DENOMINATOR_CAP)
        return h, f"float pitch {value!r} converted to {format_rational(h)}"
    if isinstance(value, str):
        try:
            return parse_rational(value), None
        except InputError:
            try:
                x = float(value)
            except ValueError:
                raise InputError(f"malformed pitch {value!r}") from None
            return parse_pitch(x)
    return parse_rational(value), None


def resonant(p: int, kz: int, h) -> bool:
    """True iff ``p * kz * h`` is an integer."""
    return (p * kz * Fraction(h)).denominator == 1


def axial_monodromy_scalar(p: int, kz: int, h) -> complex:
    return unit_phase(p * kz * Fraction(h))


def obstructed_components(p: int, q: int, kz: int, h, ell: int) -> list[int]:
    """Components m where the one-step system at ``(0, 0, kz)`` is resonant,
    i.e. ``kz h - m q / p`` is an integer."""
    h = Fraction(h)
    return [m for m in range(-ell, ell + 1) if (kz * h - Fraction(m * q, p)).denominator == 1]


def z_rotation(p: int, q: int = 1) -> LatticeRotation:
    """Integer matrix of the rotation by ``2 pi q / p`` about z (p in {1, 2, 4})."""
    if p not in (1, 2, 4):
        raise NotLatticeRealizable(f"a z-axis rotation of order {p} has no integer matrix (need p in 1, 2, 4)")
    turns = Fraction(q, p) % 1
    c, s = {Fraction(0): (1, 0), Fraction(1, 4): (0, 1), Fraction(1, 2): (-1, 0), Fraction(3, 4): (0, -1)}[turns]
    return validate([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def axial_forcing(spec: TruncationSpec, axial: AxialScrew, seed: int, compatible: bool = False) -> CoefficientField:
    """Random forcing supported on axial frequencies ``(0, 0, kz)``.

    With ``compatible=True`` the resonant components are removed so every
    block is solvable.
    """
    rng = np.random.default_rng(seed)
    blocks = {}
    for kz in range(-spec.kmax, spec.kmax + 1):
        for ell in range(spec.lmax + 1):
            dim = 2 * ell + 1
            bad = obstructed_components(axial.p, axial.q, kz, axial.h, ell) if compatible else []
            for n in range(-ell, ell + 1):
                z = rng.standard_normal((2, dim))
                vec = z[0] + 1j * z[1]
                for m in bad:
                    vec[m + ell] = 0.0
                blocks[((0, 0, kz), ell, n)] = vec
    return CoefficientField(spec, blocks)


@dataclass
class AxialRow:
    kz: int
    ell: int
    scalar_resonant: bool
    scalar: complex
    monodromy_error: float
    obstructed_m: list[int]
    resonant_multiplicity: int
    numeric_kernel_dim: int

    @property
    def ok(self) -> bool:
        return (
            self.monodromy_error <= 1e-10
            and len(self.obstructed_m) == self.resonant_multiplicity == self.numeric_kernel_dim
        )


@dataclass
class CrossCheckReport:
    axial: AxialScrew
    rows: list[AxialRow] = field(default_factory=list)
    verdicts: list[dict] = field(default_factory=list)
    transverse_ok: bool = True
    forcing_ok: bool = True
    notes: list[str] = field(default_factory=list)

    @property
    def verdict_mismatches(self) -> list[dict]:
        return [v for v in self.verdicts if v["solver"] != v["scalar_criterion"]]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows) and not self.verdict_mismatches and self.transverse_ok and self.forcing_ok

    def to_json(self) -> dict:
        return {
            "p": self.axial.p,
            "q": self.axial.q,
            "h": format_rational(self.axial.h),
            "ok": self.ok,
            "transverse_ok": self.transverse_ok,
            "forcing_ok": self.forcing_ok,
            "rows": [
                {
                    "kz": r.kz,
                    "l": r.ell,
                    "scalar_resonant": r.scalar_resonant,
                    "monodromy_error": r.monodromy_error,
                    "obstructed_m": r.obstructed_m,
                    "resonant_multiplicity": r.resonant_multiplicity,
                    "numeric_kernel_dim": r.numeric_kernel_dim,
                    "ok": r.ok,
                }
                for r in self.rows
            ],
            "verdict_blocks": len(self.verdicts),
            "verdict_mismatches": self.verdict_mismatches,
            "notes": self.notes,
        }


def _scalar_verdict(axial: AxialScrew, kz: int, ell: int, G0: np.ndarray, tol: float) -> bool:
    """p-step criterion ``exp(2 pi i p kz h) != 1 or B = 0``.

    In closed form the p-step forcing on component m is ``p G_m`` when
    ``kz h - m q/p`` is an integer and zero otherwise (a full geometric sum
    of a nontrivial p-th root of unity).
    """
    if not resonant(axial.p, kz, axial.h):
        return True
    bad = obstructed_components(axial.p, axial.q, kz, axial.h, ell)
    B = np.zeros_like(G0)
    for m in bad:
        B[m + ell] = axial.p * G0[m + ell]
    return float(np.linalg.norm(B)) <= tol * max(1.0, float(np.linalg.norm(G0)))


def cross_check(axial: AxialScrew, spec: TruncationSpec, tol: float = DEFAULT_TOL,
                seed: int = 0, threads: int | None = None) -> CrossCheckReport:
    """Compare the closed-form axial analysis with the general orbit solver."""
    screw = axial.screw()  # raises NotLatticeRealizable for p not in {1, 2, 4}
    p, h = axial.p, axial.h
    report = CrossCheckReport(axial)

    for kz in range(-spec.kmax, spec.kmax + 1):
        orbit = orbit_of((0, 0, kz), screw)
        scalar = axial_monodromy_scalar(p, kz, h)
        for ell in range(spec.lmax + 1):
            mono_p = build_monodromy(orbit, ell, steps=p, tol=tol)
            err = float(np.max(np.abs(mono_p.A - scalar * np.eye(2 * ell + 1))))
            mono = build_monodromy(orbit, ell, tol=tol)
            report.rows.append(
                AxialRow(kz, ell, resonant(p, kz, h), scalar, err,
                         obstructed_components(p, axial.q, kz, h, ell),
                         mono.resonant_multiplicity, mono.numeric_kernel_dim)
            )

    for compatible in (False, True):
        g = axial_forcing(spec, axial, seed, compatible=compatible)
        outcome = solve_all(g, screw, tol, threads=threads)
        solver = {(r.orbit_rep, r.l, r.n): r.solvable for r in outcome.report.records}
        for kz in range(-spec.kmax, spec.kmax + 1):
            orbit = orbit_of((0, 0, kz), screw)
            for ell in range(spec.lmax + 1):
                for n in range(-ell, ell + 1):
                    block = OrbitBlock.from_field(g, orbit, ell, n)
                    G0 = block.G[0]
                    scalar_ok = _scalar_verdict(axial, kz, ell, G0, tol)
                    # the general p-step forcing must match the closed form
                    B_p = build_forcing(block, steps=p)
                    if resonant(p, kz, h):
                        bad = obstructed_components(p, axial.q, kz, h, ell)
                        expect = np.zeros_like(G0)
                        for m in bad:
                            expect[m + ell] = p * G0[m + ell]
                        if np.max(np.abs(B_p - expect), initial=0.0) > 1e-10 * max(1.0, np.linalg.norm(G0)):
                            report.notes.append(f"p-step forcing differs from closed form at kz={kz}, l={ell}, n={n}")
                            report.forcing_ok = False
                    report.verdicts.append({
                        "kz": kz, "l": ell, "n": n, "compatible": compatible,
                        "solver": solver.get(((0, 0, kz), ell, n), True),
                        "scalar_criterion": scalar_ok,
                    })

    for orbit in enumerate_orbits(spec, screw):
        kz = orbit.rep[2]
        if any(k[2] != kz for k in orbit.members):
            report.transverse_ok = False
        if any(th != (kz * h) % 1 for th in orbit.phases):
            report.transverse_ok = False
        if kz == 0 and orbit.phase_sum != 0:
            report.transverse_ok = False

    if any(r.scalar_resonant and len(r.obstructed_m) < 2 * r.ell + 1 for r in report.rows):
        report.notes.append(
            "at resonance the one-step system obstructs only the listed m components; "
            "the p-step forcing vanishes on the others, so verdicts coincide"
        )
    return report


def scan_rows(p: int, q: int, h, kz_values, lmax: int) -> list[dict]:
    """Resonance table for ``scan-axial`` (formula level, any coprime p, q)."""
    h = Fraction(h)
    rows = []
    for kz in kz_values:
        rows.append({
            "kz": kz,
            "p_kz_h": format_rational(p * kz * h),
            "resonant": resonant(p, kz, h),
            "obstructed_m": {str(ell): obstructed_components(p, q, kz, h, ell) for ell in range(lmax + 1)},
        })
    return rows
