"""Orbit-by-orbit solver for ``f o gamma - f = g``.

On the orbit ``k_0, ..., k_{L-1}`` of a frequency, for fixed ``(ell, n)``, the
coefficient equation is the cyclic system

    alpha_j W F_{j+1} - F_j = G_j,        j = 0..L-1 (indices mod L),

with ``alpha_j = exp(2 pi i k_{j+1}.t)`` and ``W`` the transfer matrix of
``D^ell(R0)``. Going once around the orbit gives the closure equation
``(A - I) F_0 = B`` with monodromy ``A = (prod alpha_j) W^L`` and forcing
``B = sum_r (prod_{j<r} alpha_j W) G_r``.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import ClosureViolated, DimensionMismatch, SpecMismatch
from .orbits import FrequencyOrbit, enumerate_orbits
from .spectrum import CoefficientField, ScrewMotion, TruncationSpec, transfer_matrix, unit_phase

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class OrbitBlock:
    orbit: FrequencyOrbit
    ell: int
    n: int
    G: np.ndarray  # shape (L, 2 ell + 1), row j is G_{ell,n}(k_j)

    @classmethod
    def from_field(cls, g: CoefficientField, orbit: FrequencyOrbit, ell: int, n: int) -> "OrbitBlock":
        G = np.array([g.block(k, ell, n) for k in orbit.members], dtype=complex)
        return cls(orbit, ell, n, G)

    def is_zero(self) -> bool:
        return not np.any(self.G)


@dataclass(frozen=True)
class Monodromy:
    ell: int
    steps: int
    scalar_phase: Fraction | None
    transfer: np.ndarray
    U_pow: np.ndarray
    A: np.ndarray
    resonant_multiplicity: int
    numeric_kernel_dim: int


@dataclass
class ClosureSolution:
    solvable: bool
    F0: np.ndarray | None
    B: np.ndarray
    obstruction_dim: int
    obstruction_basis: np.ndarray  # rows span Ker(A^* - I)
    obstruction_norm: float
    kernel_basis: np.ndarray  # rows span Ker(A - I)
    residual: float


def exact_multiplicity(phase: Fraction, steps: int, order: int, ell: int) -> int:
    """Multiplicity of eigenvalue 1 of ``exp(2 pi i phase) W^steps``.

    ``R0`` of order p is conjugate to a rotation by ``+-2 pi/p``, so the
    eigenvalues of ``W^steps`` are ``exp(-2 pi i m steps/p)``, m = -ell..ell.
    """
    return sum(
        1 for m in range(-ell, ell + 1) if (phase - Fraction(m * steps, order)).denominator == 1
    )


def numeric_kernel_dim(T: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    s = np.linalg.svd(T, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s <= tol * max(1.0, s[0])))


def _cyclic(orbit: FrequencyOrbit, steps: int):
    L = orbit.length
    if steps % L:
        raise ValueError(f"steps={steps} is not a multiple of the orbit length {L}")
    return [orbit.phases[j % L] for j in range(steps)]


def build_monodromy(orbit: FrequencyOrbit, ell: int, steps: int | None = None, tol: float = DEFAULT_TOL) -> Monodromy:
    """Monodromy ``exp(2 pi i s) W^steps`` around the orbit.

    ``steps`` defaults to the primitive length L; pass the rotation order to
    get the p-step operator.
    """
    steps = orbit.length if steps is None else steps
    phase = sum(_cyclic(orbit, steps), Fraction(0)) % 1
    W = transfer_matrix(ell, orbit.rotation)
    U_pow = np.linalg.matrix_power(W, steps)
    A = unit_phase(phase) * U_pow
    mult = exact_multiplicity(phase, steps, orbit.rotation.order, ell)
    num = numeric_kernel_dim(A - np.eye(2 * ell + 1), tol)
    if num != mult:
        log.warning("resonance mismatch at orbit %s, l=%d: exact %d, numeric %d", orbit.rep, ell, mult, num)
    return Monodromy(ell, steps, phase, W, U_pow, A, mult, num)


def monodromy_from_matrix(A, tol: float = DEFAULT_TOL) -> Monodromy:
    """Wrap an arbitrary unitary matrix; resonance is decided numerically."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    dim = A.shape[0]
    num = numeric_kernel_dim(A - np.eye(dim), tol)
    return Monodromy((dim - 1) // 2, 1, None, A, A, A, num, num)


def build_forcing(block: OrbitBlock, steps: int | None = None) -> np.ndarray:
    """Twisted orbit sum ``B = sum_r (prod_{j<r} alpha_j W) G_r``."""
    orbit = block.orbit
    steps = orbit.length if steps is None else steps
    alphas = np.array([unit_phase(th) for th in _cyclic(orbit, steps)], dtype=complex)
    G = np.ascontiguousarray(block.G[[j % orbit.length for j in range(steps)]], dtype=complex)
    W = np.ascontiguousarray(transfer_matrix(block.ell, orbit.rotation), dtype=complex)
    return kernels.orbit_forcing(alphas, W, G)


def solve_closure(mono: Monodromy, B, tol: float = DEFAULT_TOL) -> ClosureSolution:
    """Minimum-norm solution of ``(A - I) F0 = B`` plus obstruction data.

    The kernel dimension comes from the exact resonance count; the SVD
    supplies the bases and the pseudo-inverse.
    """
    A = mono.A
    dim = A.shape[0]
    B = np.asarray(B, dtype=complex).reshape(-1)
    if B.shape != (dim,):
        raise DimensionMismatch(f"forcing has length {B.size}, monodromy is {dim}x{dim}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    T = A - np.eye(dim)
    U, S, Vh = np.linalg.svd(T)
    rank = dim - mono.resonant_multiplicity
    coords = U[:, :rank].conj().T @ B
    F0 = Vh[:rank].conj().T @ (coords / S[:rank])
    obstruction = U[:, rank:].T.copy()
    pairing = obstruction.conj() @ B
    obs_norm = float(np.linalg.norm(pairing))
    b_norm = float(np.linalg.norm(B))
    solvable = obs_norm <= tol * max(1.0, b_norm)
    return ClosureSolution(
        solvable=solvable,
        F0=F0 if solvable else None,
        B=B,
        obstruction_dim=dim - rank,
        obstruction_basis=obstruction,
        obstruction_norm=obs_norm,
        kernel_basis=Vh[rank:].conj(),
        residual=float(np.linalg.norm(T @ F0 - B)),
    )


def reconstruct(F0, block: OrbitBlock, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Forward recursion ``F_{j+1} = conj(alpha_j) W^* (F_j + G_j)``.

    Raises :class:`ClosureViolated` if ``F_L`` does not return to ``F0``.
    """
    orbit = block.orbit
    W = np.ascontiguousarray(transfer_matrix(block.ell, orbit.rotation), dtype=complex)
    alphas = np.array(orbit.alphas(), dtype=complex)
    F0 = np.ascontiguousarray(F0, dtype=complex)
    F = kernels.orbit_recursion(F0, alphas, W, np.ascontiguousarray(block.G, dtype=complex))
    bound = tol * (np.linalg.norm(F0) + np.sum(np.linalg.norm(block.G, axis=1)))
    gap = np.linalg.norm(F[-1] - F0)
    if gap > bound:
        raise ClosureViolated(f"orbit {orbit.rep}, l={block.ell}, n={block.n}: wrap-around gap {gap:.3g} > {bound:.3g}")
    return [F[j] for j in range(orbit.length)]


def cyclic_residual(F, block: OrbitBlock) -> float:
    """Largest ``||alpha_j W F_{j+1} - F_j - G_j||`` over the orbit."""
    orbit = block.orbit
    W = transfer_matrix(block.ell, orbit.rotation)
    alphas = orbit.alphas()
    L = orbit.length
    return max(
        float(np.linalg.norm(alphas[j] * (W @ F[(j + 1) % L]) - F[j] - block.G[j])) for j in range(L)
    )


def orbit_residual(f: CoefficientField, g: CoefficientField, orbit: FrequencyOrbit, ell: int) -> float:
    """Largest cyclic-system residual of ``(f, g)`` over all n at one (orbit, ell).

    Same quantity as :func:`cyclic_residual`, with the n columns stacked so
    each orbit step is one matrix product.
    """
    W = transfer_matrix(ell, orbit.rotation)
    ns = range(-ell, ell + 1)
    F = np.array([np.stack([f.block(k, ell, n) for n in ns], axis=1) for k in orbit.members])
    G = np.array([np.stack([g.block(k, ell, n) for n in ns], axis=1) for k in orbit.members])
    alphas = np.array(orbit.alphas(), dtype=complex)
    R = alphas[:, None, None] * (W @ np.roll(F, -1, axis=0)) - F - G
    return float(np.max(np.linalg.norm(R, axis=1)))


def system_residual(f: CoefficientField, g: CoefficientField, orbits: list[FrequencyOrbit], lmax: int) -> float:
    """Largest cyclic-system residual over many orbits, every ell <= lmax and n.

    Orbits of equal length are batched, so this is the fast form of
    :func:`orbit_residual` for whole truncation boxes.
    """
    if not orbits:
        return 0.0
    members = [k for o in orbits for k in o.members]
    row = {k: i for i, k in enumerate(members)}
    dense = {}
    for which, field in (("f", f), ("g", g)):
        for ell in range(lmax + 1):
            dense[which, ell] = np.zeros((len(members), 2 * ell + 1, 2 * ell + 1), dtype=complex)
        for (k, ell, n), vec in field.blocks.items():
            if ell <= lmax and k in row:
                dense[which, ell][row[k], :, n + ell] = vec
    by_length = {}
    for o in orbits:
        by_length.setdefault(o.length, []).append(o)
    worst = 0.0
    for ell in range(lmax + 1):
        W = transfer_matrix(ell, orbits[0].rotation)
        for group in by_length.values():
            idx = np.array([[row[k] for k in o.members] for o in group])
            alphas = np.array([o.alphas() for o in group], dtype=complex)
            F, G = dense["f", ell][idx], dense["g", ell][idx]
            R = alphas[..., None, None] * np.einsum("ab,ijbn->ijan", W, np.roll(F, -1, axis=1)) - F - G
            worst = max(worst, float(np.max(np.linalg.norm(R, axis=2))))
    return worst


@dataclass
class BlockRecord:
    orbit_rep: tuple
    L: int
    l: int
    n: int
    solvable: bool
    obstruction_dim: int
    obstruction_norm: float
    resonant_multiplicity: int
    obstruction_basis: np.ndarray | None = dc_field(default=None, repr=False)

    def to_json(self, with_basis: bool = False) -> dict:
        out = {
            "orbit_rep": list(self.orbit_rep),
            "L": self.L,
            "l": self.l,
            "n": self.n,
            "solvable": self.solvable,
            "obstruction_dim": self.obstruction_dim,
            "obstruction_norm": self.obstruction_norm,
            "resonant_multiplicity": self.resonant_multiplicity,
        }
        if with_basis and self.obstruction_basis is not None:
            out["obstruction_basis"] = [
                [[float(z.real), float(z.imag)] for z in v] for v in self.obstruction_basis
            ]
        return out


@dataclass
class ObstructionReport:
    records: list[BlockRecord]
    tol: float

    @property
    def obstructions(self) -> list[BlockRecord]:
        return [r for r in self.records if not r.solvable]

    @property
    def solvable(self) -> bool:
        return not self.obstructions

    def to_json(self) -> dict:
        return {
            "solvable": self.solvable,
            "tol": self.tol,
            "records": [r.to_json() for r in self.records],
            "obstructions": [r.to_json(with_basis=True) for r in self.obstructions],
        }


@dataclass
class SolveOutcome:
    f: CoefficientField | None
    report: ObstructionReport


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("SCREWCOHOM_THREADS", "0") or 0)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def _solve_orbit(g: CoefficientField, orbit: FrequencyOrbit, lmax: int, tol: float):
    records, blocks = [], {}
    for ell in range(lmax + 1):
        mono = build_monodromy(orbit, ell, tol=tol)
        for n in range(-ell, ell + 1):
            block = OrbitBlock.from_field(g, orbit, ell, n)
            if block.is_zero():
                if mono.resonant_multiplicity:
                    records.append(BlockRecord(orbit.rep, orbit.length, ell, n, True, mono.resonant_multiplicity, 0.0, mono.resonant_multiplicity))
                continue
            sol = solve_closure(mono, build_forcing(block), tol)
            records.append(
                BlockRecord(orbit.rep, orbit.length, ell, n, sol.solvable, sol.obstruction_dim,
                            sol.obstruction_norm, mono.resonant_multiplicity, sol.obstruction_basis)
            )
            if sol.solvable:
                for k, F in zip(orbit.members, reconstruct(sol.F0, block, tol)):
                    blocks[(k, ell, n)] = F
    return records, blocks


def solve_all(g: CoefficientField, screw: ScrewMotion, tol: float = DEFAULT_TOL,
              threads: int | None = None, spec: TruncationSpec | None = None) -> SolveOutcome:
    """Decide solvability of ``f o gamma - f = g`` and solve when possible.

    Returns the reconstructed field (``None`` if any block is obstructed)
    and a report with one record per processed (orbit, ell, n) block, in
    order of orbit representative, then ell, then n.
    """
    if spec is not None and spec != g.spec:
        for k, ell, _ in g.blocks:
            if not spec.contains(k) or ell > spec.lmax:
                raise SpecMismatch(f"g has block k={k}, l={ell} outside {spec}")
        g = CoefficientField(spec, g.blocks)
    spec = g.spec
    orbits = enumerate_orbits(spec, screw)
    workers = resolve_threads(threads)

    def task(orbit):
        return _solve_orbit(g, orbit, spec.lmax, tol)

    if workers == 1:
        results = [task(o) for o in orbits]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, orbits))
    records, blocks = [], {}
    for recs, blks in results:
        records.extend(recs)
        blocks.update(blks)
    report = ObstructionReport(records, tol)
    f = CoefficientField(spec, blocks) if report.solvable else None
    return SolveOutcome(f, report)


def p_step_solution(block: OrbitBlock, tol: float = DEFAULT_TOL) -> ClosureSolution:
    """Closure equation iterated over the full rotation order p instead of L."""
    p = block.orbit.rotation.order
    mono = build_monodromy(block.orbit, block.ell, steps=p, tol=tol)
    return solve_closure(mono, build_forcing(block, steps=p), tol)
