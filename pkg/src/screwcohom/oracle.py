"""Brute-force check: the whole truncated operator ``f -> f o gamma - f`` as
one dense matrix, solved by generic least squares.

Nothing here knows about orbits or monodromy. Columns are built straight
from the transport identities for a single basis function
``e_k(x) D^ell_mn(R)``:

    e_k(t + R0 x) = exp(2 pi i k.t) e_{R0^T k}(x),
    D_mn(R0 R) = sum_m' D_mm'(R0) D_m'n(R).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .closure import DEFAULT_TOL, build_monodromy, solve_all
from .orbits import enumerate_orbits
from .errors import MismatchDetected, SpecMismatch, TooLarge
from .spectrum import CoefficientField, ScrewMotion, TruncationSpec, koopman_minus_id
from .wigner import irrep

MAX_DIM = 20000


@dataclass
class DenseOperator:
    spec: TruncationSpec
    screw: ScrewMotion
    matrix: np.ndarray
    index: list  # position -> (k, ell, m, n)
    position: dict
    weights: np.ndarray  # Parseval weight 1 / (2 ell + 1) per position

    @property
    def dimension(self) -> int:
        return len(self.index)

    def vectorize(self, f: CoefficientField) -> np.ndarray:
        if f.spec != self.spec:
            raise SpecMismatch("field truncation differs from the operator's")
        x = np.zeros(self.dimension, dtype=complex)
        for (k, ell, n), vec in f.blocks.items():
            for i, v in enumerate(vec):
                x[self.position[(k, ell, i - ell, n)]] = v
        return x

    def devectorize(self, x) -> CoefficientField:
        blocks = {}
        for pos, (k, ell, m, n) in enumerate(self.index):
            if x[pos] != 0:
                vec = blocks.setdefault((k, ell, n), np.zeros(2 * ell + 1, dtype=complex))
                vec[m + ell] = x[pos]
        return CoefficientField(self.spec, blocks)

    def weighted_norm(self, x, idx=None) -> float:
        w = self.weights if idx is None else self.weights[idx]
        return float(np.sqrt(np.sum(w * np.abs(x) ** 2)))


def dense_dimension(spec: TruncationSpec) -> int:
    return (2 * spec.kmax + 1) ** 3 * sum((2 * ell + 1) ** 2 for ell in range(spec.lmax + 1))


def assemble_dense(spec: TruncationSpec, screw: ScrewMotion, max_dim: int = MAX_DIM) -> DenseOperator:
    """Index order: k lexicographic, then ell, then m, then n."""
    N = dense_dimension(spec)
    if N > max_dim:
        raise TooLarge(f"dense operator would be {N}x{N} (limit {max_dim})")
    index, offset = [], {}
    for k in spec.frequencies():
        for ell in range(spec.lmax + 1):
            offset[(k, ell)] = len(index)
            index.extend((k, ell, m, n) for m in range(-ell, ell + 1) for n in range(-ell, ell + 1))
    position = {key: i for i, key in enumerate(index)}
    weights = np.array([1.0 / (2 * key[1] + 1) for key in index])

    r0 = np.array(screw.rotation.matrix, dtype=float)
    r0_int = np.array(screw.rotation.matrix, dtype=np.int64)
    t = screw.t_float
    D = {ell: irrep(ell, r0) for ell in range(spec.lmax + 1)}
    M = np.zeros((N, N), dtype=complex)
    for k in spec.frequencies():
        phase = np.exp(2j * np.pi * float(np.dot(k, t)))
        k_out = tuple(int(c) for c in r0_int.T @ np.array(k))
        for ell in range(spec.lmax + 1):
            d = 2 * ell + 1
            # column (m, n) -> rows (m', n) with weight D[m, m']
            sub = phase * np.kron(D[ell].T, np.eye(d))
            c0, r0_ = offset[(k, ell)], offset[(k_out, ell)]
            M[r0_:r0_ + d * d, c0:c0 + d * d] += sub
    M -= np.eye(N)
    return DenseOperator(spec, screw, M, index, position, weights)


@dataclass
class LstsqResult:
    solvable: bool
    f: CoefficientField
    residual: float
    kernel_dim: int
    unsolvable_blocks: set = field(default_factory=set)


def _components(op: DenseOperator):
    pattern = csr_matrix(op.matrix != 0)
    ncomp, labels = connected_components(pattern, directed=True, connection="weak")
    groups = [[] for _ in range(ncomp)]
    for pos, lab in enumerate(labels):
        groups[lab].append(pos)
    return [np.array(g) for g in groups]


def _pinv_solve(A, b, tol):
    U, S, Vh = np.linalg.svd(A)
    cutoff = tol * max(1.0, S[0]) if S.size else 0.0
    rank = int(np.sum(S > cutoff))
    x = Vh[:rank].conj().T @ ((U[:, :rank].conj().T @ b) / S[:rank])
    return x, A.shape[1] - rank


def lstsq_decide(op: DenseOperator, g: CoefficientField, tol: float = DEFAULT_TOL,
                 method: str = "components") -> LstsqResult:
    """Minimum-norm least squares for ``matrix @ x = vec(g)``.

    ``method="full"`` runs one SVD of the whole matrix. ``"components"``
    first splits the matrix into the connected components of its nonzero
    pattern (a generic graph step) and runs one SVD per component; the
    answer is the same because the matrix is block diagonal after that
    permutation.
    """
    b = op.vectorize(g)
    g_norm = op.weighted_norm(b)
    threshold = tol * max(1.0, g_norm)
    if method == "full":
        x, kdim = _pinv_solve(op.matrix, b, tol)
        unsolvable = set()
    elif method == "components":
        x = np.zeros(op.dimension, dtype=complex)
        kdim = 0
        unsolvable = set()
        for idx in _components(op):
            sub = op.matrix[np.ix_(idx, idx)]
            xs, kd = _pinv_solve(sub, b[idx], tol)
            x[idx] = xs
            kdim += kd
            r = sub @ xs - b[idx]
            if op.weighted_norm(r, idx) > threshold:
                keys = {(op.index[i][0], op.index[i][1], op.index[i][3]) for i in idx}
                ells = {key[1] for key in keys}
                ns = {key[2] for key in keys}
                rep = min(key[0] for key in keys)
                for ell in ells:
                    for n in ns:
                        unsolvable.add((rep, ell, n))
    else:
        raise ValueError(f"unknown method {method!r}")
    residual = op.weighted_norm(op.matrix @ x - b)
    return LstsqResult(residual <= threshold, op.devectorize(x), residual, kdim, unsolvable)


@dataclass
class ComparisonReport:
    solver_solvable: bool
    oracle_solvable: bool
    solver_residual: float | None
    oracle_residual: float
    difference_image: float | None
    solver_unsolvable: set
    oracle_unsolvable: set
    kernel_dim_oracle: int
    kernel_dim_orbits: int

    @property
    def agree(self) -> bool:
        return self.solver_solvable == self.oracle_solvable and self.solver_unsolvable == self.oracle_unsolvable

    def to_json(self) -> dict:
        return {
            "agree": self.agree,
            "solver_solvable": self.solver_solvable,
            "oracle_solvable": self.oracle_solvable,
            "solver_residual": self.solver_residual,
            "oracle_residual": self.oracle_residual,
            "difference_image": self.difference_image,
            "kernel_dim_oracle": self.kernel_dim_oracle,
            "kernel_dim_orbits": self.kernel_dim_orbits,
        }


def compare(spec: TruncationSpec, screw: ScrewMotion, g: CoefficientField, tol: float = DEFAULT_TOL,
            op: DenseOperator | None = None, strict: bool = True) -> ComparisonReport:
    """Run the orbit solver and the dense oracle on the same problem.

    With ``strict`` a :class:`MismatchDetected` is raised when the verdicts
    differ (globally or on any block), when a solution has a large
    residual, or when the two solutions differ outside the kernel.
    """
    if g.spec != spec:
        g = CoefficientField(spec, g.blocks)
    op = op if op is not None else assemble_dense(spec, screw)
    outcome = solve_all(g, screw, tol)
    dense = lstsq_decide(op, g, tol)
    solver_bad = {(r.orbit_rep, r.l, r.n) for r in outcome.report.obstructions}
    orbit_kdim = orbit_kernel_dim(spec, screw)
    s_res = diff = None
    bound = tol * max(1.0, g.norm())
    if outcome.f is not None and dense.solvable:
        s_res = (koopman_minus_id(outcome.f, screw) - g).norm()
        diff_vec = op.vectorize(outcome.f) - op.vectorize(dense.f)
        diff = op.weighted_norm(op.matrix @ diff_vec)
    report = ComparisonReport(outcome.report.solvable, dense.solvable, s_res, dense.residual, diff,
                              solver_bad, dense.unsolvable_blocks, dense.kernel_dim, orbit_kdim)
    if strict:
        if not report.agree:
            blocks = sorted(solver_bad ^ dense.unsolvable_blocks)
            raise MismatchDetected(f"verdicts differ on blocks {blocks[:5]}", blocks)
        if s_res is not None and (s_res > bound or diff > bound):
            raise MismatchDetected(f"solutions inconsistent: residual {s_res:.3g}, difference image {diff:.3g}")
    return report


def orbit_kernel_dim(spec: TruncationSpec, screw: ScrewMotion) -> int:
    """Sum over orbit blocks of the resonant multiplicity (one block per n)."""
    return sum(
        (2 * ell + 1) * build_monodromy(orbit, ell).resonant_multiplicity
        for orbit in enumerate_orbits(spec, screw)
        for ell in range(spec.lmax + 1)
    )
