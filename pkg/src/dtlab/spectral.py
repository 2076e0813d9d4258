"""Pencil eigenspaces, projection lattice arithmetic, and spectrum diagnostics.

Finite-dimensional embodiment of the eigenspace machinery: numerical null
spaces of A - lambda B, linear independence of generalized eigenspaces for
distinct eigenvalues, meet/join of subspaces with the trace identity
tau(p v q) + tau(p ^ q) = tau(p) + tau(q), and smallest-singular-value
diagnostics for sampled model matrices.  All rank decisions use a relative
singular value threshold; the default tolerance is 1e-10.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensembles import EnsembleSpec, sample_dt
from .errors import UsageError

DEFAULT_TOL = 1e-10
ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class Pencil:
    """The pair (A, B) defining generalized eigenspaces ker(A - lambda B)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a, b = np.asarray(self.a, dtype=complex), np.asarray(self.b, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
            raise UsageError("pencil needs two square matrices of equal dimension")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def kernel_of_b_trivial(self, tol: float = DEFAULT_TOL) -> bool:
        sv = np.linalg.svd(self.b, compute_uv=False)
        return bool(sv[-1] > tol * max(sv[0], 1.0))


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal column basis of a subspace of C^dim."""

    dim: int
    columns: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=complex)
        if cols.ndim != 2 or cols.shape[0] != self.dim:
            raise UsageError("columns must be dim x k")
        if cols.shape[1]:
            gram = cols.conj().T @ cols
            if np.abs(gram - np.eye(cols.shape[1])).max() > ORTHO_TOL:
                raise UsageError("columns are not orthonormal to 1e-10")
        object.__setattr__(self, "columns", cols)

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.conj().T

    def trace(self) -> float:
        """Normalized trace of the orthogonal projection onto the subspace."""
        return self.rank / self.dim


def _null_space(m: np.ndarray, tol: float) -> np.ndarray:
    """Right singular vectors of m with singular value below tol * scale."""
    u, s, vh = np.linalg.svd(m)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    keep = s < tol * scale
    # vh rows beyond len(s) (wide matrices cannot occur here: m is square)
    return vh[np.concatenate([keep, np.ones(vh.shape[0] - s.size, dtype=bool)])].conj().T


def _orth(cols: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the column span, rank by relative threshold."""
    if cols.size == 0:
        return cols.reshape(cols.shape[0], 0)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if not s.size or s[0] == 0:
        return cols[:, :0]
    return u[:, s > tol * s[0] * max(cols.shape)]


def generalized_eigenspace(p: Pencil, lam: complex, tol: float = DEFAULT_TOL) -> SubspaceBasis:
    """Orthonormal basis of the numerical null space of A - lambda B."""
    if not 0 < tol <= 1e-4:
        raise UsageError("tolerance must lie in (0, 1e-4]")
    basis = _null_space(p.a - lam * p.b, tol)
    return SubspaceBasis(p.dim, basis)


@dataclass(frozen=True)
class RankReport:
    dims: tuple[int, ...]
    joint_rank: int

    @property
    def independent(self) -> bool:
        return self.joint_rank == sum(self.dims)


def independence_check(p: Pencil, lambdas: Sequence[complex],
                       tol: float = DEFAULT_TOL) -> tuple[bool, RankReport]:
    """Linear independence of the eigenspaces for pairwise distinct lambdas.

    Requires ker(B) trivial (the hypothesis that makes the Vandermonde
    argument work); concatenates the bases and compares the numerical rank
    with the dimension sum.
    """
    lams = list(lambdas)
    if len({complex(l) for l in lams}) != len(lams):
        raise UsageError("eigenvalues must be pairwise distinct")
    if not p.kernel_of_b_trivial(tol):
        raise UsageError("ker(B) must be trivial for the independence statement")
    bases = [generalized_eigenspace(p, l, tol) for l in lams]
    stacked = np.hstack([b.columns for b in bases]) if bases else np.zeros((p.dim, 0))
    rank = _orth(stacked, tol).shape[1]
    report = RankReport(dims=tuple(b.rank for b in bases), joint_rank=rank)
    return report.independent, report


def projection_meet_join(p: SubspaceBasis, q: SubspaceBasis,
                         tol: float = DEFAULT_TOL) -> tuple[SubspaceBasis, SubspaceBasis]:
    """Intersection and span of two subspaces.

    Join: orthonormalized concatenation.  Meet: null space of the stacked
    complement projectors (a vector is in both ranges iff both complements
    annihilate it).
    """
    if p.dim != q.dim:
        raise UsageError("ambient dimensions differ")
    join = SubspaceBasis(p.dim, _orth(np.hstack([p.columns, q.columns]), tol))
    eye = np.eye(p.dim)
    stacked = np.vstack([eye - p.projector(), eye - q.projector()])
    u, s, vh = np.linalg.svd(stacked)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    meet_cols = vh[s < tol * scale].conj().T
    meet = SubspaceBasis(p.dim, _orth(meet_cols, tol) if meet_cols.size else meet_cols)
    return meet, join


def kaplansky_check(p: SubspaceBasis, q: SubspaceBasis,
                    tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Both sides of the trace identity tau(p v q) = tau(p) + tau(q) - tau(p ^ q)."""
    meet, join = projection_meet_join(p, q, tol)
    return join.trace(), p.trace() + q.trace() - meet.trace()


def eigenprojection_additivity(p: Pencil, lambdas: Sequence[complex],
                               tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Trace of the join of the eigenprojections against the sum of traces."""
    ok, report = independence_check(p, lambdas, tol)
    bases = [generalized_eigenspace(p, l, tol) for l in lambdas]
    joined = _orth(np.hstack([b.columns for b in bases]), tol)
    return joined.shape[1] / p.dim, sum(b.trace() for b in bases)


@dataclass(frozen=True)
class PointSpectrumReport:
    """Distribution of the smallest singular value of gamma - Z over replicates.

    Finite matrices always have eigenvalues, so this is a trend diagnostic,
    never a verification of the empty-point-spectrum statement.
    """

    gamma: complex
    n: int
    reps: int
    minimum: float
    quartiles: tuple[float, float, float]
    maximum: float


def point_spectrum_diagnostic(spec: EnsembleSpec, gammas: Sequence[complex],
                              reps: int) -> list[PointSpectrumReport]:
    if reps < 1:
        raise UsageError("need at least one replicate")
    reports = []
    for gamma in gammas:
        vals = []
        for rep in range(reps):
            z = sample_dt(spec, rep)
            m = gamma * np.eye(spec.n) - z
            vals.append(float(np.linalg.svd(m, compute_uv=False)[-1]))
        arr = np.array(vals)
        q = np.percentile(arr, [25, 50, 75])
        reports.append(PointSpectrumReport(
            gamma=complex(gamma), n=spec.n, reps=reps,
            minimum=float(arr.min()), quartiles=(float(q[0]), float(q[1]), float(q[2])),
            maximum=float(arr.max())))
    return reports


# -- constructions used by the verification suites -------------------------------


def build_pencil(rng: np.random.Generator, dim: int,
                 eigenvalues: Sequence[complex], multiplicities: Sequence[int]) -> Pencil:
    """Pencil with prescribed eigenvalue multiplicities: A = B M, B invertible.

    M is similar to a diagonal with the requested spectrum (plus generic
    filler), via a well-conditioned random unitary; eigenspaces of the
    pencil are then exactly the eigenspaces of M.
    """
    if sum(multiplicities) > dim:
        raise UsageError("multiplicities exceed the dimension")
    diag = []
    for lam, mult in zip(eigenvalues, multiplicities):
        diag.extend([complex(lam)] * mult)
    filler = 10.0 + np.arange(dim - len(diag), dtype=float)  # away from targets
    diag = np.array(diag + list(filler), dtype=complex)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim))
                        + 1j * rng.standard_normal((dim, dim)))
    m = q @ np.diag(diag) @ q.conj().T
    b = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
         + 3.0 * np.sqrt(dim) * np.eye(dim))  # diagonally loaded: invertible
    return Pencil(b @ m, b)


def random_subspace(rng: np.random.Generator, dim: int, rank: int) -> SubspaceBasis:
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    q, _ = np.linalg.qr(g)
    return SubspaceBasis(dim, q[:, :rank])


def pencil_from_files(path_a, path_b) -> Pencil:
    """Build a pencil from two matrices in the binary interchange format."""
    from .ensembles import load_matrix
    return Pencil(load_matrix(path_a), load_matrix(path_b))
