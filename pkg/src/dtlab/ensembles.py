"""Finite-n random matrix realizations and Monte Carlo moment estimation.

The model: a diagonal matrix with i.i.d. entries from a chosen measure plus
c times a strictly upper triangular matrix whose above-diagonal entries have
independent centered Gaussian real and imaginary parts of variance 1/(2n)
(so E|entry|^2 = 1/n).  Replicate streams come from a counter-based
generator keyed by (master seed, replicate index, matrix role), which makes
every estimate reproducible under any execution order, including the
thread-parallel replicate map enabled by the DTLAB_THREADS variable.
"""

from __future__ import annotations

import csv
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import UsageError
from .pwpoly import PiecewisePoly, as_fraction

SQRT_E = float(np.exp(0.5))

# matrix roles for stream splitting
ROLE_DIAG, ROLE_UPPER1, ROLE_UPPER2, ROLE_GINIBRE = 0, 1, 2, 3


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely supported measure; weights are exact and sum to 1."""

    atoms: tuple[tuple[complex, Fraction], ...]

    def __post_init__(self):
        atoms = tuple((complex(a), as_fraction(w)) for a, w in self.atoms)
        if any(w <= 0 for _, w in atoms):
            raise UsageError("atom weights must be positive")
        if sum(w for _, w in atoms) != 1:
            raise UsageError("atom weights must sum to 1")
        object.__setattr__(self, "atoms", atoms)

    def is_real(self) -> bool:
        return all(a.imag == 0 for a, _ in self.atoms)


@dataclass(frozen=True)
class PushforwardMeasure:
    """Push-forward of Lebesgue measure on [0,1] by a piecewise polynomial."""

    f: PiecewisePoly

    def is_real(self) -> bool:
        return True


MeasureSpec = Union[AtomicMeasure, PushforwardMeasure]

DELTA_0 = AtomicMeasure(((0j, Fraction(1)),))


@dataclass(frozen=True)
class EnsembleSpec:
    """One finite-n matrix model: measure, scale c, dimension, master seed."""

    mu: MeasureSpec
    c: float
    n: int
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise UsageError("dimension must be at least 1")
        if self.c < 0:
            raise UsageError("scale c must be nonnegative")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo estimate of one word: mean, stderr, and provenance data."""

    word: str
    mean: float
    stderr: float
    reps: int
    n: int
    seed: int

    def __post_init__(self):
        if self.reps < 2:
            raise UsageError("estimates need at least 2 replicates")


def stream(seed: int, replicate: int, role: int) -> np.random.Generator:
    """Independent, reproducible generator for (seed, replicate, role)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replicate, role))
    return np.random.Generator(np.random.Philox(ss))


def _replicate_map(fn, reps: int) -> list:
    """Run fn(0..reps-1); replicate streams make any schedule equivalent, and
    results are reduced in index order regardless of completion order."""
    threads = int(os.environ.get("DTLAB_THREADS", "1") or "1")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, range(reps)))
    return [fn(r) for r in range(reps)]


# -- samplers -------------------------------------------------------------------


def sample_diagonal(mu: MeasureSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. draws from mu, returned as a length-n complex vector."""
    if isinstance(mu, AtomicMeasure):
        values = np.array([a for a, _ in mu.atoms], dtype=complex)
        probs = np.array([float(w) for _, w in mu.atoms])
        probs /= probs.sum()  # exact weights sum to 1; renormalize float dust
        idx = rng.choice(len(values), size=n, p=probs)
        return values[idx]
    u = rng.random(n)
    return mu.f.eval_float(u).astype(complex)


def sample_strict_upper(n: int, rng: np.random.Generator) -> np.ndarray:
    """Strictly upper triangular, E|entry|^2 = 1/n above the diagonal."""
    t = np.zeros((n, n), dtype=complex)
    if n > 1:
        iu = np.triu_indices(n, k=1)
        m = iu[0].size
        sigma = np.sqrt(1.0 / (2.0 * n))
        t[iu] = sigma * rng.standard_normal(m) + 1j * sigma * rng.standard_normal(m)
    return t


def sample_ginibre_circular(n: int, rng: np.random.Generator) -> np.ndarray:
    """All-entries Gaussian matrix with E|entry|^2 = 1/n (circular limit)."""
    sigma = np.sqrt(1.0 / (2.0 * n))
    return sigma * rng.standard_normal((n, n)) + 1j * sigma * rng.standard_normal((n, n))


def sample_dt(spec: EnsembleSpec, replicate: int, sort_diagonal: bool = False) -> np.ndarray:
    """One replicate of diag + c * strict-upper, deterministic in (seed, replicate)."""
    d = sample_diagonal(spec.mu, spec.n, stream(spec.seed, replicate, ROLE_DIAG))
    if sort_diagonal:
        d = np.sort_complex(d) if np.any(d.imag) else np.sort(d.real).astype(complex)
    z = np.diag(d)
    if spec.c:
        z = z + spec.c * sample_strict_upper(spec.n, stream(spec.seed, replicate, ROLE_UPPER1))
    return z


# -- word estimation ------------------------------------------------------------

_TOKEN = re.compile(r"(Z|T1|T2|D|Y|S)(\*?)")


def parse_word(word: str) -> tuple[tuple[str, bool], ...]:
    """Tokenize a word like 'ZZ*T1' into ((letter, adjoint), ...)."""
    pos = 0
    out = []
    for m in _TOKEN.finditer(word):
        if m.start() != pos:
            raise UsageError(f"cannot parse word {word!r} at position {pos}")
        out.append((m.group(1), m.group(2) == "*"))
        pos = m.end()
    if pos != len(word):
        raise UsageError(f"cannot parse word {word!r} at position {pos}")
    return tuple(out)


def _replicate_matrices(spec: EnsembleSpec, rep: int, letters: set[str]) -> dict[str, np.ndarray]:
    mats: dict[str, np.ndarray] = {}
    need_t1 = "T1" in letters or "Z" in letters
    need_d = "D" in letters or "Z" in letters
    if need_d:
        d = sample_diagonal(spec.mu, spec.n, stream(spec.seed, rep, ROLE_DIAG))
        mats["D"] = np.diag(d)
    if need_t1:
        mats["T1"] = sample_strict_upper(spec.n, stream(spec.seed, rep, ROLE_UPPER1))
    if "T2" in letters:
        mats["T2"] = sample_strict_upper(spec.n, stream(spec.seed, rep, ROLE_UPPER2))
    if "Y" in letters:
        mats["Y"] = sample_ginibre_circular(spec.n, stream(spec.seed, rep, ROLE_GINIBRE))
    if "Z" in letters:
        mats["Z"] = mats["D"] + spec.c * mats["T1"]
    return mats


def replicate_trace(spec: EnsembleSpec, word: str, replicate: int) -> complex:
    """Normalized trace of one sampled word, for one replicate."""
    tokens = parse_word(word)
    if not tokens:
        return 1.0 + 0j
    if len(tokens) > 12:
        raise UsageError("words capped at 12 letters")
    mats = _replicate_matrices(spec, replicate, {l for l, _ in tokens})
    prod = None
    for letter, star in tokens:
        m = mats[letter]
        m = m.conj().T if star else m
        prod = m if prod is None else prod @ m
    return complex(np.trace(prod)) / spec.n


def estimate_star_moment(spec: EnsembleSpec, word: str, reps: int) -> MomentEstimate:
    """Mean and standard error of Re tr_n(word) over independent replicates."""
    if reps < 2:
        raise UsageError("need at least 2 replicates for a standard error")
    vals = np.array(_replicate_map(lambda r: replicate_trace(spec, word, r).real, reps))
    return MomentEstimate(word=word, mean=float(vals.mean()),
                          stderr=float(vals.std(ddof=1) / np.sqrt(reps)),
                          reps=reps, n=spec.n, seed=spec.seed)


def norm_estimate(spec: EnsembleSpec, reps: int) -> MomentEstimate:
    """Mean largest singular value of the sampled model matrix."""
    if reps < 2:
        raise UsageError("need at least 2 replicates for a standard error")

    def one(rep: int) -> float:
        z = sample_dt(spec, rep)
        return float(np.linalg.svd(z, compute_uv=False)[0])

    vals = np.array(_replicate_map(one, reps))
    return MomentEstimate(word="svmax(Z)", mean=float(vals.mean()),
                          stderr=float(vals.std(ddof=1) / np.sqrt(reps)),
                          reps=reps, n=spec.n, seed=spec.seed)


# -- structured experiments -------------------------------------------------------


@dataclass(frozen=True)
class CutoutReport:
    """Block cut-out experiment: compression norms and the structural zero."""

    n: int
    k_blocks: int
    reference: float                      # sqrt(e/k)
    block_norms: tuple[float, ...]        # per replicate
    double_sum_max: tuple[float, ...]     # per replicate, exactly 0.0


def cutout_residual(spec: EnsembleSpec, k_blocks: int, reps: int) -> CutoutReport:
    """Finite-n cut-out: coordinate blocks standing in for diagonal spectral
    projections (diagonal samples sorted ascending when the measure is real).

    Reports (a) the operator norm of the block-diagonal compression of the
    strict-upper factor against sqrt(e/k); (b) the above-block-diagonal part
    of the adjoint commutator, which vanishes identically because products of
    lower-triangular matrices stay lower triangular.
    """
    n, k = spec.n, k_blocks
    if k < 1 or n % k:
        raise UsageError(f"k_blocks={k} must divide n={n}")
    width = n // k
    sort_real = spec.mu.is_real()

    def one(rep: int) -> tuple[float, float]:
        t1 = sample_strict_upper(n, stream(spec.seed, rep, ROLE_UPPER1))
        t2 = sample_strict_upper(n, stream(spec.seed, rep, ROLE_UPPER2))
        d = sample_diagonal(spec.mu, n, stream(spec.seed, rep, ROLE_DIAG))
        if sort_real:
            d = np.sort(d.real).astype(complex)
        blockdiag = np.zeros_like(t1)
        for i in range(k):
            sl = slice(i * width, (i + 1) * width)
            blockdiag[sl, sl] = t1[sl, sl]
        norm = float(np.linalg.svd(blockdiag, compute_uv=False)[0])

        lower = (np.diag(d) + spec.c * t1).conj().T
        t2s = t2.conj().T
        comm = lower @ t2s - t2s @ lower
        above = 0.0
        for i in range(k):
            for j in range(i + 1, k):
                block = comm[i * width:(i + 1) * width, j * width:(j + 1) * width]
                above = max(above, float(np.abs(block).max()) if block.size else 0.0)
        return norm, above

    results = _replicate_map(one, reps)
    return CutoutReport(n=n, k_blocks=k, reference=SQRT_E / np.sqrt(k),
                        block_norms=tuple(r[0] for r in results),
                        double_sum_max=tuple(r[1] for r in results))


@dataclass(frozen=True)
class LiberationRecord:
    """Residual tr_n(j_t w) for one word at one dimension."""

    word: str
    n: int
    mean_re: float
    se_re: float
    mean_im: float
    se_im: float


def liberation_mc(spec: EnsembleSpec, t: float, words: Sequence[str],
                  n_list: Sequence[int], reps: int) -> list[LiberationRecord]:
    """Finite-n residuals of the liberation-gradient orthogonality.

    Builds matrix realizations of the deformation pair and its conjugate
    candidate, forms j = [xi, S] + [xi*, S*] as C - C* (so the real part of
    tr(j) vanishes identically, matching the exact trace-of-commutator zero),
    and reports the real/imaginary residual of tr_n(j w) per word.
    """
    if t <= 0:
        raise UsageError("t must be positive")
    if reps < 2:
        raise UsageError("need at least 2 replicates")
    csq = spec.c ** 2
    s_coef = np.sqrt(t / (csq + t))
    r_coef = np.sqrt((csq + t) / t)
    u_coef = 1.0 / np.sqrt(t)
    records = []
    for n in n_list:
        sub = EnsembleSpec(mu=spec.mu, c=spec.c, n=n, seed=spec.seed)

        def one(rep: int) -> list[complex]:
            d = sample_diagonal(sub.mu, n, stream(sub.seed, rep, ROLE_DIAG))
            t1 = sample_strict_upper(n, stream(sub.seed, rep, ROLE_UPPER1))
            t2 = sample_strict_upper(n, stream(sub.seed, rep, ROLE_UPPER2))
            s_mat = u_coef * np.diag(d) + r_coef * t1 + t2.conj().T
            xi = s_coef * t1.conj().T + t2
            c_mat = xi @ s_mat - s_mat @ xi
            j = c_mat - c_mat.conj().T
            out = []
            for word in words:
                tokens = parse_word(word)
                if any(l != "S" for l, _ in tokens):
                    raise UsageError(f"liberation words use letters S, S*: {word!r}")
                prod = j
                for _, star in tokens:
                    prod = prod @ (s_mat.conj().T if star else s_mat)
                out.append(complex(np.trace(prod)) / n)
            return out

        rows = np.array(_replicate_map(one, reps))  # reps x len(words)
        for col, word in enumerate(words):
            re, im = rows[:, col].real, rows[:, col].imag
            records.append(LiberationRecord(
                word=word or "1", n=n,
                mean_re=float(re.mean()), se_re=float(re.std(ddof=1) / np.sqrt(reps)),
                mean_im=float(im.mean()), se_im=float(im.std(ddof=1) / np.sqrt(reps))))
    return records


# -- interchange formats ----------------------------------------------------------


def save_matrix(path: Union[str, Path], m: np.ndarray):
    """Column-major binary dump with a one-line ASCII header (dims, dtype)."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise UsageError("only 2-d matrices are exported")
    with open(path, "wb") as fh:
        fh.write(f"dtlab-matrix 1 {m.shape[0]} {m.shape[1]} {m.dtype.str}\n".encode())
        fh.write(m.ravel(order="F").tobytes())


def load_matrix(path: Union[str, Path]) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().decode().split()
        if header[:2] != ["dtlab-matrix", "1"]:
            raise UsageError(f"not a dtlab matrix file: {header}")
        rows, cols, dtype = int(header[2]), int(header[3]), header[4]
        data = np.frombuffer(fh.read(), dtype=np.dtype(dtype))
    if data.size != rows * cols:
        raise UsageError("matrix payload size mismatch")
    return data.reshape((rows, cols), order="F")


def estimates_to_csv(path: Union[str, Path], estimates: Iterable[MomentEstimate]):
    """CSV rows (word, mean, stderr, reps, n, seed), stable field order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["word", "mean", "stderr", "reps", "n", "seed"])
        for e in estimates:
            writer.writerow([e.word, repr(e.mean), repr(e.stderr), e.reps, e.n, e.seed])
