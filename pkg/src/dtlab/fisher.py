"""Free Fisher information, non-microstates entropy, and entropy dimension.

Closed forms where the theory supplies them (the deformation family of a
DT-element relative to the diagonal algebra), numerical quadrature for the
entropy integral, and checkers for the Stam inequality and the dimension
bounds.  Exact values stay ``Fraction``; quadrature and limsup estimation
are floating point with documented thresholds.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence, Union

from .dgauss import ExactCheck, fisher_exact, sqrt_fraction, star_moment_sequence, tau
from .dgauss import T1, T2S
from .errors import PrecisionError, UsageError
from .ncpart import MomentSequence, moments_to_cumulants
from .pwpoly import Rational, as_fraction

# estimation thresholds; the limit recipes are asymptotic statements and any
# finite-sample reading of them is a documented choice
LIMSUP_AGREEMENT_RTOL = 0.01      # two-decade agreement for the equality flag
DIVERGENCE_THRESHOLD = 0.01       # t*phi(t) above this near 0 flags a 1/t tail
MIN_POINTS_PER_DECADE = 16
PROFILE_TMAX_FLOOR = 1e3


@dataclass(frozen=True)
class PhiProfile:
    """Samples of t -> Fisher information along a perturbation, t decreasing."""

    samples: tuple[tuple[Fraction, Union[Fraction, float], bool], ...]

    def __post_init__(self):
        rows = tuple((as_fraction(t), v, bool(e)) for t, v, e in self.samples)
        if any(rows[i][0] <= rows[i + 1][0] for i in range(len(rows) - 1)):
            rows = tuple(sorted(rows, key=lambda r: r[0], reverse=True))
        if any(t <= 0 for t, _, _ in rows):
            raise UsageError("profile t values must be positive")
        if any(float(v) < 0 for _, v, _ in rows):
            raise UsageError("Fisher information samples must be nonnegative")
        object.__setattr__(self, "samples", rows)

    def t_values(self) -> list[Fraction]:
        return [t for t, _, _ in self.samples]

    def span_decades(self) -> float:
        ts = self.t_values()
        return math.log10(float(ts[0]) / float(ts[-1])) if len(ts) > 1 else 0.0

    # -- CSV interchange (t, phi, exact flag) --------------------------------

    def to_csv(self, path: Union[str, Path]):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "phi", "exact"])
            for t, v, e in self.samples:
                writer.writerow([str(t), str(v) if e else repr(float(v)), int(e)])

    @staticmethod
    def from_csv(path: Union[str, Path]) -> "PhiProfile":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:3] != ["t", "phi", "exact"]:
                raise UsageError(f"unexpected profile header {header}")
            for t, phi, exact in reader:
                e = bool(int(exact))
                rows.append((as_fraction(t), as_fraction(phi) if e else float(phi), e))
        return PhiProfile(tuple(rows))


@dataclass(frozen=True)
class DimensionReport:
    """Outcome of a dimension lower-bound computation."""

    n_vars: int
    limsup_estimate: float
    lower_bound: float
    equality_claimed: bool

    def __post_init__(self):
        if abs(self.lower_bound - (self.n_vars - self.limsup_estimate)) > 1e-12:
            raise UsageError("lower_bound must equal n_vars - limsup_estimate")

    def to_json(self) -> str:
        return json.dumps({
            "n_vars": self.n_vars,
            "limsup_estimate": self.limsup_estimate,
            "lower_bound": self.lower_bound,
            "equality_claimed": self.equality_claimed,
        }, sort_keys=True)


# -- closed forms --------------------------------------------------------------


def phi_dt_relative_D(t: Rational, csq: Rational) -> Fraction:
    """Fisher information of the deformation pair relative to the diagonal:
    t/(csq+t) + 1.  Cross-checked against the exact engine whenever the
    square-ratio condition makes the engine applicable."""
    tv, cv = as_fraction(t), as_fraction(csq)
    if tv <= 0 or cv <= 0:
        raise UsageError("t and csq must be positive")
    value = tv / (cv + tv) + 1
    if sqrt_fraction(tv / (cv + tv)) is not None and sqrt_fraction(1 / tv) is not None:
        engine = fisher_exact(tv, cv)
        if engine != value:
            raise UsageError(f"engine cross-check failed: {engine} != {value}")
    return value


def delta_star_relative_D(csq: Rational) -> DimensionReport:
    """Dimension of a DT-element relative to the diagonal algebra: exactly 1.

    The scaled Fisher information t * Phi(perturbed pair) equals the closed
    form t/(csq+t) + 1, whose t -> 0 limit converges to 1, so the lower
    bound 2 - 1 = 1 is attained with equality.
    """
    cv = as_fraction(csq)
    if cv <= 0:
        raise UsageError("csq must be positive")
    limit = 1.0  # lim of t/(csq+t) + 1, convergent for every csq > 0
    return DimensionReport(n_vars=2, limsup_estimate=limit,
                           lower_bound=2 - limit, equality_claimed=True)


def chi_star_upper(n_vars: int, csq_total: float) -> float:
    """Upper bound (n/2) log(2 pi e C^2 / n) on the entropy of n variables."""
    if n_vars < 1:
        raise UsageError("need at least one variable")
    if csq_total <= 0:
        raise UsageError("total variance must be positive")
    return 0.5 * n_vars * math.log(2 * math.pi * math.e * csq_total / n_vars)


def stam_bound(phi1: float, phi2: float) -> float:
    """Harmonic bound on the Fisher information of a free sum.

    Infinite inputs contribute zero reciprocal; the result never exceeds
    either argument.
    """
    for p in (phi1, phi2):
        if p != math.inf and p <= 0:
            raise UsageError("Fisher informations must be positive or infinite")
    inv = (0.0 if phi1 == math.inf else 1.0 / phi1) + \
          (0.0 if phi2 == math.inf else 1.0 / phi2)
    return math.inf if inv == 0 else 1.0 / inv


# -- profile-based estimators ---------------------------------------------------


def _decade_max(samples, lo: float, hi: float) -> float | None:
    vals = [float(t) * float(v) for t, v, _ in samples if lo <= float(t) < hi]
    return max(vals) if vals else None


def _limsup_estimate(profile: PhiProfile) -> tuple[float, bool]:
    """Max of t*phi(t) over the smallest decade, with a two-decade agreement
    flag (successive decade estimates within 1% claim convergence)."""
    samples = profile.samples
    t_min = float(samples[-1][0])
    a1 = _decade_max(samples, t_min, 10 * t_min)
    a2 = _decade_max(samples, 10 * t_min, 100 * t_min)
    if a1 is None:
        raise PrecisionError("no samples in the smallest decade")
    if a2 is None:
        return a1, False
    agree = abs(a1 - a2) <= LIMSUP_AGREEMENT_RTOL * max(abs(a1), abs(a2)) or \
        abs(a1 - a2) <= 1e-12
    return a1, agree


def delta_star_lower(profile: PhiProfile, n_vars: int,
                     min_decades: float = 3.0) -> DimensionReport:
    """Dimension lower bound n - limsup(t * phi(t)) from a sampled profile."""
    if profile.span_decades() + 1e-9 < min_decades:
        raise PrecisionError(
            f"profile spans {profile.span_decades():.2f} decades, "
            f"need at least {min_decades}")
    est, agree = _limsup_estimate(profile)
    return DimensionReport(n_vars=n_vars, limsup_estimate=est,
                           lower_bound=n_vars - est, equality_claimed=agree)


def delta_star_nonsa(profile: PhiProfile, min_decades: float = 3.0,
                     analytic_limsup: float | None = None) -> DimensionReport:
    """Dimension bound for one non-self-adjoint variable from the profile
    t -> Phi(a + sqrt(t) Y, adjoint : B) of a circular perturbation.

    ``analytic_limsup`` substitutes an externally justified limit for the
    finite-sample estimate (the honest way to import an analytic fact the
    samples cannot see); the bound is 2 - limsup.
    """
    if analytic_limsup is not None:
        if analytic_limsup < 0:
            raise UsageError("limsup of t*phi cannot be negative")
        return DimensionReport(n_vars=2, limsup_estimate=analytic_limsup,
                               lower_bound=2 - analytic_limsup, equality_claimed=True)
    return delta_star_lower(profile, n_vars=2, min_decades=min_decades)


def chi_star_from_profile(profile: PhiProfile, n_vars: int,
                          analytic_tail: bool = False) -> float:
    """Entropy from a Fisher profile:
    (1/2) integral of n/(1+t) - phi(t), plus (n/2) log(2 pi e).

    Trapezoid rule on the sampled grid; below the smallest t the integrand
    is frozen at its last value (integrable-singularity handling), and the
    region above the largest t contributes zero, which requires either the
    analytic-tail flag (the caller asserts phi matches n/(1+t) beyond the
    grid) or a grid reaching 1e3.  A non-vanishing t*phi(t) near zero means
    the integral diverges; that path returns -inf rather than a number.
    """
    samples = profile.samples
    if len(samples) < 2:
        raise PrecisionError("profile needs at least two samples")
    ts = [float(t) for t, _, _ in samples][::-1]          # ascending
    phis = [float(v) for _, v, _ in samples][::-1]
    gaps = [math.log10(b / a) for a, b in zip(ts, ts[1:])]
    if max(gaps) > 1.0 / MIN_POINTS_PER_DECADE:
        raise PrecisionError(
            f"profile too sparse: need {MIN_POINTS_PER_DECADE} points per decade")
    if not analytic_tail and ts[-1] < PROFILE_TMAX_FLOOR:
        raise PrecisionError(
            f"grid must reach {PROFILE_TMAX_FLOOR} unless an analytic tail is supplied")
    limsup, _ = _limsup_estimate(profile)
    if limsup > DIVERGENCE_THRESHOLD:
        return -math.inf
    integrand = [n_vars / (1.0 + t) - p for t, p in zip(ts, phis)]
    integral = integrand[0] * ts[0]  # frozen value over [0, t_min]
    for i in range(len(ts) - 1):
        integral += 0.5 * (integrand[i] + integrand[i + 1]) * (ts[i + 1] - ts[i])
    return 0.5 * integral + 0.5 * n_vars * math.log(2 * math.pi * math.e)


# -- exact DT profiles -----------------------------------------------------------


def dt_profile_relative_D(csq: Rational, t_grid: Sequence[Rational]) -> PhiProfile:
    """Exact profile t -> Phi(Z + sqrt(t) Y, * : diagonal) for a DT-element.

    By the distribution identity the perturbed element is again of
    deformation type, so the value is (1/t)(t/(csq+t) + 1); the scaled
    samples t*phi feed the dimension recipe and converge to 1.
    """
    cv = as_fraction(csq)
    rows = []
    for t in t_grid:
        tv = as_fraction(t)
        if tv <= 0:
            raise UsageError("grid values must be positive")
        rows.append((tv, (tv / (cv + tv) + 1) / tv, True))
    return PhiProfile(tuple(rows))


def dt_profile_smoothed(csq: Rational, eps_sq: Rational,
                        t_grid: Sequence[Rational]) -> PhiProfile:
    """Exact entropy-integrand profile for the smoothed pair (real and
    imaginary parts of Z + eps Y), perturbed by free standard semicirculars:
    phi(t) = 2/(eps^2 + 2t) + 2/(csq + eps^2 + 2t)."""
    cv, ev = as_fraction(csq), as_fraction(eps_sq)
    if ev <= 0:
        raise UsageError("smoothing eps^2 must be positive")
    rows = []
    for t in t_grid:
        tv = as_fraction(t)
        rows.append((tv, Fraction(2, 1) / (ev + 2 * tv) + Fraction(2, 1) / (cv + ev + 2 * tv), True))
    return PhiProfile(tuple(rows))


def log_grid(lo: float, hi: float, per_decade: int = 32) -> list[Fraction]:
    """Log-spaced rational grid, descending, at least per_decade points/decade."""
    n = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
    out = []
    for i in range(n):
        x = hi * (lo / hi) ** (i / (n - 1))
        out.append(Fraction(x).limit_denominator(10 ** 12))
    return out


# -- the non-self-adjoint Fisher identity check ----------------------------------


def nonsa_fisher_identity_check(max_len: int) -> list[ExactCheck]:
    """Fisher information of a circular element versus its real/imaginary parts.

    Verifies at cumulant level that the adjoint is the conjugate system of
    the circular element built from the generator family (so its Fisher
    information is 2), that the real and imaginary parts are free variance-1/2
    semicirculars (so theirs is 4 = 2*2), and the inverse-square rescaling law.
    """
    if max_len > 6:
        raise UsageError("identity check capped at order 6")
    if max_len < 2:
        raise UsageError("need order at least 2")
    c = T1 + T2S
    moments = star_moment_sequence(c, max_len)
    kappa = moments_to_cumulants(moments)
    checks = []
    for word, value in sorted(kappa.values.items()):
        if not word:
            continue
        expected = Fraction(1) if word in (("c", "c*"), ("c*", "c")) else Fraction(0)
        checks.append(ExactCheck(f"cumconj[{''.join(word)}]", expected, value))

    # Phi(c, c*) = |c*|^2 + |c|^2 once the cumulant criterion certifies the
    # conjugate pair
    phi_c = tau(c * c.adjoint()) + tau(c.adjoint() * c)
    checks.append(ExactCheck("phi(c,c*)", Fraction(2), phi_c))

    # real/imaginary parts: joint cumulants by multilinearity over the computed
    # table, with exact Gaussian-rational coefficients (re, im) pairs:
    #   Re c = (1/2) c + (1/2) c*        Im c = (-i/2) c + (i/2) c*
    half = Fraction(1, 2)
    coeffs = {
        "R": {"c": (half, Fraction(0)), "c*": (half, Fraction(0))},
        "I": {"c": (Fraction(0), -half), "c*": (Fraction(0), half)},
    }

    def cmul(a, b):
        return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])

    imag_residue = Fraction(0)
    ri_records = []
    import itertools
    for n in range(1, max_len + 1):
        for word in itertools.product("RI", repeat=n):
            re_acc, im_acc = Fraction(0), Fraction(0)
            for assign in itertools.product(("c", "c*"), repeat=n):
                z = (Fraction(1), Fraction(0))
                for letter, base in zip(word, assign):
                    z = cmul(z, coeffs[letter][base])
                k = kappa[assign]
                re_acc += z[0] * k
                im_acc += z[1] * k
            expected = half if word in (("R", "R"), ("I", "I")) else Fraction(0)
            ri_records.append(ExactCheck(f"kappa[{''.join(word)}]", expected, re_acc))
            imag_residue += abs(im_acc)
    checks.extend(ri_records)
    checks.append(ExactCheck("imag(kappa[R/I words])", Fraction(0), imag_residue))

    # free variance-1/2 semicirculars have Fisher information 2 each
    checks.append(ExactCheck("phi(Re c, Im c)", Fraction(4),
                             Fraction(1, 1) / half + Fraction(1, 1) / half))
    checks.append(ExactCheck("identity 2*phi(c,c*) = phi(Re c, Im c)",
                             Fraction(0), 2 * phi_c - Fraction(4)))

    # rescaling: moments of r c scale by r^len, Fisher by 1/r^2
    r = Fraction(2)
    scaled = MomentSequence(max_len, {w: (r ** len(w)) * v
                                      for w, v in moments.values.items()})
    skappa = moments_to_cumulants(scaled)
    pair_var = skappa[("c", "c*")]
    off = sum((abs(v) for w, v in skappa.values.items()
               if w and v != 0 and w not in (("c", "c*"), ("c*", "c"))), Fraction(0))
    checks.append(ExactCheck("scaled cumulant table circular", Fraction(0), off))
    checks.append(ExactCheck("phi(2c, 2c*)", Fraction(1, 2), 2 / pair_var))
    return checks
