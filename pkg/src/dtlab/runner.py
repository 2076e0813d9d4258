"""Experiment runner: named verification suites behind a uniform report format.

Each command takes a validated :class:`RunConfig`, runs its checks in a fixed
manifest order, and returns a :class:`RunReport` whose JSON serialization is
byte-identical across runs with the same config and seed (the wall-clock
field is excluded from that contract).  Every numeric record carries a
provenance tag: ``exact`` (rational engine), ``paper-closed-form`` (evaluated
formula), or ``monte-carlo``.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Union

import numpy as np

from . import __version__
from .dgauss import (ExactCheck, T1, T2, T2S, WordExpr,
                     circularity_check, conjugate_relation_sweep,
                     distribution_identity_check, fisher_exact,
                     liberation_orthogonality, sqrt_fraction,
                     statelemma_kernel_check, tau)
from .ensembles import (AtomicMeasure, EnsembleSpec, MeasureSpec,
                        PushforwardMeasure, SQRT_E, cutout_residual,
                        estimate_star_moment, norm_estimate, parse_word)
from .errors import UsageError
from .fisher import (PhiProfile, chi_star_from_profile,
                     chi_star_upper, delta_star_nonsa, delta_star_relative_D,
                     dt_profile_relative_D, dt_profile_smoothed, log_grid,
                     nonsa_fisher_identity_check, phi_dt_relative_D, stam_bound)
from .pwpoly import PW_X, PiecewisePoly, as_fraction
from .spectral import (build_pencil, eigenprojection_additivity,
                       independence_check, kaplansky_check, random_subspace)

REPORT_SCHEMA = "1.0"

COMMANDS = ("verify", "moments", "fisher", "dimension", "spectra")
VERIFY_SUITES = ("fisher", "conjugate", "circularity", "distribution",
                 "liberation", "statelemma", "bounds", "nonsa", "all")

# acceptance-grade defaults
FISHER_PAIRS = (("1/4", "3/4"), ("1/9", "8/9"), ("1", "3"))
MOMENT_BIAS_CONST = 1.0   # documented O(1/n) allowance: |mean - exact| <= 3 se + C/n


@dataclass(frozen=True)
class Record:
    """One check: expected vs actual at a stated tolerance, with provenance."""

    name: str
    expected: str
    actual: str
    tolerance: str
    passed: bool
    provenance: str


PROVENANCE_TAGS = ("exact", "paper-closed-form", "monte-carlo")


@dataclass
class RunReport:
    command: str
    config: dict
    records: list[Record]
    passed: bool
    schema_version: str = REPORT_SCHEMA
    tool_version: str = __version__
    wall_clock_s: float = 0.0
    artifacts: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = {r.provenance for r in self.records} - set(PROVENANCE_TAGS)
        if bad:
            raise UsageError(f"unknown provenance tags {sorted(bad)}")

    def to_dict(self, drop_wallclock: bool = False) -> dict:
        d = {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config,
            "records": [asdict(r) for r in self.records],
            "passed": self.passed,
            "artifacts": self.artifacts,
        }
        if not drop_wallclock:
            d["wall_clock_s"] = self.wall_clock_s
        return d

    def to_json_bytes(self, drop_wallclock: bool = False) -> bytes:
        return (json.dumps(self.to_dict(drop_wallclock), sort_keys=True, indent=2)
                + "\n").encode()

    def to_csv_text(self) -> str:
        lines = ["name,expected,actual,tolerance,passed,provenance"]
        for r in self.records:
            fields = [r.name, r.expected, r.actual, r.tolerance,
                      str(r.passed).lower(), r.provenance]
            lines.append(",".join('"%s"' % f.replace('"', '""') for f in fields))
        return "\n".join(lines) + "\n"


def read_report(path: Union[str, Path]) -> dict:
    """Load a report, failing loudly on unknown schema versions."""
    with open(path) as fh:
        data = json.load(fh)
    if data.get("schema_version") != REPORT_SCHEMA:
        raise UsageError(
            f"unsupported report schema {data.get('schema_version')!r}, "
            f"this reader handles {REPORT_SCHEMA}")
    return data


# -- configuration ---------------------------------------------------------------

_ALLOWED_KEYS = {
    "verify": {"suite", "t", "csq", "pairs", "max_len", "degree", "a", "b", "seed"},
    "moments": {"mu", "c", "n", "reps", "words", "seed", "bias_const"},
    "fisher": {"t", "csq", "t_min", "t_max", "per_decade", "seed"},
    "dimension": {"csq", "t_grid", "analytic_flag", "eps_sq", "seed"},
    "spectra": {"n", "reps", "cutout_n", "cutout_k", "kaplansky_dim",
                "kaplansky_pairs", "pencil_count", "pencil_max_dim",
                "gammas", "point_spectrum_n", "seed"},
}


@dataclass(frozen=True)
class RunConfig:
    """A command plus its validated, command-specific parameters."""

    command: str
    parameters: dict

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; choose from {COMMANDS}")
        allowed = _ALLOWED_KEYS[self.command]
        unknown = set(self.parameters) - allowed
        if unknown:
            raise UsageError(f"unknown parameter keys for {self.command}: {sorted(unknown)}")
        seed = self.parameters.get("seed", 0)
        if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")

    def get(self, key: str, default=None):
        return self.parameters.get(key, default)

    def fraction(self, key: str, default: str) -> Fraction:
        return as_fraction(str(self.get(key, default)))

    def echo(self) -> dict:
        return {"command": self.command,
                "parameters": {k: self.parameters[k] for k in sorted(self.parameters)}}


def parse_measure(text: str) -> tuple[MeasureSpec, PiecewisePoly | None]:
    """Measure spec grammar -> (sampler measure, exact diagonal realization).

    ``delta:V`` | ``atomic:v1:w1,v2:w2,...`` | ``poly:<piecewise text>`` |
    ``uniform``.  The exact realization (a diagonal element with the same
    distribution, atoms laid out on weight-proportional intervals in
    ascending order) exists when every atom is a real rational.
    """
    text = text.strip()
    if text == "uniform":
        return PushforwardMeasure(PW_X), PW_X
    if text.startswith("poly:"):
        f = PiecewisePoly.from_text(text[5:])
        return PushforwardMeasure(f), f
    if text.startswith("delta:"):
        value = text[6:]
        try:
            atom = as_fraction(value)
            return (AtomicMeasure(((complex(atom), Fraction(1)),)),
                    PiecewisePoly.constant(atom))
        except UsageError:
            return AtomicMeasure(((complex(value), Fraction(1)),)), None
    if text.startswith("atomic:"):
        pairs = []
        exact_atoms: list[tuple[Fraction, Fraction]] | None = []
        for chunk in text[7:].split(","):
            try:
                v, w = chunk.split(":")
            except ValueError as exc:
                raise UsageError(f"bad atom chunk {chunk!r}") from exc
            weight = as_fraction(w)
            try:
                atom = as_fraction(v)
                pairs.append((complex(atom), weight))
                if exact_atoms is not None:
                    exact_atoms.append((atom, weight))
            except UsageError:
                pairs.append((complex(v), weight))
                exact_atoms = None
        mu = AtomicMeasure(tuple(pairs))
        if exact_atoms is None:
            return mu, None
        exact_atoms.sort()
        breaks = [Fraction(0)]
        for _, w in exact_atoms:
            breaks.append(breaks[-1] + w)
        return mu, PiecewisePoly.step(breaks, [a for a, _ in exact_atoms])
    raise UsageError(f"cannot parse measure spec {text!r}")


# -- record helpers ----------------------------------------------------------------


def _exact_records(checks: Iterable[ExactCheck], provenance: str = "exact") -> list[Record]:
    return [Record(name=c.name, expected=str(c.expected), actual=str(c.actual),
                   tolerance="0 (exact)", passed=c.passed, provenance=provenance)
            for c in checks]


def _float_record(name: str, expected: float, actual: float, tol: float,
                  tol_label: str, provenance: str) -> Record:
    return Record(name=name, expected=repr(expected), actual=repr(actual),
                  tolerance=tol_label, passed=bool(abs(actual - expected) <= tol),
                  provenance=provenance)


def _bound_record(name: str, bound: float, actual: float, provenance: str,
                  label: str = "upper bound") -> Record:
    return Record(name=name, expected=f"<= {bound!r}", actual=repr(actual),
                  tolerance=label, passed=bool(actual <= bound), provenance=provenance)


# -- verify ------------------------------------------------------------------------


def _suite_fisher(cfg: RunConfig) -> list[Record]:
    pairs = cfg.get("pairs")
    if pairs is None and ("t" in cfg.parameters or "csq" in cfg.parameters):
        pairs = [[str(cfg.fraction("t", "1/4")), str(cfg.fraction("csq", "3/4"))]]
    if pairs is None:
        pairs = [list(p) for p in FISHER_PAIRS]
    records = []
    for t_txt, c_txt in pairs:
        t, csq = as_fraction(str(t_txt)), as_fraction(str(c_txt))
        expected = t / (csq + t) + 1
        actual = fisher_exact(t, csq)
        records.append(Record(
            name=f"fisher_exact[t={t},csq={csq}]", expected=str(expected),
            actual=str(actual), tolerance="0 (exact)",
            passed=expected == actual, provenance="exact"))
    return records


def _suite_conjugate(cfg: RunConfig) -> list[Record]:
    t = cfg.fraction("t", "1/4")
    csq = cfg.fraction("csq", "3/4")
    max_len = int(cfg.get("max_len", 4))
    degree = int(cfg.get("degree", 2))
    if degree < 0:
        raise UsageError("insertion degree must be nonnegative")
    if max_len < 0:
        return []  # zero words selected; the runner rejects the empty record set
    basis = [PiecewisePoly.monomial(k) for k in range(degree + 1)]
    return _exact_records(conjugate_relation_sweep(t, csq, max_len, basis))


def _suite_circularity(cfg: RunConfig) -> list[Record]:
    return _exact_records(circularity_check(int(cfg.get("max_len", 8))))


def _suite_distribution(cfg: RunConfig) -> list[Record]:
    a = cfg.fraction("a", "9/25")
    b = cfg.fraction("b", "16/25")
    return _exact_records(distribution_identity_check(a, b, int(cfg.get("max_len", 6))))


def _suite_liberation(cfg: RunConfig) -> list[Record]:
    t = cfg.fraction("t", "1/4")
    csq = cfg.fraction("csq", "3/4")
    return _exact_records(liberation_orthogonality(t, csq, int(cfg.get("max_len", 4))))


def _suite_statelemma(cfg: RunConfig) -> list[Record]:
    degree = int(cfg.get("max_len", 3))
    records = []
    for i in range(degree + 1):
        for j in range(degree + 1):
            a, b = PiecewisePoly.monomial(i), PiecewisePoly.monomial(j)
            lhs, rhs = statelemma_kernel_check(a, b)
            records.append(Record(
                name=f"statelemma[{a.to_text()} ; {b.to_text()}]",
                expected=str(rhs), actual=str(lhs),
                tolerance="0 (exact)", passed=lhs == rhs, provenance="exact"))
    return records


def _suite_bounds(cfg: RunConfig) -> list[Record]:
    records = []
    # entropy upper bound on exact smoothed profiles of the matrix model
    grid = log_grid(1e-6, 2e3, per_decade=32)
    for csq_txt, eps_txt in (("3/4", "1/4"), ("1", "1"), ("4", "1/9")):
        csq, eps_sq = as_fraction(csq_txt), as_fraction(eps_txt)
        profile = dt_profile_smoothed(csq, eps_sq, grid)
        chi = chi_star_from_profile(profile, 2, analytic_tail=True)
        upper = chi_star_upper(2, float(csq) / 2 + float(eps_sq))
        records.append(_bound_record(
            f"chi_upper_dominance[csq={csq},eps_sq={eps_sq}]", upper, chi,
            provenance="paper-closed-form"))
    # semicircular profile: integrand vanishes identically
    semi = PhiProfile(tuple((t, Fraction(1) / (1 + t), True) for t in grid))
    records.append(_float_record(
        "chi_semicircular", 0.5 * math.log(2 * math.pi * math.e),
        chi_star_from_profile(semi, 1, analytic_tail=True),
        1e-9, "1e-9 (identically zero integrand)", "paper-closed-form"))
    # Stam bound never exceeds either argument
    for p1, p2 in ((2.0, 2.0), (1.0, 3.0), (math.inf, 5.0), (0.5, math.inf)):
        val = stam_bound(p1, p2)
        records.append(_bound_record(
            f"stam[{p1},{p2}]", min(p1, p2), val, provenance="paper-closed-form",
            label="<= min of the arguments"))
    records.append(_float_record("stam[2,2]", 1.0, stam_bound(2.0, 2.0), 0.0,
                                 "0 (exact)", "paper-closed-form"))
    # the finite-information limit display: n t / (n/alpha + t) -> 0
    n_vars = 1
    for alpha in (1.0, 10.0, 100.0):
        ts = [1e-2, 1e-4, 1e-6, 1e-8]
        vals = [t * stam_bound(alpha, n_vars / t) for t in ts]
        monotone = all(a > b for a, b in zip(vals, vals[1:]))
        records.append(Record(
            name=f"stam_limit[alpha={alpha}]",
            expected="monotone decrease to < 1e-6",
            actual=f"final={vals[-1]!r}",
            tolerance="1e-6 at t=1e-8",
            passed=bool(monotone and vals[-1] < 1e-6),
            provenance="paper-closed-form"))
    return records


def _suite_nonsa(cfg: RunConfig) -> list[Record]:
    return _exact_records(nonsa_fisher_identity_check(int(cfg.get("max_len", 5))))


_VERIFY_DISPATCH: dict[str, Callable[[RunConfig], list[Record]]] = {
    "fisher": _suite_fisher,
    "conjugate": _suite_conjugate,
    "circularity": _suite_circularity,
    "distribution": _suite_distribution,
    "liberation": _suite_liberation,
    "statelemma": _suite_statelemma,
    "bounds": _suite_bounds,
    "nonsa": _suite_nonsa,
}


def run_verify(cfg: RunConfig) -> RunReport:
    """Exact verification suites; exit status is green only if every record passes."""
    started = time.monotonic()
    suite = cfg.get("suite", "all")
    if suite not in VERIFY_SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {VERIFY_SUITES}")
    names = [s for s in VERIFY_SUITES if s != "all"] if suite == "all" else [suite]
    records: list[Record] = []
    for name in names:  # fixed manifest order
        records.extend(_VERIFY_DISPATCH[name](cfg))
    if not records:
        raise UsageError("no checks selected")
    return _finish("verify", cfg, records, started)


# -- moments -----------------------------------------------------------------------


def _exact_word_value(word: str, diag: PiecewisePoly | None,
                      c: Fraction) -> Fraction | None:
    """Exact trace of a sampled word via the pairing engine, when representable."""
    tokens = parse_word(word)
    letters = {l for l, _ in tokens}
    if "Y" in letters and letters != {"Y"}:
        return None  # no exact oracle for words mixing the circular stand-in
    if letters <= {"Z", "D", "T1", "T2"} and diag is None:
        return None
    exprs = {"T1": T1, "T2": T2}
    if diag is not None:
        exprs["D"] = WordExpr.diagonal(diag)
        exprs["Z"] = WordExpr.diagonal(diag) + T1.scale(c)
    exprs["Y"] = T1 + T2S  # same *-distribution as the circular stand-in
    prod = WordExpr.scalar(1)
    for letter, star in tokens:
        e = exprs[letter]
        prod = prod * (e.adjoint() if star else e)
    return tau(prod)


def run_moments(cfg: RunConfig) -> RunReport:
    """Monte Carlo estimates with exact-oracle comparison columns."""
    started = time.monotonic()
    n = int(cfg.get("n", 500))
    reps = int(cfg.get("reps", 200))
    if n < 8:
        raise UsageError("need n >= 8")
    if reps < 2:
        raise UsageError("need reps >= 2 (standard error undefined otherwise)")
    words = cfg.get("words") or ["ZZ*", "ZZ*ZZ*", "ZZ"]
    if isinstance(words, str):
        words = [w for w in words.split(";") if w]
    c = cfg.fraction("c", "1")
    mu, diag = parse_measure(str(cfg.get("mu", "delta:0")))
    seed = int(cfg.get("seed", 0))
    bias_const = float(cfg.get("bias_const", MOMENT_BIAS_CONST))
    spec = EnsembleSpec(mu=mu, c=float(c), n=n, seed=seed)

    records = []
    estimates = []
    for word in words:
        est = estimate_star_moment(spec, word, reps)
        estimates.append(est)
        exact = _exact_word_value(word, diag, c)
        if exact is None:
            records.append(Record(
                name=f"moment[{word}]", expected="(no exact oracle)",
                actual=repr(est.mean), tolerance=f"stderr={est.stderr!r}",
                passed=True, provenance="monte-carlo"))
        else:
            tol = 3 * est.stderr + bias_const / n
            records.append(_float_record(
                f"moment[{word}]", float(exact), est.mean, tol,
                f"3*stderr + {bias_const}/n = {tol!r}", "monte-carlo"))
    report = _finish("moments", cfg, records, started)
    report.artifacts["estimates"] = [asdict(e) for e in estimates]
    return report


# -- fisher ------------------------------------------------------------------------


def run_fisher(cfg: RunConfig) -> RunReport:
    """Closed-form Fisher evaluation, cross-checked by the exact engine when
    the square-ratio condition holds."""
    started = time.monotonic()
    t = cfg.fraction("t", "1/4")
    csq = cfg.fraction("csq", "3/4")
    value = phi_dt_relative_D(t, csq)
    exactable = (sqrt_fraction(t / (csq + t)) is not None
                 and sqrt_fraction(1 / t) is not None)
    if exactable:
        engine = fisher_exact(t, csq)
        record = Record(
            name=f"phi[t={t},csq={csq}]", expected=str(value), actual=str(engine),
            tolerance="0 (exact)", passed=value == engine, provenance="exact")
    else:
        record = Record(
            name=f"phi[t={t},csq={csq}]", expected=str(value), actual=str(value),
            tolerance="closed form (no exact engine at these parameters)",
            passed=True, provenance="paper-closed-form")
    return _finish("fisher", cfg, [record], started)


def fisher_profile(cfg: RunConfig) -> PhiProfile:
    """Exact scaled-Fisher profile for export (t, phi, exact columns)."""
    csq = cfg.fraction("csq", "3/4")
    t_min = float(cfg.get("t_min", 1e-5))
    t_max = float(cfg.get("t_max", 0.25))
    per_decade = int(cfg.get("per_decade", 32))
    return dt_profile_relative_D(csq, log_grid(t_min, t_max, per_decade))


# -- dimension ---------------------------------------------------------------------


def run_dimension(cfg: RunConfig) -> RunReport:
    """Dimension recipe: the closed-form relative-dimension record, a numeric
    profile cross-check, and the headline record that needs the analytic input.
    """
    started = time.monotonic()
    csq = cfg.fraction("csq", "3/4")
    grid_txt = cfg.get("t_grid") or ["1/4", "1/16", "1/64", "1/256"]
    grid = [as_fraction(str(t)) for t in grid_txt]
    if len(grid) < 2:
        raise UsageError("need a t-grid with at least two points")
    analytic = bool(cfg.get("analytic_flag", False))
    eps_sq = cfg.fraction("eps_sq", "1/4")

    records = []
    # closed-form sample points of the scaled Fisher information
    for t in sorted(grid, reverse=True)[:4]:
        expected = t / (csq + t) + 1
        exactable = (sqrt_fraction(t / (csq + t)) is not None
                     and sqrt_fraction(1 / t) is not None)
        actual = fisher_exact(t, csq) if exactable else expected
        records.append(Record(
            name=f"phi_scaled[t={t}]", expected=str(expected), actual=str(actual),
            tolerance="0 (exact)" if exactable else "closed form",
            passed=expected == actual,
            provenance="exact" if exactable else "paper-closed-form"))

    # relative dimension: the limit converges, so the bound is an equality
    rel = delta_star_relative_D(csq)
    records.append(Record(
        name="delta_rel_diag", expected="1 (equality)",
        actual=f"{rel.lower_bound:g} (equality={rel.equality_claimed})",
        tolerance="exact limit of the closed form",
        passed=rel.lower_bound == 1.0 and rel.equality_claimed,
        provenance="paper-closed-form"))

    # numeric estimate from the sampled profile; first-order bias of the
    # smallest-decade max is bounded by 10 t_min / csq
    profile = dt_profile_relative_D(csq, grid)
    est = delta_star_nonsa(profile, min_decades=1.5)
    t_min = min(grid)
    tol = float(10 * t_min / csq)
    records.append(_float_record(
        "delta_rel_diag_profile_estimate", 1.0, est.lower_bound, tol,
        f"10*t_min/csq = {tol!r}", "paper-closed-form"))

    # headline dimension: needs the analytic scalar-relative limsup as input
    if analytic:
        headline = delta_star_nonsa(profile, analytic_limsup=0.0)
        records.append(Record(
            name="delta_Z", expected="2",
            actual=f"{headline.lower_bound:g}",
            tolerance="exact (analytic input: scalar-relative limsup = 0)",
            passed=headline.lower_bound == 2.0,
            provenance="paper-closed-form"))
    else:
        records.append(Record(
            name="delta_Z", expected=">= 1 (no analytic input)",
            actual=f">= {2 - rel.limsup_estimate:g}",
            tolerance="lower bound only; set analytic_flag for the full value",
            passed=2 - rel.limsup_estimate >= 1.0,
            provenance="paper-closed-form"))

    # entropy of the smoothed pair stays under the variance bound
    dense = log_grid(1e-6, 2e3, per_decade=32)
    chi = chi_star_from_profile(dt_profile_smoothed(csq, eps_sq, dense), 2,
                                analytic_tail=True)
    upper = chi_star_upper(2, float(csq) / 2 + float(eps_sq))
    records.append(_bound_record(
        f"chi_smoothed[eps_sq={eps_sq}]", upper, chi,
        provenance="paper-closed-form"))
    return _finish("dimension", cfg, records, started)


# -- spectra -----------------------------------------------------------------------


def run_spectra(cfg: RunConfig) -> RunReport:
    """Norm, cut-out, Kaplansky, and pencil-independence experiments."""
    started = time.monotonic()
    seed = int(cfg.get("seed", 0))
    records = []

    # largest singular value against sqrt(e)
    n = int(cfg.get("n", 2000))
    reps = int(cfg.get("reps", 2))
    mu, _ = parse_measure("delta:0")
    est = norm_estimate(EnsembleSpec(mu=mu, c=1.0, n=n, seed=seed), reps)
    records.append(_float_record(
        f"norm[n={n}]", SQRT_E, est.mean, 0.05 * SQRT_E, "5% of sqrt(e)",
        "monte-carlo"))

    # cut-out scaling and the structural zero
    cn = int(cfg.get("cutout_n", 1024))
    cutout_reps = min(reps, 3)
    for k in cfg.get("cutout_k") or [4, 16, 64]:
        rep = cutout_residual(EnsembleSpec(mu=mu, c=1.0, n=cn, seed=seed),
                              int(k), cutout_reps)
        records.append(_bound_record(
            f"cutout_norm[k={k},n={cn}]", 2 * rep.reference,
            max(rep.block_norms), provenance="monte-carlo",
            label="2*sqrt(e/k), all replicates"))
        records.append(Record(
            name=f"cutout_double_sum[k={k},n={cn}]", expected="0 (structural)",
            actual=repr(max(rep.double_sum_max)), tolerance="0 (exact zero pattern)",
            passed=max(rep.double_sum_max) == 0.0, provenance="monte-carlo"))

    # Kaplansky trace identity on random projection pairs
    dim = int(cfg.get("kaplansky_dim", 16))
    pairs = int(cfg.get("kaplansky_pairs", 100))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        p = random_subspace(rng, dim, int(rng.integers(1, dim)))
        q = random_subspace(rng, dim, int(rng.integers(1, dim)))
        lhs, rhs = kaplansky_check(p, q)
        worst = max(worst, abs(lhs - rhs))
    records.append(_float_record(
        f"kaplansky[{pairs} pairs, dim {dim}]", 0.0, worst, 1e-10, "1e-10",
        "monte-carlo"))

    # pencil eigenspace independence and trace additivity
    count = int(cfg.get("pencil_count", 50))
    max_dim = int(cfg.get("pencil_max_dim", 20))
    all_independent = True
    worst_add = 0.0
    for _ in range(count):
        d = int(rng.integers(6, max_dim + 1))
        lams = [1.5, -2.0 + 1.0j, 0.25]
        mults = [int(rng.integers(1, 3)) for _ in lams]
        pencil = build_pencil(rng, d, lams, mults)
        ok, _rep = independence_check(pencil, lams)
        all_independent = all_independent and ok
        lhs, rhs = eigenprojection_additivity(pencil, lams)
        worst_add = max(worst_add, abs(lhs - rhs))
    records.append(Record(
        name=f"pencil_independence[{count} pencils, dim<={max_dim}]",
        expected="all independent", actual=str(all_independent).lower(),
        tolerance="rank equality", passed=all_independent, provenance="monte-carlo"))
    records.append(_float_record(
        f"pencil_trace_additivity[{count} pencils]", 0.0, worst_add, 1e-10,
        "1e-10", "monte-carlo"))

    # optional: smallest-singular-value trend statistics (never a verification;
    # finite matrices always have eigenvalues)
    gammas = cfg.get("gammas")
    if gammas:
        from .spectral import point_spectrum_diagnostic
        ps_n = int(cfg.get("point_spectrum_n", 128))
        spec = EnsembleSpec(mu=mu, c=1.0, n=ps_n, seed=seed)
        for rep in point_spectrum_diagnostic(spec, [complex(g) for g in gammas],
                                             max(reps, 2)):
            records.append(Record(
                name=f"point_spectrum[gamma={rep.gamma}, n={ps_n}]",
                expected="trend statistic only (finite-n caveat)",
                actual=f"min={rep.minimum!r} quartiles={rep.quartiles!r}",
                tolerance="informational", passed=True, provenance="monte-carlo"))
    return _finish("spectra", cfg, records, started)


# -- dispatch ----------------------------------------------------------------------


RUNNERS: dict[str, Callable[[RunConfig], RunReport]] = {
    "verify": run_verify,
    "moments": run_moments,
    "fisher": run_fisher,
    "dimension": run_dimension,
    "spectra": run_spectra,
}


def execute(cfg: RunConfig) -> RunReport:
    return RUNNERS[cfg.command](cfg)


def _finish(command: str, cfg: RunConfig, records: list[Record],
            started: float) -> RunReport:
    return RunReport(command=command, config=cfg.echo(), records=records,
                     passed=all(r.passed for r in records),
                     wall_clock_s=time.monotonic() - started)
