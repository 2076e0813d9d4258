"""Acceptance suite: the package's exit criteria, one test per criterion.

Each test prints a single PASS line with the measured runtime; tolerances
are pinned to the stated contracts (exact equality for the rational engine,
explicit allowances for Monte Carlo paths).  Run with ``pytest -s`` to see
the lines as they complete.
"""

import time
from fractions import Fraction as F

import numpy as np

from dtlab.dgauss import (circularity_check, conjugate_relation_sweep,
                          distribution_identity_check, fisher_exact,
                          liberation_orthogonality, statelemma_kernel_check)
from dtlab.ensembles import (DELTA_0, EnsembleSpec, SQRT_E, cutout_residual,
                             estimate_star_moment, norm_estimate)
from dtlab.fisher import stam_bound
from dtlab.ncpart import (MomentSequence, all_words, catalan,
                          cumulants_to_moments, enumerate_nc_partitions,
                          enumerate_nc_pairings, moments_to_cumulants)
from dtlab.pwpoly import PiecewisePoly
from dtlab.runner import RunConfig, run_dimension, run_moments, run_verify
from dtlab.spectral import (build_pencil, eigenprojection_additivity,
                            independence_check, kaplansky_check,
                            random_subspace)


def _report(num, label, started, budget):
    elapsed = time.monotonic() - started
    print(f"ACCEPTANCE {num:02d} {label}: PASS ({elapsed:.1f}s, budget {budget:.0f}s)")
    assert elapsed < budget, f"criterion {num} exceeded its runtime budget"


def test_01_exact_fisher_identity():
    started = time.monotonic()
    for t, csq in ((F(1, 4), F(3, 4)), (F(1, 9), F(8, 9)), (F(1), F(3))):
        value = fisher_exact(t, csq)
        assert value == t / (csq + t) + 1, (t, csq, value)
    _report(1, "exact Fisher identity at three parameter pairs", started, 10)


def test_02_conjugate_relations():
    started = time.monotonic()
    basis = [PiecewisePoly.monomial(k) for k in range(3)]  # spans degree <= 2
    checks = conjugate_relation_sweep(F(1, 4), F(3, 4), 4, basis)
    bad = [c for c in checks if not c.passed]
    assert not bad, bad[:3]
    assert len(checks) == 2 * sum(2 ** n * 3 ** (n + 1) for n in range(5))
    _report(2, f"conjugate relations ({len(checks)} residuals exactly 0)", started, 60)


def test_03_circularity():
    started = time.monotonic()
    checks = circularity_check(8)
    bad = [c for c in checks if not c.passed]
    assert not bad, bad[:3]
    _report(3, "circularity of the mixed generator sum to order 8", started, 60)


def test_04_distribution_identity():
    started = time.monotonic()
    checks = distribution_identity_check(F(9, 25), F(16, 25), 6)
    bad = [c for c in checks if not c.passed]
    assert not bad, bad[:3]
    _report(4, "distribution identity, two engine routes to length 6", started, 120)


def test_05_liberation_orthogonality():
    started = time.monotonic()
    checks = liberation_orthogonality(F(1, 4), F(3, 4), 4)
    bad = [c for c in checks if not c.passed]
    assert not bad, bad[:3]
    _report(5, "liberation-gradient orthogonality to word length 4", started, 60)


def test_06_statelemma_kernel():
    started = time.monotonic()
    for i in range(4):
        for j in range(4):
            lhs, rhs = statelemma_kernel_check(PiecewisePoly.monomial(i),
                                               PiecewisePoly.monomial(j))
            assert lhs == rhs, (i, j, lhs, rhs)
    _report(6, "kernel double-integral identity on monomials to degree 3", started, 10)


def test_07_dimension_reports():
    started = time.monotonic()
    grid = ["1/4", "1/16", "1/64", "1/256"]
    report = run_dimension(RunConfig("dimension", {"csq": "3/4", "t_grid": grid}))
    assert report.passed
    rel = [r for r in report.records if r.name == "delta_rel_diag"][0]
    assert rel.passed and "equality=True" in rel.actual
    flagged = run_dimension(RunConfig("dimension", {"csq": "3/4", "t_grid": grid,
                                                    "analytic_flag": True}))
    dz = [r for r in flagged.records if r.name == "delta_Z"][0]
    assert dz.actual == "2" and dz.passed
    _report(7, "relative dimension 1 with equality; full dimension 2 with flag",
            started, 30)


def test_08_monte_carlo_agreement():
    started = time.monotonic()
    spec = EnsembleSpec(mu=DELTA_0, c=1.0, n=500, seed=20240817)
    for word, exact in (("ZZ*", 0.5), ("ZZ*ZZ*", 2 / 3), ("ZZ", 0.0)):
        est = estimate_star_moment(spec, word, 200)
        tol = 3 * est.stderr + 1.0 / spec.n
        assert abs(est.mean - exact) <= tol, (word, est.mean, exact, tol)
    _report(8, "Monte Carlo agreement at n=500, 200 replicates", started, 300)


def test_09_norm():
    started = time.monotonic()
    spec = EnsembleSpec(mu=DELTA_0, c=1.0, n=2000, seed=7)
    est = norm_estimate(spec, 2)
    assert abs(est.mean - SQRT_E) <= 0.05 * SQRT_E, est.mean
    _report(9, f"largest singular value {est.mean:.4f} within 5% of sqrt(e)",
            started, 300)


def test_10_cutout_scaling():
    started = time.monotonic()
    spec = EnsembleSpec(mu=DELTA_0, c=1.0, n=1024, seed=11)
    for k in (4, 16, 64):
        rep = cutout_residual(spec, k, 3)
        assert all(x <= 2 * rep.reference for x in rep.block_norms), (k, rep)
        assert all(x == 0.0 for x in rep.double_sum_max), k
    _report(10, "cut-out norms below 2 sqrt(e/k); double sum exactly 0", started, 300)


def test_11_eigenspace_machinery():
    started = time.monotonic()
    rng = np.random.default_rng(515)
    for _ in range(50):
        dim = int(rng.integers(6, 21))
        lams = [1.5, -2.0 + 1.0j, 0.25]
        mults = [int(rng.integers(1, 3)) for _ in lams]
        pencil = build_pencil(rng, dim, lams, mults)
        ok, rep = independence_check(pencil, lams)
        assert ok, rep
        lhs, rhs = eigenprojection_additivity(pencil, lams)
        assert abs(lhs - rhs) <= 1e-10
    for _ in range(100):
        p = random_subspace(rng, 16, int(rng.integers(1, 16)))
        q = random_subspace(rng, 16, int(rng.integers(1, 16)))
        lhs, rhs = kaplansky_check(p, q)
        assert abs(lhs - rhs) <= 1e-10
    _report(11, "50 pencils independent; 100 trace identities within 1e-10",
            started, 120)


def test_12_combinatorial_round_trip():
    started = time.monotonic()
    rng = np.random.default_rng(99)
    for case in range(100):
        order = int(rng.integers(1, 9))
        alphabet = ("a", "b") if order <= 5 else ("a",)
        values = {w: F(int(rng.integers(-30, 31)), int(rng.integers(1, 12)))
                  for w in all_words(alphabet, order) if w}
        m = MomentSequence(order, values)
        assert cumulants_to_moments(moments_to_cumulants(m)).values == m.values, case
    for n in range(1, 11):
        assert len(enumerate_nc_partitions(n)) == catalan(n)
        assert len(enumerate_nc_pairings(2 * n)) == catalan(n)
    _report(12, "100 transform round-trips exact; counts match Catalan", started, 120)


def test_13_determinism():
    started = time.monotonic()
    cfg = {"mu": "delta:0", "c": "1", "n": 64, "reps": 25,
           "words": ["ZZ*", "ZZ"], "seed": 321}
    a = run_moments(RunConfig("moments", dict(cfg)))
    b = run_moments(RunConfig("moments", dict(cfg)))
    assert a.to_json_bytes(drop_wallclock=True) == b.to_json_bytes(drop_wallclock=True)
    assert a.to_csv_text() == b.to_csv_text()
    v1 = run_verify(RunConfig("verify", {"suite": "fisher"}))
    v2 = run_verify(RunConfig("verify", {"suite": "fisher"}))
    assert v1.to_json_bytes(drop_wallclock=True) == v2.to_json_bytes(drop_wallclock=True)
    _report(13, "identical config and seed give byte-identical reports", started, 60)


def test_14_bound_suite():
    started = time.monotonic()
    report = run_verify(RunConfig("verify", {"suite": "bounds"}))
    assert report.passed, [r for r in report.records if not r.passed]
    # the limit display re-checked directly for the stated alpha values
    for alpha in (1.0, 10.0, 100.0):
        vals = [t * stam_bound(alpha, 1.0 / t) for t in (1e-2, 1e-4, 1e-6, 1e-8)]
        assert all(x > y for x, y in zip(vals, vals[1:])) and vals[-1] < 1e-6
    _report(14, "entropy upper bound and Stam inequality on every instance",
            started, 60)
