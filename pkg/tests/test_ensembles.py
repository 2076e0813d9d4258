"""Samplers, Monte Carlo estimators, and interchange formats.

Statistical assertions use fixed seeds and tolerances wide enough that a
pass is stable; exact-oracle comparisons use the pairing engine values.
"""

from fractions import Fraction as F

import numpy as np
import pytest

from dtlab.dgauss import T1, T1S, tau
from dtlab.ensembles import (DELTA_0, AtomicMeasure, EnsembleSpec,
                             MomentEstimate, PushforwardMeasure,
                             ROLE_DIAG, ROLE_UPPER1, cutout_residual,
                             estimate_star_moment, estimates_to_csv,
                             liberation_mc, load_matrix, norm_estimate,
                             parse_word, replicate_trace, sample_diagonal,
                             sample_dt, sample_ginibre_circular,
                             sample_strict_upper, save_matrix, stream)
from dtlab.errors import UsageError
from dtlab.pwpoly import PW_X

SPEC = EnsembleSpec(mu=DELTA_0, c=1.0, n=128, seed=42)


def test_word_parsing():
    assert parse_word("ZZ*") == (("Z", False), ("Z", True))
    assert parse_word("T1T2*D") == (("T1", False), ("T2", True), ("D", False))
    assert parse_word("") == ()
    with pytest.raises(UsageError):
        parse_word("Q")
    with pytest.raises(UsageError):
        parse_word("Z**")


def test_measure_validation():
    with pytest.raises(UsageError):
        AtomicMeasure(((0j, F(1, 2)),))            # weights must sum to 1
    with pytest.raises(UsageError):
        AtomicMeasure(((0j, F(-1)), (1 + 0j, F(2))))
    with pytest.raises(UsageError):
        EnsembleSpec(mu=DELTA_0, c=-1.0, n=4, seed=0)
    with pytest.raises(UsageError):
        EnsembleSpec(mu=DELTA_0, c=1.0, n=0, seed=0)
    with pytest.raises(UsageError):
        EnsembleSpec(mu=DELTA_0, c=1.0, n=4, seed=2 ** 64)


def test_stream_reproducibility_and_independence():
    a = stream(7, 0, ROLE_DIAG).random(4)
    b = stream(7, 0, ROLE_DIAG).random(4)
    assert np.array_equal(a, b)
    c = stream(7, 1, ROLE_DIAG).random(4)
    d = stream(7, 0, ROLE_UPPER1).random(4)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)


def test_diagonal_sampler():
    atoms = AtomicMeasure(((2 + 0j, F(1)),))
    d = sample_diagonal(atoms, 10, stream(0, 0, ROLE_DIAG))
    assert np.all(d == 2)
    half = AtomicMeasure(((0j, F(1, 2)), (1 + 0j, F(1, 2))))
    vals = sample_diagonal(half, 4000, stream(0, 0, ROLE_DIAG))
    se = 0.5 / np.sqrt(4000)
    assert abs(vals.real.mean() - 0.5) <= 4 * se
    # pushforward of x: k-th moments 1/(k+1)
    push = PushforwardMeasure(PW_X)
    vals = sample_diagonal(push, 8000, stream(1, 0, ROLE_DIAG))
    for k in (1, 2, 3):
        got = (vals.real ** k).mean()
        assert abs(got - 1 / (k + 1)) < 0.03, (k, got)


def test_strict_upper_structure_and_variance():
    t = sample_strict_upper(8, stream(3, 0, ROLE_UPPER1))
    assert np.all(t[np.tril_indices(8)] == 0)
    n = 16
    draws = np.array([sample_strict_upper(n, stream(5, r, ROLE_UPPER1))[0, 1]
                      for r in range(4000)])
    second = (np.abs(draws) ** 2).mean()
    se = (np.abs(draws) ** 2).std(ddof=1) / np.sqrt(4000)
    assert abs(second - 1 / n) <= 3.5 * se
    # trace of T T*: mean (n-1)/(2n)
    est = estimate_star_moment(EnsembleSpec(mu=DELTA_0, c=1.0, n=64, seed=1),
                               "T1T1*", 100)
    assert abs(est.mean - 63 / 128) <= 4 * est.stderr


def test_sample_dt_composition():
    spec = EnsembleSpec(mu=AtomicMeasure(((3 + 0j, F(1)),)), c=0.0, n=6, seed=9)
    z = sample_dt(spec, 0)
    assert np.array_equal(z, 3 * np.eye(6))
    spec2 = EnsembleSpec(mu=DELTA_0, c=2.0, n=32, seed=9)
    est = estimate_star_moment(spec2, "ZZ*", 200)
    expected = 4 * 31 / 64  # c^2 (n-1)/(2n)
    assert abs(est.mean - expected) <= 4 * est.stderr


def test_ginibre_moments():
    rng = stream(11, 0, 3)
    y = sample_ginibre_circular(600, rng)
    assert abs(np.trace(y @ y.conj().T).real / 600 - 1) < 0.05
    assert abs(np.trace(y @ y).real / 600) < 0.05
    yy = y @ y.conj().T
    assert abs(np.trace(yy @ yy).real / 600 - 2) < 0.15


def test_estimates_deterministic_and_match_engine():
    est1 = estimate_star_moment(SPEC, "ZZ*", 60)
    est2 = estimate_star_moment(SPEC, "ZZ*", 60)
    assert est1 == est2
    exact = tau(T1 * T1S)
    assert abs(est1.mean - float(exact)) <= 3 * est1.stderr + 1.0 / SPEC.n
    est = estimate_star_moment(SPEC, "ZZ*ZZ*", 60)
    assert abs(est.mean - 2 / 3) <= 3 * est.stderr + 1.0 / SPEC.n
    with pytest.raises(UsageError):
        estimate_star_moment(SPEC, "ZZ*", 1)


def test_threaded_replicates_match_sequential(monkeypatch):
    seq = estimate_star_moment(SPEC, "ZZ*", 24)
    monkeypatch.setenv("DTLAB_THREADS", "4")
    par = estimate_star_moment(SPEC, "ZZ*", 24)
    assert par == seq


def test_hermiticity_diagnostic():
    for word in ("ZZ*Z", "T1T2T2*", "Z"):
        adjoint_word = "".join(
            (l + ("" if s else "*")) for l, s in reversed(parse_word(word)))
        a = replicate_trace(SPEC, word, 5)
        b = replicate_trace(SPEC, adjoint_word, 5)
        assert abs(a - np.conj(b)) < 1e-12


def test_norm_estimate():
    spec = EnsembleSpec(mu=AtomicMeasure(((2 + 0j, F(1)),)), c=0.0, n=24, seed=3)
    est = norm_estimate(spec, 2)
    assert abs(est.mean - 2.0) < 1e-12
    # homogeneity in c for the centered model
    n1 = norm_estimate(EnsembleSpec(mu=DELTA_0, c=1.0, n=128, seed=5), 4)
    n2 = norm_estimate(EnsembleSpec(mu=DELTA_0, c=2.0, n=128, seed=5), 4)
    assert abs(n2.mean - 2 * n1.mean) < 1e-9


def test_cutout_structure():
    spec = EnsembleSpec(mu=DELTA_0, c=1.0, n=128, seed=2)
    rep = cutout_residual(spec, 8, 3)
    assert all(x == 0.0 for x in rep.double_sum_max)
    assert all(x <= 2 * rep.reference for x in rep.block_norms)
    full = cutout_residual(spec, 128, 2)  # 1x1 blocks: diagonal of T is zero
    assert all(x == 0.0 for x in full.block_norms)
    with pytest.raises(UsageError):
        cutout_residual(spec, 7, 2)


def test_cutout_nontrivial_measure():
    mu = AtomicMeasure(((0j, F(1, 2)), (1 + 0j, F(1, 2))))
    rep = cutout_residual(EnsembleSpec(mu=mu, c=1.0, n=64, seed=4), 4, 2)
    assert all(x == 0.0 for x in rep.double_sum_max)  # structural, any D


def test_liberation_mc():
    spec = EnsembleSpec(mu=DELTA_0, c=1.0, n=0 + 64, seed=13)
    recs = liberation_mc(spec, 0.25, ["", "S", "SS*"], [48, 96], 24)
    for r in recs:
        if r.word == "1":
            # trace of a commutator: the real part vanishes identically
            assert r.mean_re == 0.0 and r.se_re == 0.0
            assert abs(r.mean_im) < 1e-12
        else:
            assert abs(r.mean_re) <= 4 * r.se_re + 0.05
            assert abs(r.mean_im) <= 4 * r.se_im + 0.05
    with pytest.raises(UsageError):
        liberation_mc(spec, -1.0, ["S"], [16], 4)
    with pytest.raises(UsageError):
        liberation_mc(spec, 0.25, ["Z"], [16], 4)


def test_matrix_io_round_trip(tmp_path):
    m = sample_strict_upper(7, stream(1, 0, ROLE_UPPER1))
    path = tmp_path / "m.bin"
    save_matrix(path, m)
    assert np.array_equal(load_matrix(path), m)
    raw = path.read_bytes()
    assert raw.startswith(b"dtlab-matrix 1 7 7 ")
    with pytest.raises(UsageError):
        save_matrix(tmp_path / "v.bin", np.zeros(3))


def test_estimates_csv(tmp_path):
    est = MomentEstimate(word="ZZ*", mean=0.5, stderr=0.01, reps=10, n=8, seed=1)
    path = tmp_path / "est.csv"
    estimates_to_csv(path, [est])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "word,mean,stderr,reps,n,seed"
    assert lines[1].startswith("ZZ*,0.5,0.01,10,8,1")
