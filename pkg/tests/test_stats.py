import json
from math import comb

import numpy as np
import pytest
from scipy import stats

from ot_symmetry import seeding
from ot_symmetry.exceptions import SingularCovariance, TooFewObservations
from ot_symmetry.group import SymmetryGroup
from ot_symmetry.reference import ReferenceSet, build_reference
from ot_symmetry.signedrank import Decomposition, signed_rank_parts
from ot_symmetry.stats import (
    exact_null,
    exact_p_value,
    gwsr_from_sum,
    gwsr_statistic,
    hotelling_t2,
    null_sign_scalars,
    null_signed_rank_sums,
    run_test,
    sign_df,
    sign_statistic,
)
from test_group import dihedral4


def _decomp(group, signs, sr):
    sr = np.asarray(sr, dtype=float)
    n = len(sr)
    return Decomposition(sr, np.asarray(signs), np.abs(sr), sr, np.arange(n), group, 0.0)


def test_sign_statistic_examples():
    g = SymmetryGroup.central(2)
    T, q = sign_statistic(_decomp(g, [1, 1, -1, -1], np.ones((4, 2))))
    assert np.allclose(T, 0) and q == 0
    T, q = sign_statistic(_decomp(g, [1, 1, 1, 1], np.ones((4, 2))))
    assert np.allclose(T, 2 * np.eye(2)) and q == pytest.approx(4.0)


def test_sign_scalar_scalings():
    rng = np.random.default_rng(0)
    s = rng.choice([-1.0, 1.0], (9, 3))
    T, q = sign_statistic(_decomp(SymmetryGroup.sign_change(3), s, np.ones((9, 3))))
    assert q == pytest.approx(np.sum(s.sum(0) ** 2) / 9)
    Q = np.stack([np.linalg.qr(rng.standard_normal((2, 2)))[0] for _ in range(5)])
    T, q = sign_statistic(_decomp(SymmetryGroup.spherical(2), Q, np.ones((5, 2))))
    assert q == pytest.approx(2 * np.sum((Q.sum(0) / np.sqrt(5)) ** 2))


def test_df():
    assert sign_df("central", 3) == 1
    assert sign_df("sign", 3) == 3
    assert sign_df("spherical", 3) == 9
    assert sign_df("finite", 3) is None


def test_gwsr_examples():
    ref = build_reference(SymmetryGroup.central(2), "gaussian", 2, "halton")
    W, q = gwsr_statistic(_decomp(ref.group, [1, 1], [[1.0, 0.0], [0.0, 1.0]]), ref)
    assert np.allclose(W, [1 / np.sqrt(2)] * 2) and q == pytest.approx(1.0)
    W, q = gwsr_statistic(_decomp(ref.group, [1, 1], [[1.0, -2.0], [-1.0, 2.0]]), ref)
    assert q == 0


def test_gwsr_p1_is_linear_in_wilcoxon():
    rng = np.random.default_rng(1)
    n = 12
    ref = ReferenceSet.from_points((np.arange(1, n + 1) / n)[:, None], SymmetryGroup.central(1), erd="uniform")
    for _ in range(5):
        x = rng.standard_normal(n)
        r = run_test(x, ref, "gwsr", calibration="asymptotic", seed=0)
        wplus = np.sum(stats.rankdata(np.abs(x))[x > 0])
        signed_sum = 2 * wplus - n * (n + 1) / 2
        assert r.raw[0] == pytest.approx(signed_sum / n / np.sqrt(n))


def test_hotelling_examples():
    t2, p = hotelling_t2([1.0, 2.0, 3.0])
    assert t2 == pytest.approx(12.0)
    assert p == pytest.approx(stats.chi2.sf(12.0, 1))
    X = np.array([[1.0, 2.0], [-1.0, -2.0], [2.0, -1.0], [-2.0, 1.0]])
    assert hotelling_t2(X)[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(TooFewObservations):
        hotelling_t2(np.ones((2, 2)))
    with pytest.raises(SingularCovariance):
        hotelling_t2(np.column_stack([np.arange(5.0), 2 * np.arange(5.0)]))


def test_hotelling_affine_invariance():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((30, 3)) + 0.3
    A = rng.standard_normal((3, 3))
    assert hotelling_t2(X @ A.T)[0] == pytest.approx(hotelling_t2(X)[0], rel=1e-9)


def test_exact_null_n1():
    ref = build_reference(SymmetryGroup.central(2), "gaussian", 1, "halton")
    null = exact_null(ref, "gwsr", 500, 0)
    assert len(np.unique(np.round(null, 12))) <= 2
    with pytest.raises(ValueError):
        exact_null(ref, "gwsr", 50, 0)


def test_sign_null_matches_binomial():
    n, B = 10, 100_000
    null = null_sign_scalars(SymmetryGroup.central(2), n, B, np.random.default_rng(3))
    k = np.arange(n + 1)
    vals = (2 * k - n) ** 2 / n
    pmf = np.array([comb(n, j) for j in k]) / 2 ** n
    law = {}
    for v, w in zip(vals, pmf):
        law[v] = law.get(v, 0) + w
    emp = {v: np.mean(np.isclose(null, v)) for v in law}
    tv = 0.5 * sum(abs(emp[v] - law[v]) for v in law)
    assert tv <= 0.02


def test_exact_p_value_convention():
    null = np.sort(np.arange(99.0))
    assert exact_p_value(null, 200.0) == pytest.approx(1 / 100)
    assert exact_p_value(null, -1.0) == 1.0
    assert exact_p_value(null, 98.0) == pytest.approx(2 / 100)


def test_exact_p_value_super_uniform():
    n, B, reps = 20, 199, 10_000
    ref = build_reference(SymmetryGroup.central(2), "gaussian", n, "halton")
    null = exact_null(ref, "gwsr", B, 4)
    rng = np.random.default_rng(5)
    pv = np.empty(reps)
    for r in range(reps):
        _, sr = signed_rank_parts(rng.standard_normal((n, 2)), ref, rng)
        _, q = gwsr_from_sum(sr.sum(0), n, ref)
        pv[r] = exact_p_value(null, float(q))
    for a in (0.01, 0.05, 0.1):
        assert np.mean(pv <= a) <= a + 0.01


def test_null_clt_componentwise():
    ref = build_reference(SymmetryGroup.central(2), "gaussian", 2000, "halton")
    W = null_signed_rank_sums(ref, 10_000, np.random.default_rng(6)) / np.sqrt(2000)
    for j in range(2):
        assert stats.kstest(W[:, j], "norm").pvalue > 0.001


def test_finite_group_sign_test_exact_only():
    ref = build_reference(dihedral4(), "gaussian", 20, "halton")
    X = np.random.default_rng(7).standard_normal((20, 2))
    with pytest.raises(ValueError):
        run_test(X, ref, "sign", calibration="asymptotic", seed=0)
    r = run_test(X, ref, "sign", calibration="exact", seed=0, B=199)
    assert r.df is None and 0 < r.p_exact <= 1


@pytest.mark.parametrize("kind", ["central", "sign", "spherical"])
@pytest.mark.parametrize("test_kind", ["gwsr", "sign", "hotelling"])
def test_report_invariants(kind, test_kind):
    ref = build_reference(SymmetryGroup.from_name(kind, 2), "gaussian", 40, "halton")
    X = np.random.default_rng(8).standard_normal((40, 2)) + 0.3
    for cal in ("asymptotic", "exact"):
        r = run_test(X, ref, test_kind, 0.1, cal, B=199, seed=3)
        for pv in (r.p_asymptotic, r.p_exact):
            assert pv is None or 0 <= pv <= 1
        assert r.reject == (r.p_value <= 0.1)
        expect_df = 2 if test_kind != "sign" else sign_df(kind, 2)
        assert r.df == expect_df


def test_report_json_is_deterministic():
    ref = build_reference(SymmetryGroup.spherical(3), "gaussian", 30, "random", seed=2)
    X = np.random.default_rng(9).standard_normal((30, 3))
    a = run_test(X, ref, "sign", seed=11).to_json()
    b = run_test(X, ref, "sign", seed=11).to_json()
    assert a == b
    d = json.loads(a)
    for key in ("test_kind", "statistic", "raw", "alpha", "calibration", "p_asymptotic",
                "p_exact", "reject", "df", "n", "p", "group", "erd", "B", "seed"):
        assert key in d
    assert d["seed"] == 11 and d["B"] == 999


def test_seed_none_is_reported():
    ref = build_reference(SymmetryGroup.central(2), "gaussian", 10, "halton")
    r = run_test(np.random.default_rng(0).standard_normal((10, 2)), ref, calibration="asymptotic")
    assert isinstance(r.seed, int)


def test_precomputed_null_reused():
    ref = build_reference(SymmetryGroup.central(2), "gaussian", 25, "halton")
    X = np.random.default_rng(10).standard_normal((25, 2))
    null = exact_null(ref, "gwsr", 999, seeding.stream(4, seeding.NULL))
    assert run_test(X, ref, seed=4).p_exact == run_test(X, ref, seed=4, null=null).p_exact


def test_bad_arguments():
    ref = build_reference(SymmetryGroup.central(2), "gaussian", 10, "halton")
    X = np.zeros((10, 2))
    with pytest.raises(ValueError):
        run_test(X, ref, "median")
    with pytest.raises(ValueError):
        run_test(X, ref, calibration="bootstrap")
    with pytest.raises(ValueError):
        run_test(X, ref, alpha=1.5)
    with pytest.raises(ValueError):
        run_test(X, None, "gwsr")
