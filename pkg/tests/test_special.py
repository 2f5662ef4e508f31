"""Distribution functions checked against independent mpmath evaluations."""
import mpmath as mp
import numpy as np
import pytest

from ot_symmetry import special

mp.mp.dps = 40


def mp_norm_ppf(u):
    return float(mp.sqrt(2) * mp.erfinv(2 * mp.mpf(u) - 1))


def mp_chi2_cdf(x, k):
    return float(mp.gammainc(mp.mpf(k) / 2, 0, mp.mpf(x) / 2, regularized=True))


def bisect(f, target, lo, hi, it=200):
    for _ in range(it):
        mid = (lo + hi) / 2
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def test_reference_values():
    assert special.norm_ppf(0.975) == pytest.approx(1.959964, abs=1e-6)
    assert special.chi2_ppf(0.95, 1) == pytest.approx(3.841459, abs=1e-6)
    assert special.chi2_ppf(0.95, 2) == pytest.approx(-2 * np.log(0.05), abs=1e-9)
    assert special.chi2_isf(0.05, 2) == pytest.approx(-2 * np.log(0.05), abs=1e-9)


@pytest.mark.parametrize("u", [1e-12, 1e-6, 0.01, 0.2, 1 / 3, 0.5, 0.7, 0.975, 1 - 1e-9])
def test_norm_ppf_against_mpmath(u):
    assert special.norm_ppf(u) == pytest.approx(mp_norm_ppf(u), abs=1e-9)


def test_norm_roundtrip_and_monotone():
    u = np.linspace(1e-6, 1 - 1e-6, 10_000)
    z = special.norm_ppf(u)
    assert np.all(np.diff(z) > 0)
    assert np.abs(special.norm_cdf(z) - u).max() <= 1e-8


@pytest.mark.parametrize("k", [1, 2, 3, 4, 10, 50])
@pytest.mark.parametrize("x", [0.01, 0.5, 2.0, 7.5, 30.0, 80.0])
def test_chi2_cdf_against_mpmath(x, k):
    ref = mp_chi2_cdf(x, k)
    assert special.chi2_cdf(x, k) == pytest.approx(ref, rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("k", [1, 2, 4, 50])
@pytest.mark.parametrize("a", [0.01, 0.05, 0.5, 0.95, 0.999])
def test_chi2_quantile_inverts_cdf(a, k):
    q = special.chi2_ppf(a, k)
    assert abs(mp_chi2_cdf(q, k) - a) <= 1e-10
    oracle = bisect(lambda t: mp_chi2_cdf(t, k), a, 0.0, 500.0)
    assert q == pytest.approx(oracle, rel=1e-9)


def test_chi_quantile_median_two_dims():
    assert special.chi_ppf(0.5, 2) == pytest.approx(np.sqrt(2 * np.log(2)), abs=1e-12)


def test_abs_normal_quantile():
    assert special.abs_norm_ppf(0.5) == pytest.approx(0.674489750196, abs=1e-10)


def test_domain_errors():
    for bad in (0.0, 1.0, -0.1, np.nan):
        with pytest.raises(ValueError):
            special.norm_ppf(bad)
    with pytest.raises(ValueError):
        special.chi2_cdf(-1.0, 2)
    with pytest.raises(ValueError):
        special.chi2_ppf(0.5, 0)
