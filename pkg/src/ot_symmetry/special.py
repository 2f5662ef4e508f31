"""Normal and chi-square distribution functions.

Thin wrappers over :mod:`scipy.special` with argument checking, so the rest of
the package has one place to get quantiles from.
"""
import numpy as np
from scipy import special as _sp


def _check_open_unit(u, name="u"):
    u = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(u)) or np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError(f"{name} must lie strictly inside (0, 1)")
    return u


def _check_df(k):
    if np.any(np.asarray(k) < 1):
        raise ValueError("degrees of freedom must be >= 1")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def norm_cdf(x):
    """Standard normal CDF."""
    return _out(_sp.ndtr(np.asarray(x, dtype=float)))


def norm_ppf(u):
    """Standard normal quantile function."""
    return _out(_sp.ndtri(_check_open_unit(u)))


def abs_norm_ppf(u):
    """Quantile of |Z| for Z ~ N(0, 1), using F_|Z|(x) = 2 Phi(x) - 1."""
    u = _check_open_unit(u)
    return _out(_sp.ndtri(0.5 + 0.5 * u))


def chi2_cdf(x, k):
    """Chi-square CDF with ``k`` degrees of freedom (regularized lower incomplete gamma)."""
    _check_df(k)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be >= 0")
    return _out(_sp.gammainc(0.5 * np.asarray(k, dtype=float), 0.5 * x))


def chi2_sf(x, k):
    """Upper tail of the chi-square law; accurate where 1 - cdf would cancel."""
    _check_df(k)
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return _out(_sp.gammaincc(0.5 * np.asarray(k, dtype=float), 0.5 * x))


def chi2_ppf(alpha, k):
    """Chi-square quantile: the q with P(chi2_k <= q) = alpha."""
    _check_df(k)
    a = _check_open_unit(alpha, "alpha")
    return _out(2.0 * _sp.gammaincinv(0.5 * np.asarray(k, dtype=float), a))


def chi2_isf(alpha, k):
    """Upper critical value chi2_k(alpha): P(chi2_k >= q) = alpha."""
    _check_df(k)
    a = _check_open_unit(alpha, "alpha")
    return _out(2.0 * _sp.gammainccinv(0.5 * np.asarray(k, dtype=float), a))


def chi_ppf(u, k):
    """Quantile of the chi law (norm of a k-dimensional standard Gaussian)."""
    return _out(np.sqrt(np.asarray(chi2_ppf(u, k))))
