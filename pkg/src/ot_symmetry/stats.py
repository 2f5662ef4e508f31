"""Generalized sign test, generalized Wilcoxon signed-rank (GWSR) test and Hotelling's T^2.

Each OT test can be calibrated two ways. The asymptotic route uses chi-square
limits. The exact route uses a Monte-Carlo null: given the reference set, the
statistic depends only on i.i.d. Haar signs, so its null law can be sampled
without touching the data.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as _st

from . import seeding, special
from .exceptions import SingularCovariance, SingularERD, TooFewObservations
from .group import CENTRAL, FINITE, SIGN, SPHERICAL, haar_orthogonal, sign_matrices
from .reference import erd_covariance
from .signedrank import decompose

SIGN_TEST = "sign"
GWSR = "gwsr"
HOTELLING = "hotelling"
TEST_KINDS = (SIGN_TEST, GWSR, HOTELLING)

ASYMPTOTIC = "asymptotic"
EXACT = "exact"

#: Relative slack when counting null draws at least as large as the observed value.
TIE_SLACK = 1e-12
_CHUNK_ELEMS = 4_000_000


@dataclass
class TestReport:
    """Outcome of one test of symmetry.

    ``statistic`` is the calibrated scalar and ``raw`` the underlying vector
    or matrix. ``p_exact`` comes from the Monte-Carlo null with ``B`` draws
    for the OT tests and from the F law for Hotelling's test.
    """

    __test__ = False

    test_kind: str
    statistic: float
    raw: list
    alpha: float
    calibration: str
    p_asymptotic: float | None
    p_exact: float | None
    reject: bool
    df: int | None
    n: int
    p: int
    group: str | None = None
    erd: str | None = None
    score: str | None = None
    B: int | None = None
    seed: int | None = None
    reference: dict = field(default_factory=dict)

    @property
    def p_value(self):
        return self.p_exact if self.calibration == EXACT else self.p_asymptotic

    def to_dict(self, digits=6):
        return _round(asdict(self), digits)

    def to_json(self, digits=6, **extra):
        d = self.to_dict(digits)
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True)


def _round(obj, digits):
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}") if np.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _round(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, digits) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item(), digits)
    return obj


# --------------------------------------------------------------------------
# Statistics


def sign_scalar(T, kind):
    """Calibrated scalar of the sign statistic matrix (or a stack of them)."""
    p = T.shape[-1]
    fro = np.sum(T ** 2, axis=(-2, -1))
    if kind == CENTRAL:
        return fro / p
    if kind == SPHERICAL:
        return p * fro
    return fro


def sign_df(kind, p):
    """Chi-square degrees of freedom of the sign test; ``None`` for finite groups."""
    return {CENTRAL: 1, SIGN: p, SPHERICAL: p * p}.get(kind)


def sign_statistic(decomp):
    """T_n = n^{-1/2} sum_i S_n(X_i) and its calibrated scalar.

    The scalar is ||T||_F^2 / p for central symmetry, ||T||_F^2 for sign
    symmetry and finite groups, and p ||T||_F^2 for O(p).

    Returns
    -------
    T : (p, p) ndarray
    scalar : float
    """
    kind = decomp.group.kind
    n, p = decomp.n, decomp.p
    s = decomp.signs
    if kind == CENTRAL:
        T = s.sum() * np.eye(p)
    elif kind == SIGN:
        T = np.diag(s.sum(axis=0))
    else:
        T = sign_matrices(kind, s, p).sum(axis=0)
    T = T / np.sqrt(n)
    return T, float(sign_scalar(T, kind))


def _erd_inverse(ref):
    sig = erd_covariance(ref)
    if np.linalg.cond(sig) > 1e12:
        raise SingularERD("ERD covariance is singular")
    return np.linalg.inv(sig)


def gwsr_from_sum(total, n, ref, sig_inv=None):
    """W_n and W_n^T Sigma_ERD^{-1} W_n from a signed-rank sum (or a stack of sums)."""
    W = np.asarray(total, dtype=float) / np.sqrt(n)
    if not ref.score.is_identity:
        W = W @ ref.score.matrix.T
    if sig_inv is None:
        sig_inv = _erd_inverse(ref)
    q = np.einsum("...i,ij,...j->...", W, sig_inv, W)
    return W, q


def gwsr_statistic(decomp, ref):
    """GWSR vector W_n = n^{-1/2} J(sum_i S_n(X_i) R_n(X_i)) and its chi-square scalar.

    With the identity score J is the identity; the Gaussian plug-in score
    multiplies the signed-rank sum by Sigma_hat^{-1/2}.
    """
    W, q = gwsr_from_sum(decomp.signed_ranks.sum(axis=0), decomp.n, ref)
    return W, float(q)


def hotelling_t2(data):
    """Hotelling's T^2 = n xbar^T S^{-1} xbar with its chi-square(p) p-value.

    Raises
    ------
    TooFewObservations
        If n <= p.
    SingularCovariance
        If the sample covariance has condition number >= 1e12.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if n <= p:
        raise TooFewObservations(f"Hotelling's test needs n > p (n={n}, p={p})")
    xbar = X.mean(axis=0)
    S = np.atleast_2d(np.cov(X, rowvar=False))
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) >= 1e12:
        raise SingularCovariance("sample covariance is singular")
    t2 = float(n * xbar @ np.linalg.solve(S, xbar))
    return t2, float(special.chi2_sf(t2, p))


def hotelling_f_pvalue(t2, n, p):
    """Exact p-value of T^2 for Gaussian data: T^2 (n-p) / (p (n-1)) ~ F(p, n-p)."""
    return float(_st.f.sf(t2 * (n - p) / (p * (n - 1)), p, n - p))


# --------------------------------------------------------------------------
# Monte-Carlo null


def _chunks(B, per_draw):
    step = max(1, _CHUNK_ELEMS // max(1, per_draw))
    for start in range(0, B, step):
        yield min(step, B - start)


def null_signed_rank_sums(ref, B, rng):
    """B draws of sum_i S_i h_i with S_i i.i.d. Haar, shape (B, p)."""
    kind = ref.group.kind
    H = ref.points
    n, p = H.shape
    out = []
    if kind == SPHERICAL:
        r = np.linalg.norm(H, axis=1)
    elif kind == FINITE:
        QH = np.einsum("kpq,iq->kip", ref.group.matrices, H)
    for c in _chunks(B, n * p):
        if kind == CENTRAL:
            out.append(rng.choice(np.array([-1.0, 1.0]), size=(c, n)) @ H)
        elif kind == SIGN:
            s = rng.choice(np.array([-1.0, 1.0]), size=(c, n, p))
            out.append(np.einsum("bip,ip->bp", s, H))
        elif kind == SPHERICAL:
            # S h with S Haar on O(p) is |h| times a uniform unit vector
            g = rng.standard_normal((c, n, p))
            g /= np.linalg.norm(g, axis=2, keepdims=True)
            out.append(np.einsum("bip,i->bp", g, r))
        else:
            idx = rng.integers(0, len(QH), size=(c, n))
            out.append(QH[idx, np.arange(n)].sum(axis=1))
    return np.concatenate(out, axis=0)


def null_sign_scalars(group, n, B, rng):
    """B draws of the calibrated sign-test scalar under H0."""
    kind = group.kind
    p = group.dim
    if kind == CENTRAL:
        tot = 2.0 * rng.binomial(n, 0.5, size=B) - n
        return tot ** 2 / n
    if kind == SIGN:
        tot = 2.0 * rng.binomial(n, 0.5, size=(B, p)) - n
        return np.sum(tot ** 2, axis=1) / n
    if kind == FINITE:
        K = len(group.matrices)
        counts = rng.multinomial(n, np.full(K, 1.0 / K), size=B).astype(float)
        T = np.einsum("bk,kpq->bpq", counts, group.matrices) / np.sqrt(n)
        return sign_scalar(T, kind)
    out = []
    for c in _chunks(B, n * p * p):
        Q = haar_orthogonal(p, c * n, rng).reshape(c, n, p, p)
        out.append(sign_scalar(Q.sum(axis=1) / np.sqrt(n), kind))
    return np.concatenate(out)


def exact_null(ref, test_kind, B=999, rng=None):
    """Sorted Monte-Carlo null distribution of a calibrated statistic.

    Parameters
    ----------
    ref : ReferenceSet
    test_kind : {"gwsr", "sign"}
    B : int
        Number of null draws, at least 100.
    rng : int or Generator, optional

    Returns
    -------
    ndarray of shape (B,)
    """
    if int(B) < 100:
        raise ValueError("B must be at least 100")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if test_kind == GWSR:
        _, q = gwsr_from_sum(null_signed_rank_sums(ref, int(B), rng), ref.n, ref)
    elif test_kind == SIGN_TEST:
        q = null_sign_scalars(ref.group, ref.n, int(B), rng)
    else:
        raise ValueError(f"no Monte-Carlo null for test kind {test_kind!r}")
    return np.sort(q)


def exact_p_value(null_sorted, observed):
    """(1 + #{null >= observed}) / (B + 1), with a tiny relative slack for rounding."""
    null_sorted = np.asarray(null_sorted)
    thr = observed - TIE_SLACK * (1.0 + abs(observed))
    count = len(null_sorted) - np.searchsorted(null_sorted, thr, side="left")
    return float((1 + count) / (len(null_sorted) + 1))


# --------------------------------------------------------------------------
# Assembly


def run_test(data, ref=None, test_kind=GWSR, alpha=0.05, calibration=EXACT, B=999,
             seed=None, null=None):
    """Decompose, compute the statistic, calibrate and report.

    Parameters
    ----------
    data : (n, p) array_like
    ref : ReferenceSet, optional
        Needed for the OT tests; ignored by Hotelling's test.
    test_kind : {"gwsr", "sign", "hotelling"}
    alpha : float
    calibration : {"exact", "asymptotic"}
    B : int
        Monte-Carlo size for exact calibration.
    seed : int, optional
        Master seed; tie-breaking and the null use separate derived streams.
    null : ndarray, optional
        A precomputed sorted null (it depends only on the reference), reused
        instead of drawing a new one.

    Returns
    -------
    TestReport
    """
    if test_kind not in TEST_KINDS:
        raise ValueError(f"unknown test kind {test_kind!r}")
    if calibration not in (ASYMPTOTIC, EXACT):
        raise ValueError(f"unknown calibration {calibration!r}")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    seed = seeding.resolve_seed(seed)
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if test_kind == HOTELLING:
        t2, p_asym = hotelling_t2(X)
        p_ex = hotelling_f_pvalue(t2, n, p) if calibration == EXACT else None
        chosen = p_ex if calibration == EXACT else p_asym
        return TestReport(HOTELLING, t2, [float(v) for v in X.mean(axis=0)], alpha, calibration,
                          p_asym, p_ex, bool(chosen <= alpha), p, n, p, seed=seed)
    if ref is None:
        raise ValueError("the OT tests need a reference set")
    kind = ref.group.kind
    dec = decompose(X, ref, seeding.stream(seed, seeding.SIGNS))
    if test_kind == GWSR:
        raw, stat = gwsr_statistic(dec, ref)
        df = p
        raw_out = raw.tolist()
    else:
        raw, stat = sign_statistic(dec)
        df = sign_df(kind, p)
        raw_out = raw.tolist()
    p_asym = float(special.chi2_sf(stat, df)) if df is not None else None
    p_ex = None
    used_B = None
    if calibration == EXACT:
        if null is None:
            null = exact_null(ref, test_kind, B, seeding.stream(seed, seeding.NULL))
        p_ex = exact_p_value(null, stat)
        used_B = len(null)
    elif p_asym is None:
        raise ValueError("finite groups support exact calibration only")
    chosen = p_ex if calibration == EXACT else p_asym
    meta = ref.metadata()
    return TestReport(test_kind, stat, raw_out, alpha, calibration, p_asym, p_ex,
                      bool(chosen <= alpha), df, n, p, kind, ref.erd, ref.score.kind,
                      used_B, seed, meta)
