"""Reference sets (the fixed rank vectors h_1..h_n), score functions and ERD covariances.

A reference set lives in a fundamental domain of the group and contains no
two points on the same orbit. Points come from one of three effective
reference distributions (ERDs), the law of S J(H) with S Haar on the group:

- ``gaussian``: N(0, I_p)
- ``uniform``: uniform on the cube [-1, 1]^p (not allowed for O(p))
- ``spherical-uniform``: uniform direction times a Uniform(0, 1) radius

and are either drawn at random once and frozen (``random``) or obtained by
transforming the first n Halton points (``halton``).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from . import seeding, special
from .exceptions import DimensionMismatch, IncompatibleERD, InvalidReference, NotSPD
from .group import CENTRAL, FINITE, SIGN, SPHERICAL, SymmetryGroup

GAUSSIAN = "gaussian"
UNIFORM = "uniform"
SPHERICAL_UNIFORM = "spherical-uniform"
ERDS = (GAUSSIAN, UNIFORM, SPHERICAL_UNIFORM)

RANDOM = "random"
HALTON = "halton"
CONSTRUCTIONS = (RANDOM, HALTON)

ORBIT_TOL = 1e-9


def first_primes(k):
    """The first ``k`` primes."""
    out = []
    c = 2
    while len(out) < k:
        if all(c % q for q in out if q * q <= c):
            out.append(c)
        c += 1
    return out


def _is_prime(b):
    return b >= 2 and all(b % q for q in range(2, int(b ** 0.5) + 1))


def radical_inverse(index, base):
    """Vectorized van der Corput radical inverse of integer ``index`` in ``base``."""
    i = np.asarray(index, dtype=np.int64).copy()
    out = np.zeros(i.shape)
    f = 1.0 / base
    while np.any(i > 0):
        out += f * (i % base)
        i //= base
        f /= base
    return out


def halton(index, base):
    """Radical inverse of ``index`` (>= 1) in the prime ``base``; a number in (0, 1)."""
    if int(index) < 1:
        raise ValueError("Halton index must be >= 1")
    if not _is_prime(int(base)):
        raise ValueError("Halton base must be prime")
    return float(radical_inverse(int(index), int(base)))


def halton_sequence(n, d, start=1):
    """Points ``start .. start+n-1`` of the d-dimensional Halton sequence, shape (n, d)."""
    idx = np.arange(start, start + n)
    return np.column_stack([radical_inverse(idx, b) for b in first_primes(d)]) if d else np.empty((n, 0))


# --------------------------------------------------------------------------
# Score functions


@dataclass(frozen=True, eq=False)
class ScoreFunction:
    """Score J applied to ranks: the identity or the linear map x -> M x.

    ``matrix`` is M = Sigma_hat^{-1/2} for the Gaussian plug-in score.
    """

    kind: str = "identity"
    matrix: np.ndarray | None = None

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def gaussian_plugin(cls, sigma_hat):
        """Score from a covariance estimate: M = Sigma_hat^{-1/2}."""
        return cls("gaussian-plugin", inverse_sqrt_spd(sigma_hat))

    @classmethod
    def from_data(cls, X):
        """Plug-in score from the sample covariance of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[0] < 2:
            raise NotSPD("need at least two observations for a covariance estimate")
        return cls.gaussian_plugin(np.atleast_2d(np.cov(X, rowvar=False)))

    @property
    def is_identity(self):
        return self.kind == "identity"

    def apply(self, Y):
        """J(y) row-wise."""
        Y = np.asarray(Y, dtype=float)
        return Y if self.is_identity else Y @ self.matrix.T

    def to_dict(self):
        d = {"kind": self.kind}
        if not self.is_identity:
            d["matrix"] = self.matrix.tolist()
        return d


def inverse_sqrt_spd(sigma, tol=1e-8):
    """Symmetric inverse square root of an SPD matrix via eigendecomposition."""
    s = np.atleast_2d(np.asarray(sigma, dtype=float))
    if s.shape[0] != s.shape[1] or not np.all(np.isfinite(s)):
        raise NotSPD("matrix must be square and finite")
    if np.abs(s - s.T).max() > tol * max(1.0, np.abs(s).max()):
        raise NotSPD("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (s + s.T))
    if w.min() <= tol * max(1.0, w.max()):
        raise NotSPD("matrix is not positive definite")
    return (V / np.sqrt(w)) @ V.T


# --------------------------------------------------------------------------
# Reference sets


@dataclass(frozen=True, eq=False)
class ReferenceSet:
    """Fixed reference points together with the group, ERD and score they belong to."""

    points: np.ndarray
    group: SymmetryGroup
    erd: str = GAUSSIAN
    score: ScoreFunction = field(default_factory=ScoreFunction.identity)
    construction: str = HALTON
    seed: int | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] != self.group.dim:
            raise DimensionMismatch("reference points must be (n, p) with p = group.dim")
        if self.erd not in ERDS:
            raise IncompatibleERD(f"unknown ERD {self.erd!r}")
        check_erd(self.group, self.erd)
        validate_points(self.group, pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points, group, erd=GAUSSIAN, score=None, construction="custom", seed=None):
        return cls(points, group, erd, score or ScoreFunction.identity(), construction, seed)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def p(self):
        return self.points.shape[1]

    def with_score(self, score):
        return replace(self, score=score)

    def metadata(self):
        return {
            "group": self.group.kind,
            "p": self.p,
            "n": self.n,
            "erd": self.erd,
            "construction": self.construction,
            "seed": self.seed,
            "score": self.score.kind,
        }

    def to_csv(self, path=None):
        """Write the points with a metadata comment line and header ``h1..hp``.

        Values are written with full round-trip precision. Returns the text
        when ``path`` is None.
        """
        buf = io.StringIO()
        meta = " ".join(f"{k}={v}" for k, v in self.metadata().items() if k != "score")
        buf.write(f"# ot-symmetry reference: {meta}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"h{j + 1}" for j in range(self.p)])
        for row in self.points:
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path, group=None, erd=None):
        """Read a file written by :meth:`to_csv`.

        ``group`` and ``erd`` override the metadata line; a finite group must
        always be passed explicitly since its matrices are not stored.
        """
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
        meta = {}
        if lines and lines[0].startswith("#"):
            body = lines[0].split(":", 1)[1] if ":" in lines[0] else ""
            meta = dict(tok.split("=", 1) for tok in body.split() if "=" in tok)
            lines = lines[1:]
        rows = list(csv.reader(lines))
        if rows and rows[0] and rows[0][0].strip().lower().startswith("h"):
            rows = rows[1:]
        try:
            pts = np.array([[float(v) for v in r] for r in rows if r], dtype=float)
        except ValueError as exc:
            raise InvalidReference(f"non-numeric reference entry: {exc}") from None
        if pts.ndim != 2 or pts.size == 0:
            raise InvalidReference("reference file holds no points")
        if group is None:
            kind = meta.get("group")
            if kind not in (CENTRAL, SIGN, SPHERICAL):
                raise InvalidReference("reference file does not name a built-in group; pass group=")
            group = SymmetryGroup.from_name(kind, pts.shape[1])
        seed = meta.get("seed")
        return cls(
            pts,
            group,
            erd or meta.get("erd", GAUSSIAN),
            ScoreFunction.identity(),
            meta.get("construction", "custom"),
            None if seed in (None, "None") else int(seed),
        )


def check_erd(group, erd):
    if erd not in ERDS:
        raise IncompatibleERD(f"unknown ERD {erd!r}; choose from {ERDS}")
    if erd != UNIFORM:
        return
    if group.kind == SPHERICAL:
        raise IncompatibleERD("the uniform ERD is not invariant under O(p)")
    if group.kind == FINITE:
        m = group.matrices
        signed_perm = np.all(np.isclose(np.abs(m), 0) | np.isclose(np.abs(m), 1), axis=(1, 2))
        if not signed_perm.all():
            raise IncompatibleERD("the uniform ERD needs a group of signed permutation matrices")


def _fold_vector(p, seed=20240531):
    """A fixed generic direction used to pick a representative per finite-group orbit."""
    a = np.random.default_rng(seed).standard_normal(p)
    return a / np.linalg.norm(a)


def fold_finite(group, X):
    """Map each row to the orbit point Qx maximizing <Qx, a> (a Dirichlet-type domain)."""
    a = _fold_vector(group.dim)
    QX = np.einsum("kpq,iq->ikp", group.matrices, X)
    best = np.argmax(QX @ a, axis=1)
    return QX[np.arange(len(X)), best]


def canonical_points(group, H):
    """One representative per orbit so that distinct orbits map to distinct points."""
    if group.kind == CENTRAL:
        lead = H[np.arange(len(H)), np.argmax(np.abs(H) > ORBIT_TOL, axis=1)]
        return H * np.where(lead < 0, -1.0, 1.0)[:, None]
    if group.kind == SIGN:
        return np.abs(H)
    if group.kind == SPHERICAL:
        return np.linalg.norm(H, axis=1)[:, None]
    return fold_finite(group, H)


def in_domain(group, H):
    """Boolean mask of rows lying in the package's fundamental domain."""
    if group.kind == CENTRAL:
        return H[:, 0] > 0
    if group.kind == SIGN:
        return np.all(H > 0, axis=1)
    if group.kind == SPHERICAL:
        return (H[:, 0] > 0) & np.all(H[:, 1:] == 0, axis=1)
    return np.all(np.abs(fold_finite(group, H) - H) <= 1e-9 * (1 + np.abs(H)), axis=1)


def validate_points(group, H):
    """Raise :class:`InvalidReference` unless H is in the domain and orbit-distinct."""
    if not np.all(np.isfinite(H)):
        raise InvalidReference("reference points must be finite")
    bad = np.flatnonzero(~in_domain(group, H))
    if bad.size:
        raise InvalidReference(f"reference point {int(bad[0])} lies outside the fundamental domain")
    if len(H) < 2:
        return
    C = canonical_points(group, H)
    if group.kind == FINITE:
        # folding rounds, so near-coincident representatives count as one orbit
        pairs = sorted(cKDTree(C).query_pairs(ORBIT_TOL))
    else:
        _, first, counts = np.unique(C, axis=0, return_index=True, return_counts=True)
        dup = first[counts > 1]
        pairs = [(int(k), int(np.flatnonzero((C == C[k]).all(axis=1))[1])) for k in dup]
    if pairs:
        i, j = sorted(pairs[0])
        raise InvalidReference(f"reference points {i} and {j} lie on the same orbit")


def _uniforms(n, d, construction, rng):
    if construction == HALTON:
        return halton_sequence(n, d)
    if construction != RANDOM:
        raise ValueError(f"unknown construction {construction!r}")
    u = rng.random((n, d))
    # keep away from the closed endpoints so quantile transforms stay finite
    return np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)


def _direction(g):
    nrm = np.linalg.norm(g, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return g / nrm


def _erd_points(erd, n, p, construction, rng):
    """Draws from the full ERD law (before folding), shape (n, p)."""
    if erd == GAUSSIAN:
        return special.norm_ppf(_uniforms(n, p, construction, rng))
    if erd == UNIFORM:
        return 2.0 * _uniforms(n, p, construction, rng) - 1.0
    u = _uniforms(n, p + 1, construction, rng)
    return u[:, :1] * _direction(special.norm_ppf(u[:, 1:]))


def _distinct_folded(group, erd, n, construction, rng):
    """First n folded ERD draws that lie on pairwise different orbits.

    Transformed Halton points come in pairs related by x -> -x (and other
    signed permutations), which collapse onto one orbit after folding; the
    later point of such a pair is skipped. Random draws never collide.
    """
    m = n
    while True:
        F = fold_finite(group, _erd_points(erd, m, group.dim, construction, rng))
        keep = np.ones(m, dtype=bool)
        for i, j in cKDTree(F).query_pairs(ORBIT_TOL):
            keep[max(i, j)] = False
        F = F[keep]
        if len(F) >= n:
            return F[:n]
        m = 2 * m + 16


def build_reference(group, erd=GAUSSIAN, n=100, construction=HALTON, seed=None, score=None):
    """Construct a validated :class:`ReferenceSet` of ``n`` points.

    Parameters
    ----------
    group : SymmetryGroup
    erd : {"gaussian", "uniform", "spherical-uniform"}
    n : int
    construction : {"halton", "random"}
        ``halton`` is deterministic and ignores ``seed``.
    seed : int or Generator, optional
        Source for the random construction. An integer seed selects the
        reference sub-stream of that master seed and is stored on the result.
    score : ScoreFunction, optional

    Returns
    -------
    ReferenceSet
    """
    if int(n) < 1:
        raise ValueError("reference size must be >= 1")
    n = int(n)
    check_erd(group, erd)
    if construction not in CONSTRUCTIONS:
        raise ValueError(f"unknown construction {construction!r}")
    if isinstance(seed, np.random.Generator):
        rng = seed
    elif isinstance(seed, (int, np.integer)):
        rng = seeding.stream(int(seed), seeding.REFERENCE)
    else:
        rng = np.random.default_rng(seed)
    p = group.dim
    kind = group.kind
    if kind == SPHERICAL:
        u = _uniforms(n, 1, construction, rng)[:, 0]
        r = special.chi_ppf(u, p) if erd == GAUSSIAN else u
        H = np.zeros((n, p))
        H[:, 0] = r
    elif kind == CENTRAL and erd == GAUSSIAN:
        u = _uniforms(n, p, construction, rng)
        H = special.norm_ppf(u)
        H[:, 0] = special.abs_norm_ppf(u[:, 0])
    elif kind == CENTRAL and erd == UNIFORM:
        u = _uniforms(n, p, construction, rng)
        H = 2.0 * u - 1.0
        H[:, 0] = u[:, 0]
    elif kind == SIGN and erd == GAUSSIAN:
        H = special.abs_norm_ppf(_uniforms(n, p, construction, rng))
    elif kind == SIGN and erd == UNIFORM:
        H = _uniforms(n, p, construction, rng)
    elif kind == CENTRAL:
        H = _erd_points(erd, n, p, construction, rng)
        H *= np.where(H[:, :1] < 0, -1.0, 1.0)
    elif kind == SIGN:
        H = np.abs(_erd_points(erd, n, p, construction, rng))
    else:
        H = _distinct_folded(group, erd, n, construction, rng)
    seed_meta = seed if isinstance(seed, (int, np.integer)) else None
    return ReferenceSet(
        H, group, erd, score or ScoreFunction.identity(), construction,
        None if seed_meta is None else int(seed_meta),
    )


# --------------------------------------------------------------------------
# ERD covariance

_BASE_SCALE = {GAUSSIAN: lambda p: 1.0, UNIFORM: lambda p: 1.0 / 3.0, SPHERICAL_UNIFORM: lambda p: 1.0 / (3.0 * p)}


def erd_covariance(ref):
    """Analytic covariance of the ERD after the score is applied.

    The identity score gives I, I/3 or I/(3p); a plug-in score M sends the
    base covariance to M Sigma M.
    """
    p = ref.p
    base = _BASE_SCALE[ref.erd](p) * np.eye(p)
    if ref.score.is_identity:
        return base
    M = ref.score.matrix
    return M @ base @ M.T


def empirical_erd_covariance(ref):
    """Finite-n version (1/n) sum_i E_S[S h_i h_i^T S^T], with the score applied outside.

    The plug-in score acts on the signed-rank sum, so its matrix M multiplies
    the result on both sides just as in :func:`erd_covariance`.
    """
    H = ref.points
    n, p = H.shape
    kind = ref.group.kind
    if kind == CENTRAL:
        base = H.T @ H / n
    elif kind == SIGN:
        base = np.diag(np.mean(H ** 2, axis=0))
    elif kind == SPHERICAL:
        base = np.mean(np.sum(H ** 2, axis=1)) / p * np.eye(p)
    else:
        mats = ref.group.matrices
        base = np.einsum("kab,bc,kdc->ad", mats, H.T @ H / n, mats) / len(mats)
    if ref.score.is_identity:
        return base
    M = ref.score.matrix
    return M @ base @ M.T
