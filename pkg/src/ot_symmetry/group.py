"""Compact subgroups of O(p): Haar sampling, orbit costs and generalized signs.

Four kinds of group are supported:

- ``central``: {I, -I}
- ``sign``: the 2**p diagonal matrices with +-1 entries (never materialized)
- ``spherical``: the full orthogonal group O(p)
- ``finite``: an explicit list of orthogonal matrices closed under products

Group elements of the first two kinds are carried in compact form: a scalar
+-1 for ``central`` and a +-1 vector for ``sign``. Batched routines (the ones
used by the decomposition and the null samplers) work on stacked compact
arrays; :class:`GroupElement` wraps a single element for the scalar API.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, InvalidGroup, SphericalZeroVector

CENTRAL = "central"
SIGN = "sign"
SPHERICAL = "spherical"
FINITE = "finite"
KINDS = (CENTRAL, SIGN, SPHERICAL, FINITE)

#: Relative tolerance under which two candidate costs count as tied.
TIE_RTOL = 1e-9
ORTHO_TOL = 1e-10


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True, eq=False)
class SymmetryGroup:
    """A compact subgroup of the orthogonal group acting on R^dim."""

    kind: str
    dim: int
    matrices: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidGroup(f"unknown group kind {self.kind!r}")
        if int(self.dim) < 1:
            raise InvalidGroup("dimension must be a positive integer")
        if self.kind == FINITE:
            _validate_finite(self.matrices, self.dim)

    @classmethod
    def central(cls, p):
        return cls(CENTRAL, int(p))

    @classmethod
    def sign_change(cls, p):
        return cls(SIGN, int(p))

    @classmethod
    def spherical(cls, p):
        return cls(SPHERICAL, int(p))

    @classmethod
    def finite(cls, matrices):
        mats = np.array(matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise InvalidGroup("finite group needs a (k, p, p) stack of matrices")
        mats.setflags(write=False)
        return cls(FINITE, mats.shape[1], mats)

    @classmethod
    def from_name(cls, name, p):
        return {CENTRAL: cls.central, SIGN: cls.sign_change, SPHERICAL: cls.spherical}[name](p)

    @property
    def order(self):
        """Number of elements, or ``None`` for O(p)."""
        if self.kind == CENTRAL:
            return 2 if self.dim > 0 else 1
        if self.kind == SIGN:
            return 2 ** self.dim
        if self.kind == FINITE:
            return len(self.matrices)
        return None

    @property
    def mean_is_zero(self):
        """True iff the Haar mean of the group is the zero matrix."""
        if self.kind == FINITE:
            return bool(np.abs(self.matrices.mean(axis=0)).max() <= 1e-9)
        return True

    def __repr__(self):
        extra = f", order={self.order}" if self.kind == FINITE else ""
        return f"SymmetryGroup({self.kind!r}, dim={self.dim}{extra})"


def _validate_finite(mats, p):
    if mats is None or len(mats) == 0:
        raise InvalidGroup("finite group needs at least one matrix")
    eye = np.eye(p)
    gram = np.einsum("kji,kjl->kil", mats, mats)
    if np.abs(gram - eye).max() > ORTHO_TOL:
        raise InvalidGroup("every matrix must be orthogonal to 1e-10")
    flat = mats.reshape(len(mats), -1)

    def index_of(m):
        d = np.abs(flat - m.ravel()).max(axis=1)
        j = int(np.argmin(d))
        return j if d[j] <= 1e-8 else -1

    if index_of(eye) < 0:
        raise InvalidGroup("finite group must contain the identity")
    for a in mats:
        if index_of(a.T) < 0:
            raise InvalidGroup("finite group is not closed under inversion")
        for b in mats:
            if index_of(a @ b) < 0:
                raise InvalidGroup("finite group is not closed under multiplication")


@dataclass(frozen=True, eq=False)
class GroupElement:
    """One element of a :class:`SymmetryGroup`.

    ``tag`` holds the compact form (``+-1`` for central symmetry, a +-1 vector
    for sign symmetry); ``mat`` holds an explicit matrix otherwise.
    """

    kind: str
    dim: int
    tag: object = None
    mat: np.ndarray | None = None
    index: int | None = None

    def matrix(self):
        if self.kind == CENTRAL:
            return float(self.tag) * np.eye(self.dim)
        if self.kind == SIGN:
            return np.diag(np.asarray(self.tag, dtype=float))
        return np.array(self.mat, dtype=float)

    def apply(self, x):
        """Return Qx without materializing Q when a compact tag exists."""
        x = np.asarray(x, dtype=float)
        if self.kind in (CENTRAL, SIGN):
            return np.asarray(self.tag, dtype=float) * x
        return self.mat @ x

    def tag_string(self):
        return sign_tags(self.kind, _compact_of(self)[None])[0]


def _compact_of(el):
    if el.kind == CENTRAL:
        return np.asarray(float(el.tag))
    if el.kind == SIGN:
        return np.asarray(el.tag, dtype=float)
    return np.asarray(el.mat, dtype=float)


def element_from_compact(group, compact, index=None):
    if group.kind == CENTRAL:
        return GroupElement(CENTRAL, group.dim, tag=int(compact))
    if group.kind == SIGN:
        return GroupElement(SIGN, group.dim, tag=np.asarray(compact, dtype=int))
    return GroupElement(group.kind, group.dim, mat=np.asarray(compact, dtype=float), index=index)


# --------------------------------------------------------------------------
# Haar sampling


def haar_orthogonal(p, size, rng):
    """Draw ``size`` Haar-distributed O(p) matrices, shape (size, p, p).

    QR of a Gaussian matrix with the columns of Q rescaled by sign(diag R),
    which makes the factor exactly Haar rather than biased by the QR
    sign convention.
    """
    g = rng.standard_normal((size, p, p))
    q, r = np.linalg.qr(g)
    d = np.sign(np.diagonal(r, axis1=1, axis2=2))
    d[d == 0] = 1.0
    return q * d[:, None, :]


def haar_sample_many(group, size, rng=None):
    """Draw ``size`` i.i.d. Haar elements in compact form.

    Returns shape (size,) for central symmetry, (size, p) for sign symmetry
    and (size, p, p) matrices otherwise.
    """
    rng = _as_rng(rng)
    p = group.dim
    if group.kind == CENTRAL:
        return rng.choice(np.array([-1.0, 1.0]), size=size)
    if group.kind == SIGN:
        return rng.choice(np.array([-1.0, 1.0]), size=(size, p))
    if group.kind == SPHERICAL:
        return haar_orthogonal(p, size, rng)
    idx = rng.integers(0, len(group.matrices), size=size)
    return group.matrices[idx]


def haar_sample(group, rng=None):
    """Draw a single Haar-uniform element of ``group``."""
    rng = _as_rng(rng)
    if group.kind == FINITE:
        i = int(rng.integers(0, len(group.matrices)))
        return GroupElement(FINITE, group.dim, mat=group.matrices[i], index=i)
    return element_from_compact(group, haar_sample_many(group, 1, rng)[0])


# --------------------------------------------------------------------------
# Costs


def _check_pair(group, x, h):
    x = np.asarray(x, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float).reshape(-1)
    if x.shape[0] != group.dim or h.shape[0] != group.dim:
        raise DimensionMismatch(
            f"expected vectors of length {group.dim}, got {x.shape[0]} and {h.shape[0]}"
        )
    return x, h


def orbit_cost(group, x, h):
    """min over Q in G of ||Q^T x - h||^2."""
    x, h = _check_pair(group, x, h)
    return float(orbit_cost_matrix(group, x[None], h[None])[0, 0])


def orbit_cost_matrix(group, X, H):
    """Matrix of orbit costs, entry (i, j) = c(X_i, H_j)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if X.shape[1] != group.dim or H.shape[1] != group.dim:
        raise DimensionMismatch("data and reference dimension must match the group")
    xx = np.einsum("ij,ij->i", X, X)[:, None]
    hh = np.einsum("ij,ij->i", H, H)[None, :]
    if group.kind == CENTRAL:
        cross = np.abs(X @ H.T)
    elif group.kind == SIGN:
        cross = np.abs(X) @ np.abs(H).T
    elif group.kind == SPHERICAL:
        return (np.sqrt(xx) - np.sqrt(hh)) ** 2
    else:
        # x^T Q h for every Q, then the best element
        cross = np.einsum("ip,kpq,jq->kij", X, group.matrices, H).max(axis=0)
    return np.maximum(xx + hh - 2.0 * cross, 0.0)


# --------------------------------------------------------------------------
# Generalized signs


def _tied(gap, scale):
    return np.abs(gap) <= TIE_RTOL * (1.0 + scale)


def _householder_basis(v):
    """Orthogonal matrices whose first column is the unit vector ``v`` (batched)."""
    n, p = v.shape
    eye = np.eye(p)
    e1 = np.zeros(p)
    e1[0] = 1.0
    neg = v[:, 0] > 0
    # u = e1 - v maps e1 to v; when v is close to e1 use u = e1 + v and flip the
    # first column, which keeps ||u|| bounded away from zero.
    u = np.where(neg[:, None], e1 + v, e1 - v)
    uu = np.einsum("ij,ij->i", u, u)
    M = eye[None] - 2.0 * u[:, :, None] * u[:, None, :] / uu[:, None, None]
    M[neg, :, 0] *= -1.0
    return M


def spherical_signs(X, H, rng):
    """Randomized minimizers Q of ||Q^T x - h|| over O(p), one per row.

    Q = GS([w eps]) [v V]^T with v = h/|h|, w = x/|x| and eps Gaussian; Q maps
    v to w and is uniform over all such matrices.
    """
    X = np.atleast_2d(X)
    H = np.atleast_2d(H)
    nx = np.linalg.norm(X, axis=1)
    nh = np.linalg.norm(H, axis=1)
    if np.any(nx == 0) or np.any(nh == 0):
        raise SphericalZeroVector("spherical sign needs nonzero x and h")
    n, p = X.shape
    w = X / nx[:, None]
    v = H / nh[:, None]
    A = np.empty((n, p, p))
    A[:, :, 0] = w
    A[:, :, 1:] = rng.standard_normal((n, p, p - 1))
    q, r = np.linalg.qr(A)
    d = np.sign(np.diagonal(r, axis1=1, axis2=2))
    d[d == 0] = 1.0
    gs = q * d[:, None, :]
    gs[:, :, 0] = w
    return gs @ np.swapaxes(_householder_basis(v), 1, 2)


def argmin_signs(group, X, H, rng=None):
    """Batched generalized signs: row i minimizes ||Q^T X_i - H_i||^2.

    Ties (within the relative tolerance ``TIE_RTOL``) are broken uniformly at
    random with ``rng``. Output is in compact form, see :func:`haar_sample_many`.
    """
    rng = _as_rng(rng)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if X.shape != H.shape or X.shape[1] != group.dim:
        raise DimensionMismatch("X and H must both be (n, p) with p = group.dim")
    n = X.shape[0]
    if group.kind == CENTRAL:
        dot = np.einsum("ij,ij->i", X, H)
        s = np.sign(dot)
        scale = np.einsum("ij,ij->i", X, X) + np.einsum("ij,ij->i", H, H)
        tie = _tied(4.0 * dot, scale)
        if tie.any():
            s[tie] = rng.choice(np.array([-1.0, 1.0]), size=int(tie.sum()))
        return s
    if group.kind == SIGN:
        prod = X * H
        s = np.sign(prod)
        tie = _tied(4.0 * prod, X ** 2 + H ** 2)
        if tie.any():
            s[tie] = rng.choice(np.array([-1.0, 1.0]), size=int(tie.sum()))
        return s
    if group.kind == SPHERICAL:
        return spherical_signs(X, H, rng)
    mats = group.matrices
    score = np.einsum("ip,kpq,iq->ik", X, mats, H)
    best = score.max(axis=1, keepdims=True)
    scale = (np.einsum("ij,ij->i", X, X) + np.einsum("ij,ij->i", H, H))[:, None]
    cand = _tied(2.0 * (best - score), scale)
    keys = np.where(cand, rng.random(score.shape), -1.0)
    return mats[np.argmax(keys, axis=1)]


def argmin_sign(group, x, h, rng=None):
    """Generalized sign of ``x`` relative to the rank vector ``h``."""
    x, h = _check_pair(group, x, h)
    compact = argmin_signs(group, x[None], h[None], rng)[0]
    index = None
    if group.kind == FINITE:
        index = int(np.argmin(np.abs(group.matrices - compact).reshape(len(group.matrices), -1).max(1)))
    return element_from_compact(group, compact, index)


# --------------------------------------------------------------------------
# Acting with compact signs


def apply_signs(kind, signs, Y):
    """Row-wise Q_i y_i for compact signs of the given group kind."""
    Y = np.asarray(Y, dtype=float)
    if kind == CENTRAL:
        return signs[:, None] * Y
    if kind == SIGN:
        return signs * Y
    return np.einsum("ipq,iq->ip", signs, Y)


def sign_matrices(kind, signs, p):
    """Materialize compact signs as a (n, p, p) stack."""
    signs = np.asarray(signs, dtype=float)
    if kind == CENTRAL:
        return signs[:, None, None] * np.eye(p)[None]
    if kind == SIGN:
        out = np.zeros((len(signs), p, p))
        idx = np.arange(p)
        out[:, idx, idx] = signs
        return out
    return signs


def sign_tags(kind, signs, group=None):
    """Short text labels for compact signs (used in CSV export)."""
    if kind == CENTRAL:
        return ["+I" if s > 0 else "-I" for s in signs]
    if kind == SIGN:
        return ["".join("+" if v > 0 else "-" for v in row) for row in signs]
    if kind == FINITE and group is not None:
        flat = group.matrices.reshape(len(group.matrices), -1)
        return [f"g{int(np.argmin(np.abs(flat - m.ravel()).max(1)))}" for m in signs]
    return [";".join(f"{v:.6g}" for v in m.ravel()) for m in signs]
