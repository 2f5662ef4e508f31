"""Confidence sets for the center of symmetry by test inversion.

A candidate center theta is kept when the test applied to X_i - theta does
not reject. One reference set, one tie-breaking seed and one Monte-Carlo null
are shared by every candidate, so the set is a deterministic function of the
data and the seed.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from . import seeding, special
from .exceptions import EmptyGrid, TooFewObservations
from .group import SymmetryGroup, sign_matrices
from .reference import GAUSSIAN, HALTON, build_reference, erd_covariance
from .signedrank import signed_rank_parts
from .stats import GWSR, SIGN_TEST, exact_null, exact_p_value, gwsr_from_sum, sign_df, sign_scalar

GRID = "grid"
HULL = "hull"


@dataclass(eq=False)
class ConfidenceSet:
    """Accepted centers and how they were searched.

    Attributes
    ----------
    mode : {"grid", "hull"}
    accepted : (k, p) ndarray
    level : float
    candidates : (m, p) ndarray
        Every tested center, in grid or data order.
    accepted_mask : (m,) bool ndarray
    axes : list of ndarray
        Grid axes (grid mode only).
    hull : (v, p) ndarray
        Hull vertices of the accepted points (hull mode only).
    """

    mode: str
    accepted: np.ndarray
    level: float
    candidates: np.ndarray
    accepted_mask: np.ndarray
    axes: list = field(default_factory=list)
    hull: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def empty(self):
        return len(self.accepted) == 0

    @property
    def cell_volume(self):
        return float(np.prod([a[1] - a[0] if len(a) > 1 else 1.0 for a in self.axes]))

    @property
    def area(self):
        """Accepted count times the grid cell volume (grid mode)."""
        if self.mode != GRID:
            raise ValueError("area is only defined for grid sets")
        return float(self.accepted_mask.sum()) * self.cell_volume

    def contains(self, theta):
        """Grid mode: whether the grid node nearest to ``theta`` is accepted."""
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if self.mode != GRID:
            raise ValueError("contains() needs a grid set")
        idx = []
        for a, t in zip(self.axes, theta):
            half = 0.5 * (a[1] - a[0]) if len(a) > 1 else 0.0
            if t < a[0] - half or t > a[-1] + half:
                return False
            idx.append(int(np.argmin(np.abs(a - t))))
        return bool(self.accepted_mask.reshape([len(a) for a in self.axes])[tuple(idx)])

    def touches_boundary(self):
        """True if any accepted grid node lies on the outer edge of the grid."""
        if self.mode != GRID or self.empty:
            return False
        m = self.accepted_mask.reshape([len(a) for a in self.axes])
        for d in range(m.ndim):
            if np.take(m, 0, axis=d).any() or np.take(m, -1, axis=d).any():
                return True
        return False

    def to_csv(self):
        p = self.candidates.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"theta{j+1}" for j in range(p)] + ["accepted"])
        for th, a in zip(self.candidates, self.accepted_mask):
            w.writerow([f"{v:.6g}" for v in th] + [int(a)])
        return buf.getvalue()

    def summary(self):
        d = {
            "mode": self.mode,
            "level": self.level,
            "candidates": int(len(self.candidates)),
            "accepted": int(self.accepted_mask.sum()),
        }
        if self.mode == GRID:
            d["bounds"] = [[float(a[0]), float(a[-1])] for a in self.axes]
            d["points_per_axis"] = [len(a) for a in self.axes]
            d["area"] = self.area
            d["touches_boundary"] = self.touches_boundary()
        else:
            d["hull"] = [] if self.hull is None else self.hull.tolist()
        d.update(self.meta)
        return d

    def to_json(self):
        def r(v):
            if isinstance(v, float):
                return float(f"{v:.6g}")
            if isinstance(v, list):
                return [r(x) for x in v]
            return v
        return json.dumps({k: r(v) for k, v in self.summary().items()}, indent=2, sort_keys=True)


def make_axes(data, bounds=None, step=None, points=41, width=3.0):
    """Grid axes; by default ``points`` nodes over mean +- width * largest marginal sd."""
    X = np.atleast_2d(np.asarray(data, dtype=float))
    p = X.shape[1]
    if bounds is None:
        c = X.mean(axis=0)
        s = width * float(X.std(axis=0, ddof=1).max()) if len(X) > 1 else 1.0
        bounds = [(ci - s, ci + s) for ci in c]
    bounds = list(bounds)
    if len(bounds) == 2 and np.ndim(bounds[0]) == 0 and p != 2:
        bounds = [tuple(bounds)] * p
    if len(bounds) != p:
        raise EmptyGrid(f"need bounds for {p} coordinates")
    axes = []
    for lo, hi in bounds:
        if not hi >= lo:
            raise EmptyGrid("grid bounds are empty")
        if step is not None:
            if not step > 0:
                raise EmptyGrid("grid step must be positive")
            k = int(math.floor((hi - lo) / step + 1e-9)) + 1
            axes.append(lo + step * np.arange(k))
        else:
            if int(points) < 1:
                raise EmptyGrid("grid needs at least one point per axis")
            axes.append(np.linspace(lo, hi, int(points)))
    return axes


class _Inverter:
    """Evaluates the acceptance decision at many centers with shared randomness."""

    def __init__(self, data, ref, test_kind, alpha, calibration, B, seed):
        self.X = np.atleast_2d(np.asarray(data, dtype=float))
        self.ref = ref
        self.kind = test_kind
        self.alpha = alpha
        self.seed = seed
        self.exact = calibration == "exact"
        df = self.X.shape[1] if test_kind == GWSR else sign_df(ref.group.kind, ref.p)
        self.df = df
        if df is None:
            self.exact = True
        self.null = exact_null(ref, test_kind, B, seeding.stream(seed, seeding.NULL)) if self.exact else None
        self.sig_inv = np.linalg.inv(erd_covariance(ref)) if test_kind == GWSR else None

    def accepts(self, theta):
        Y = self.X - theta
        signs, sr = signed_rank_parts(Y, self.ref, seeding.stream(self.seed, seeding.SIGNS),
                                      need_signs=self.kind == SIGN_TEST)
        n = len(Y)
        if self.kind == GWSR:
            q = float(gwsr_from_sum(sr.sum(axis=0), n, self.ref, self.sig_inv)[1])
        else:
            T = sign_matrices(self.ref.group.kind, signs, self.ref.p).sum(axis=0) / np.sqrt(n)
            q = float(sign_scalar(T, self.ref.group.kind))
        if self.exact:
            return exact_p_value(self.null, q) > self.alpha
        return special.chi2_sf(q, self.df) > self.alpha


def _reference(data, ref, ref_builder, group, erd, construction, seed):
    if ref is not None:
        return ref
    n, p = np.atleast_2d(data).shape
    if ref_builder is not None:
        return ref_builder(n)
    if isinstance(group, str):
        group = SymmetryGroup.from_name(group, p)
    return build_reference(group, erd, n, construction, seeding.stream(seed, seeding.REFERENCE))


def confidence_grid(data, ref_builder=None, group="central", erd=GAUSSIAN, alpha=0.05,
                    bounds=None, step=None, calibration="exact", seed=0, B=999,
                    test_kind=GWSR, construction=HALTON, points=41, ref=None, axes=None):
    """Invert the GWSR (or sign) test over a rectangular grid of centers.

    Parameters
    ----------
    data : (n, p) array_like
    ref_builder : callable, optional
        ``ref_builder(n)`` returns the reference set; otherwise one is built
        from ``group``, ``erd`` and ``construction``.
    bounds : sequence of (lo, hi), optional
        Defaults to the data mean +- 3 times the largest marginal sd.
    step : float, optional
        Grid spacing; when absent, ``points`` nodes per axis.
    calibration : {"exact", "asymptotic"}
    axes : list of 1-D arrays, optional
        Explicit grid axes, overriding ``bounds``/``step``.

    Returns
    -------
    ConfidenceSet

    Raises
    ------
    EmptyGrid
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    seed = seeding.resolve_seed(seed)
    if axes is None:
        axes = make_axes(X, bounds, step, points)
    axes = [np.asarray(a, dtype=float) for a in axes]
    if not axes or any(len(a) == 0 for a in axes):
        raise EmptyGrid("grid has no points")
    reference = _reference(X, ref, ref_builder, group, erd, construction, seed)
    inv = _Inverter(X, reference, test_kind, alpha, calibration, B, seed)
    cands = np.array(list(itertools.product(*axes)), dtype=float)
    mask = np.array([inv.accepts(t) for t in cands], dtype=bool)
    meta = {"test": test_kind, "calibration": "exact" if inv.exact else "asymptotic",
            "seed": seed, "group": reference.group.kind, "erd": reference.erd, "n": len(X)}
    return ConfidenceSet(GRID, cands[mask], 1.0 - alpha, cands, mask, axes, None, meta)


def monotone_chain(points):
    """Convex hull of 2-D points in counter-clockwise order (collinear points dropped)."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float))))
    if len(pts) <= 2:
        return np.array(pts, dtype=float).reshape(-1, 2)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for pt in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], pt) <= 0:
            lower.pop()
        lower.append(pt)
    for pt in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], pt) <= 0:
            upper.pop()
        upper.append(pt)
    return np.array(lower[:-1] + upper[:-1], dtype=float)


def hull_vertices(points):
    """Hull vertices in any dimension; 2-D uses the monotone chain."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if len(P) == 0:
        return P
    p = P.shape[1]
    if p == 1:
        return np.array([[P.min()], [P.max()]]) if P.min() < P.max() else P[:1]
    if p == 2:
        return monotone_chain(P)
    if len(P) <= p or np.linalg.matrix_rank(P[1:] - P[0]) < p:
        return np.unique(P, axis=0)
    return P[ConvexHull(P).vertices]


def confidence_hull(data, ref_builder=None, group="central", erd=GAUSSIAN, alpha=0.05,
                    calibration="exact", seed=0, B=999, test_kind=GWSR, construction=HALTON, ref=None):
    """Test theta = X_i for every observation and return the hull of the accepted ones.

    Raises
    ------
    TooFewObservations
        If n < p + 1.
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n, p = X.shape
    if n < p + 1:
        raise TooFewObservations("the data-point hull needs n >= p + 1")
    seed = seeding.resolve_seed(seed)
    reference = _reference(X, ref, ref_builder, group, erd, construction, seed)
    inv = _Inverter(X, reference, test_kind, alpha, calibration, B, seed)
    mask = np.array([inv.accepts(x) for x in X], dtype=bool)
    acc = X[mask]
    meta = {"test": test_kind, "calibration": "exact" if inv.exact else "asymptotic",
            "seed": seed, "group": reference.group.kind, "erd": reference.erd, "n": n}
    return ConfidenceSet(HULL, acc, 1.0 - alpha, X, mask, [], hull_vertices(acc), meta)


def polygon_area(vertices):
    """Shoelace area of a simple polygon given in order."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def hotelling_region_volume(data, alpha=0.05):
    """Volume of {theta : n (xbar - theta)^T S^{-1} (xbar - theta) <= chi2_p(alpha)}.

    For p = 2 this is pi chi2_2(alpha) sqrt(det S) / n.
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n, p = X.shape
    if n <= p:
        raise TooFewObservations("need n > p")
    S = np.atleast_2d(np.cov(X, rowvar=False))
    c = special.chi2_isf(alpha, p)
    unit_ball = math.pi ** (p / 2) / math.gamma(p / 2 + 1)
    return float(unit_ball * (c / n) ** (p / 2) * math.sqrt(np.linalg.det(S)))


def hotelling_region_contains(data, theta, alpha=0.05):
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n, p = X.shape
    d = X.mean(axis=0) - np.asarray(theta, dtype=float)
    S = np.atleast_2d(np.cov(X, rowvar=False))
    return bool(n * d @ np.linalg.solve(S, d) <= special.chi2_isf(alpha, p))
