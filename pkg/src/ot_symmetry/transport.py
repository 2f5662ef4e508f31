"""Balanced assignment between data points and reference points.

``solve_lap`` is a Jonker-Volgenant shortest augmenting path solver compiled
with numba that also returns the dual potentials, so every solution carries a
checkable optimality certificate. ``solve_spherical`` handles the O(p) case by
sorting norms, and ``brute_force_lap`` enumerates permutations for testing.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numba
import numpy as np

from .exceptions import DuplicateNorms, NonFiniteCost, TooLarge

DUAL_TOL = 1e-7
TIE_RTOL = 1e-9
BRUTE_FORCE_MAX = 9


@dataclass(frozen=True, eq=False)
class Assignment:
    """Result of an assignment solve.

    ``permutation[i]`` is the reference index matched to data point ``i``.
    ``minimizers`` is only filled by :func:`brute_force_lap`.
    """

    permutation: np.ndarray
    total_cost: float
    tie_flag: bool = False
    minimizers: list = field(default_factory=list)

    @property
    def inverse(self):
        """Data index matched to each reference index."""
        inv = np.empty_like(self.permutation)
        inv[self.permutation] = np.arange(len(self.permutation))
        return inv


@numba.njit(cache=True)
def _jv(c):
    # column reduction followed by Dijkstra-type augmentation for free rows
    n = c.shape[0]
    x = np.full(n, -1, np.int64)
    y = np.full(n, -1, np.int64)
    v = np.empty(n)
    for j in range(n):
        imin = 0
        m = c[0, j]
        for i in range(1, n):
            if c[i, j] < m:
                m = c[i, j]
                imin = i
        v[j] = m
        if x[imin] < 0:
            x[imin] = j
            y[j] = imin
    d = np.empty(n)
    pred = np.empty(n, np.int64)
    col = np.empty(n, np.int64)
    for f in range(n):
        if x[f] >= 0:
            continue
        for j in range(n):
            d[j] = c[f, j] - v[j]
            pred[j] = f
            col[j] = j
        low = 0
        up = 0
        last = 0
        end = -1
        mn = 0.0
        while end < 0:
            if up == low:
                # collect the columns at the current minimum distance
                last = low - 1
                mn = d[col[up]]
                up += 1
                for k in range(up, n):
                    j = col[k]
                    h = d[j]
                    if h <= mn:
                        if h < mn:
                            up = low
                            mn = h
                        col[k] = col[up]
                        col[up] = j
                        up += 1
                for k in range(low, up):
                    if y[col[k]] < 0:
                        end = col[k]
                        break
            if end < 0:
                # scan one tight column and relax through its row
                j1 = col[low]
                low += 1
                i = y[j1]
                u1 = c[i, j1] - v[j1] - mn
                for k in range(up, n):
                    j = col[k]
                    h = c[i, j] - v[j] - u1
                    if h < d[j]:
                        pred[j] = i
                        if h == mn:
                            if y[j] < 0:
                                end = j
                                break
                            col[k] = col[up]
                            col[up] = j
                            up += 1
                        d[j] = h
        for k in range(last + 1):
            j1 = col[k]
            v[j1] += d[j1] - mn
        while True:
            i = pred[end]
            y[end] = i
            j1 = end
            end = x[i]
            x[i] = j1
            if i == f:
                break
    return x, v


def _as_cost(costs):
    c = np.ascontiguousarray(costs, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("cost matrix must be square")
    if not np.all(np.isfinite(c)):
        raise NonFiniteCost("cost matrix contains NaN or infinite entries")
    return c


def dual_certificate(c, perm, v, tol=DUAL_TOL):
    """Check u_i + v_j <= c_ij + tol everywhere with equality on matched pairs.

    ``u`` is recovered from the matched pairs, so equality holds there by
    construction; ``tol`` is scaled by the largest cost magnitude so that
    heavy-tailed data with huge costs are judged in relative terms.
    """
    n = len(perm)
    u = c[np.arange(n), perm] - v[perm]
    slack = c - u[:, None] - v[None, :]
    return bool(slack.min() >= -tol * max(1.0, float(np.abs(c).max())))


def _has_duplicate_lines(c):
    if len(c) < 2:
        return False
    return len(np.unique(c, axis=0)) < len(c) or np.unique(c, axis=1).shape[1] < len(c)


def solve_lap(costs, certify=True):
    """Minimum-cost perfect matching of rows (data) to columns (reference).

    Parameters
    ----------
    costs : (n, n) array_like
        Finite cost matrix.
    certify : bool
        Verify the dual feasibility certificate and raise if it fails.

    Returns
    -------
    Assignment
        ``tie_flag`` is set when two rows or two columns of ``costs`` are
        identical, the one source of non-unique optima detected without
        enumeration.
    """
    c = _as_cost(costs)
    n = c.shape[0]
    if n == 0:
        return Assignment(np.empty(0, dtype=np.int64), 0.0)
    perm, v = _jv(c)
    if certify and not dual_certificate(c, perm, v):
        raise ArithmeticError("assignment failed its dual feasibility check")
    total = float(c[np.arange(n), perm].sum())
    return Assignment(perm, total, _has_duplicate_lines(c))


def lap_permutation(c):
    """Bare permutation from the JV solver; no validation or certificate."""
    return _jv(np.ascontiguousarray(c, dtype=float))[0]


def _norms(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        return np.abs(a)
    return np.sqrt(np.einsum("ij,ij->i", a, a))


def solve_spherical(data, ref):
    """Assignment for O(p) symmetry by matching norms rank to rank.

    Parameters
    ----------
    data : (n, p) array_like
    ref : ReferenceSet or (n, p) array_like
        Reference points with pairwise distinct norms.

    Returns
    -------
    Assignment
        The k-th smallest data norm is matched to the k-th smallest reference
        norm. ``tie_flag`` marks tied data norms.
    """
    H = getattr(ref, "points", ref)
    dn = _norms(data)
    hn = _norms(H)
    if len(dn) != len(hn):
        raise ValueError("data and reference must have the same number of points")
    if not (np.all(np.isfinite(dn)) and np.all(np.isfinite(hn))):
        raise NonFiniteCost("non-finite norms")
    ho = np.argsort(hn, kind="stable")
    hs = hn[ho]
    # nearly equal reference norms still give an optimal sorted match; only exact
    # duplicates leave the reference ambiguous
    if len(hs) > 1 and np.any(np.diff(hs) <= 0.0):
        raise DuplicateNorms("reference points must have distinct norms")
    do = np.argsort(dn, kind="stable")
    ds = dn[do]
    perm = np.empty(len(dn), dtype=np.int64)
    perm[do] = ho
    tie = bool(len(ds) > 1 and np.any(np.diff(ds) <= TIE_RTOL * (1.0 + ds[1:])))
    total = float(np.sum((ds - hs) ** 2))
    return Assignment(perm, total, tie)


def brute_force_lap(costs):
    """Exact assignment by enumerating all n! permutations (n <= 9).

    Every permutation whose cost is within ``TIE_RTOL`` (relative) of the
    minimum is reported in ``minimizers``.
    """
    c = _as_cost(costs)
    n = c.shape[0]
    if n > BRUTE_FORCE_MAX:
        raise TooLarge(f"brute force is limited to n <= {BRUTE_FORCE_MAX}, got {n}")
    if n == 0:
        return Assignment(np.empty(0, dtype=np.int64), 0.0, False, [np.empty(0, dtype=np.int64)])
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    # accumulate column by column so the float sum order matches a plain row sum
    tot = np.zeros(len(perms))
    for i in range(n):
        tot += c[i, perms[:, i]]
    best = tot.min()
    mins = perms[tot <= best + TIE_RTOL * (1.0 + abs(best))]
    k = int(np.argmin(tot))
    return Assignment(perms[k], float(c[np.arange(n), perms[k]].sum()), len(mins) > 1, list(mins))
