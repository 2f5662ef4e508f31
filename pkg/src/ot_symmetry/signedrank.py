"""Generalized signs, ranks and signed-ranks from an optimal assignment."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch
from .group import (
    SPHERICAL,
    apply_signs,
    argmin_signs,
    element_from_compact,
    orbit_cost_matrix,
    sign_matrices,
    sign_tags,
)
from .reference import inverse_sqrt_spd
from .transport import lap_permutation, solve_lap, solve_spherical


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Per-observation sign, rank and signed-rank.

    Attributes
    ----------
    data : (n, p) ndarray
    signs : ndarray
        Compact signs: (n,) for central symmetry, (n, p) for sign symmetry,
        (n, p, p) matrices otherwise.
    ranks : (n, p) ndarray
        ``ranks[i]`` is the reference point matched to ``data[i]``.
    signed_ranks : (n, p) ndarray
    permutation : (n,) int ndarray
        Reference index of each observation.
    total_cost : float
    tie_flag : bool
    seed : int or None
        Seed of the stream used to break ties and draw spherical signs.
    """

    data: np.ndarray
    signs: np.ndarray
    ranks: np.ndarray
    signed_ranks: np.ndarray
    permutation: np.ndarray
    group: object
    total_cost: float
    tie_flag: bool = False
    seed: int | None = None

    @property
    def n(self):
        return self.ranks.shape[0]

    @property
    def p(self):
        return self.ranks.shape[1]

    def sign_elements(self):
        return [element_from_compact(self.group, s) for s in self.signs]

    def sign_matrices(self):
        return sign_matrices(self.group.kind, self.signs, self.p)

    def to_csv(self, path=None):
        """Columns x1..xp, r1..rp, sr1..srp, sign_tag."""
        p = self.p
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{j+1}" for j in range(p)] + [f"r{j+1}" for j in range(p)]
                   + [f"sr{j+1}" for j in range(p)] + ["sign_tag"])
        tags = sign_tags(self.group.kind, self.signs, self.group)
        for x, r, sr, t in zip(self.data, self.ranks, self.signed_ranks, tags):
            w.writerow([f"{v:.6g}" for v in (*x, *r, *sr)] + [t])
        if path is None:
            return buf.getvalue()
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())
        return None


def _check(data, ref):
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if ref.p == 1 else X[None, :]
    if X.ndim != 2 or X.shape[1] != ref.p:
        raise DimensionMismatch(f"data has dimension {X.shape[-1]}, reference has {ref.p}")
    if X.shape[0] != ref.n:
        raise DimensionMismatch(
            f"data has {X.shape[0]} observations but the reference has {ref.n} points"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("data must be finite")
    return X


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed, None
    return np.random.default_rng(seed), (None if seed is None else int(seed))


def decompose(data, ref, rng=None):
    """Generalized signs, ranks and signed-ranks of ``data`` against ``ref``.

    Parameters
    ----------
    data : (n, p) array_like
    ref : ReferenceSet
        Must hold exactly n points.
    rng : int or Generator, optional
        Randomness for tie-breaking and for the spherical signs. An integer is
        recorded on the result.

    Returns
    -------
    Decomposition
    """
    X = _check(data, ref)
    gen, seed = _rng(rng)
    group = ref.group
    H = ref.points
    if group.kind == SPHERICAL:
        a = solve_spherical(X, H)
    else:
        a = solve_lap(orbit_cost_matrix(group, X, H))
    ranks = H[a.permutation]
    signs = argmin_signs(group, X, ranks, gen)
    sr = apply_signs(group.kind, signs, ranks)
    return Decomposition(X, signs, ranks, sr, a.permutation, group, a.total_cost, a.tie_flag, seed)


def signed_rank_parts(X, ref, rng, need_signs=True):
    """Fast internal path returning ``(signs, signed_ranks)``.

    Skips validation and certificates. For O(p) the signed ranks use the
    closed form |h| x/|x|, and signs are only drawn when ``need_signs``.
    """
    group = ref.group
    H = ref.points
    if group.kind == SPHERICAL:
        perm = solve_spherical(X, H).permutation
        nx = np.linalg.norm(X, axis=1)
        sr = (np.linalg.norm(H[perm], axis=1) / nx)[:, None] * X
        signs = argmin_signs(group, X, H[perm], rng) if need_signs else None
        return signs, sr
    perm = lap_permutation(orbit_cost_matrix(group, X, H))
    ranks = H[perm]
    signs = argmin_signs(group, X, ranks, rng)
    return signs, apply_signs(group.kind, signs, ranks)


def population_map_gaussian_oracle(x, sigma):
    """Population signed-rank Sigma^{-1/2} x for N(0, Sigma) data and the Gaussian ERD."""
    return inverse_sqrt_spd(sigma) @ np.asarray(x, dtype=float)
