import itertools
import time

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from ot_symmetry.exceptions import DuplicateNorms, NonFiniteCost, TooLarge
from ot_symmetry.group import SymmetryGroup, orbit_cost_matrix
from ot_symmetry.reference import build_reference
from ot_symmetry.transport import _jv, brute_force_lap, dual_certificate, solve_lap, solve_spherical
from test_group import dihedral4


def test_small_examples():
    a = solve_lap([[0, 5], [5, 0]])
    assert list(a.permutation) == [0, 1] and a.total_cost == 0
    a = solve_lap([[4, 1, 3], [2, 0, 5], [3, 2, 2]])
    assert list(a.permutation) == [1, 0, 2] and a.total_cost == 5
    b = brute_force_lap([[4, 1, 3], [2, 0, 5], [3, 2, 2]])
    assert b.total_cost == 5 and not b.tie_flag


def test_one_by_one():
    assert solve_lap([[3.5]]).total_cost == 3.5
    assert brute_force_lap([[3.5]]).total_cost == 3.5


def test_tie_matrix():
    b = brute_force_lap([[1, 1], [1, 1]])
    assert b.tie_flag and len(b.minimizers) == 2
    assert solve_lap([[1, 1], [1, 1]]).tie_flag


def test_errors():
    with pytest.raises(NonFiniteCost):
        solve_lap([[0, np.inf], [1, 0]])
    with pytest.raises(NonFiniteCost):
        solve_lap([[0, np.nan], [1, 0]])
    with pytest.raises(TooLarge):
        brute_force_lap(np.zeros((10, 10)))


def test_idempotent_under_row_permutation():
    rng = np.random.default_rng(0)
    C = rng.random((30, 30))
    a = solve_lap(C)
    perm = rng.permutation(30)
    b = solve_lap(C[perm])
    assert b.total_cost == pytest.approx(a.total_cost, rel=1e-12)


def _groups(p):
    gs = [SymmetryGroup.central(p), SymmetryGroup.sign_change(p), SymmetryGroup.spherical(p)]
    if p == 2:
        gs.append(dihedral4())
    return gs


def test_matches_brute_force_on_random_orbit_costs():
    rng = np.random.default_rng(1)
    count = 0
    for n in range(2, 8):
        for _ in range(25):
            for g in _groups(2):
                X = rng.standard_normal((n, 2))
                H = rng.standard_normal((n, 2))
                C = orbit_cost_matrix(g, X, H)
                a, b = solve_lap(C), brute_force_lap(C)
                assert a.total_cost == pytest.approx(b.total_cost, rel=1e-9, abs=1e-12)
                if not b.tie_flag:
                    assert np.array_equal(a.permutation, b.permutation)
                count += 1
    assert count >= 500


def test_matches_scipy_on_larger_instances():
    rng = np.random.default_rng(2)
    for n in (50, 120, 300):
        for C in (rng.random((n, n)), rng.integers(0, 5, (n, n)).astype(float),
                  orbit_cost_matrix(SymmetryGroup.central(3), rng.standard_cauchy((n, 3)),
                                    rng.standard_normal((n, 3)))):
            a = solve_lap(C)
            r, c = linear_sum_assignment(C)
            assert a.total_cost == pytest.approx(C[r, c].sum(), rel=1e-9)
            assert sorted(a.permutation) == list(range(n))


def test_dual_certificate_holds():
    rng = np.random.default_rng(3)
    for n in (2, 5, 40, 200):
        C = rng.random((n, n)) * 10
        perm, v = _jv(np.ascontiguousarray(C))
        assert dual_certificate(C, perm, v)
        u = C[np.arange(n), perm] - v[perm]
        assert np.all(u[:, None] + v[None, :] <= C + 1e-7)


def test_degenerate_integer_costs():
    # many ties exercise the equal-distance branches of the solver
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = rng.integers(2, 8)
        C = rng.integers(0, 3, (n, n)).astype(float)
        assert solve_lap(C).total_cost == brute_force_lap(C).total_cost


def test_spherical_examples():
    X = np.array([[5.0, 0], [0, 1.0], [3.0, 0]])
    H = np.array([[0.5, 0], [1.0, 0], [1.5, 0]])
    a = solve_spherical(X, H)
    assert list(a.permutation) == [2, 0, 1]
    one = solve_spherical(np.array([[2.0, 1.0]]), np.array([[1.0, 0.0]]))
    assert list(one.permutation) == [0]


def test_spherical_matches_generic_solver():
    rng = np.random.default_rng(5)
    g2 = {}
    for trial in range(200):
        n = int(rng.integers(1, 201))
        p = int(rng.integers(1, 6))
        g = g2.setdefault(p, SymmetryGroup.spherical(p))
        ref = build_reference(g, "gaussian", n, "random", seed=trial)
        X = rng.standard_normal((n, p)) * rng.uniform(0.5, 2)
        fast = solve_spherical(X, ref)
        slow = solve_lap(orbit_cost_matrix(g, X, ref.points))
        assert fast.total_cost == pytest.approx(slow.total_cost, rel=1e-9, abs=1e-12)


def test_spherical_duplicate_reference_norms():
    H = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DuplicateNorms):
        solve_spherical(np.ones((2, 2)), H)


def test_spherical_close_reference_norms_are_allowed():
    H = np.array([[1.0, 0.0], [0.0, 1.0 + 1e-13]])
    X = np.array([[0.0, 3.0], [0.5, 0.0]])
    a = solve_spherical(X, H)
    b = solve_lap(orbit_cost_matrix(SymmetryGroup.spherical(2), X, H))
    assert a.total_cost == pytest.approx(b.total_cost, rel=1e-12)


def test_spherical_tie_flag_on_data():
    H = np.array([[1.0, 0.0], [2.0, 0.0]])
    assert solve_spherical(np.array([[1.0, 0.0], [0.0, -1.0]]), H).tie_flag


def test_spherical_fast_path_speed():
    rng = np.random.default_rng(6)
    n = 100_000
    ref = build_reference(SymmetryGroup.spherical(3), "gaussian", n, "halton")
    X = rng.standard_normal((n, 3))
    t = time.perf_counter()
    solve_spherical(X, ref)
    assert time.perf_counter() - t < 1.0


def test_brute_force_lists_all_minimizers():
    C = np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])
    b = brute_force_lap(C)
    exp = [p for p in itertools.permutations(range(3))
           if sum(C[i, p[i]] for i in range(3)) == b.total_cost]
    assert sorted(map(tuple, b.minimizers)) == sorted(exp)
