# Symmetry under a finite group: the eight symmetries of the square.
#
# Reference points are folded into a fundamental domain of the group and
# calibration is by the Monte-Carlo null.

import numpy as np

from ot_symmetry import SymmetryGroup, build_reference, run_test

r = np.array([[0.0, -1.0], [1.0, 0.0]])
f = np.array([[1.0, 0.0], [0.0, -1.0]])
rot = [np.linalg.matrix_power(r, k) for k in range(4)]
d4 = SymmetryGroup.finite(rot + [m @ f for m in rot])

rng = np.random.default_rng(5)
n = 150
ref = build_reference(d4, "gaussian", n, "halton")

iid = rng.standard_normal((n, 2))
stretched = iid * np.array([2.0, 0.5])  # centrally symmetric, but not D4-symmetric

for name, X in (("isotropic", iid), ("stretched", stretched)):
    rep = run_test(X, ref, "sign", calibration="exact", B=999, seed=4)
    print(f"{name:10s} sign statistic {rep.statistic:8.3f}  p = {rep.p_exact:.4f}")
