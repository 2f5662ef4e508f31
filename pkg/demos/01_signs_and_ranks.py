# Signs, ranks and signed-ranks from an optimal assignment.
#
# Each observation is matched to one reference point; the group element that
# brings the reference point closest to the observation is its sign.

import numpy as np

from ot_symmetry import SymmetryGroup, build_reference, decompose

rng = np.random.default_rng(1)
X = rng.standard_normal((8, 2)) @ np.array([[1.0, 0.4], [0.0, 0.8]])

for kind in ("central", "sign", "spherical"):
    ref = build_reference(SymmetryGroup.from_name(kind, 2), "gaussian", len(X), "halton")
    d = decompose(X, ref, rng=0)
    print(f"--- {kind} symmetry, total cost {d.total_cost:.4f}")
    print(d.to_csv())

# In one dimension with the reference 1/n, ..., n/n the ranks are the usual
# absolute ranks divided by n and the signs are the usual signs.
from ot_symmetry import ReferenceSet

x = np.array([0.3, -1.2, 2.0, -0.1, 0.7])
ref = ReferenceSet.from_points((np.arange(1, 6) / 5)[:, None], SymmetryGroup.central(1))
d = decompose(x, ref, rng=0)
print("ranks * n:", d.ranks[:, 0] * 5)
print("signs    :", d.signs)
