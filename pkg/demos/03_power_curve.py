# A small power curve for the bivariate Gaussian shift scenario C1.
#
# 300 replications per point keeps this quick; the benchmark tables use
# 2000 or more.

import numpy as np

from ot_symmetry.simulate import power_study, scenario

lams = np.round(np.arange(0.0, 0.35, 0.05), 2)
print("lambda   gwsr   sign   hotelling")
for lam in lams:
    res = power_study(scenario("C1", lam), replications=300, seed=3, construction="random")
    pw = {r.method: r.power for r in res}
    print(f"{lam:6.2f} {pw['gwsr']:6.3f} {pw['sign']:6.3f} {pw['hotelling']:8.3f}")
