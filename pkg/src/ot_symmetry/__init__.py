"""Distribution-free tests of multivariate symmetry from optimal-transport signs and ranks."""
from .exceptions import *  # noqa: F401,F403
from .group import GroupElement, SymmetryGroup, argmin_sign, haar_sample, orbit_cost
from .reference import ReferenceSet, ScoreFunction, build_reference, empirical_erd_covariance, erd_covariance, halton
from .signedrank import Decomposition, decompose, population_map_gaussian_oracle
from .stats import TestReport, exact_null, gwsr_statistic, hotelling_t2, run_test, sign_statistic
from .transport import Assignment, brute_force_lap, solve_lap, solve_spherical

__version__ = "0.1.0"
