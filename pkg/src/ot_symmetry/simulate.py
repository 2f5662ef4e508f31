"""Scenario generators, power studies and relative-efficiency checks.

Scenario names follow the usual benchmark grid: ``C1``-``C10`` (central
symmetry), ``S1``-``S10`` (sign symmetry), ``Sp1``-``Sp10`` (spherical
symmetry), plus ``EpanechnikovShift`` and ``GaussShift`` for the efficiency
checks. Every scenario takes an extra location shift ``lam`` added to all
coordinates.
"""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import seeding, special
from .exceptions import UnknownScenario
from .group import CENTRAL, SIGN, SPHERICAL, SymmetryGroup, sign_matrices
from .reference import GAUSSIAN, HALTON, build_reference
from .signedrank import signed_rank_parts
from .stats import (
    GWSR,
    HOTELLING,
    SIGN_TEST,
    exact_null,
    exact_p_value,
    gwsr_from_sum,
    hotelling_f_pvalue,
    null_sign_scalars,
    sign_df,
    sign_scalar,
)

C12 = np.array([[2.0, 1.0], [1.0, 3.0]])
D23 = np.diag([2.0, 3.0])
METHODS = (GWSR, SIGN_TEST, HOTELLING)


@dataclass(frozen=True)
class ScenarioSpec:
    """A named data-generating process with sample size, dimension and parameters."""

    name: str
    n: int
    p: int
    params: dict = field(default_factory=dict)

    @property
    def lam(self):
        return float(self.params.get("lam", 0.0))

    @property
    def group_kind(self):
        """The symmetry the scenario is designed to probe."""
        if "group" in self.params:
            return self.params["group"]
        if self.name.startswith("Sp"):
            return SPHERICAL
        if self.name.startswith("S"):
            return SIGN
        return CENTRAL

    def label(self):
        return f"{self.name}:{self.lam:g}"


# --------------------------------------------------------------------------
# Samplers


def mvn(rng, n, cov):
    L = np.linalg.cholesky(np.asarray(cov, dtype=float))
    return rng.standard_normal((n, len(L))) @ L.T


def mvt1(rng, n, scale):
    """Multivariate t with one degree of freedom: Gaussian over an independent sqrt(chi2_1)."""
    z = mvn(rng, n, scale)
    return z / np.sqrt(rng.chisquare(1.0, size=(n, 1)))


def ar1(rng, n, p, innov, coef=0.5):
    """Chains X_1 = Z_1, X_i = coef X_{i-1} + Z_i across coordinates."""
    z = innov(rng, (n, p))
    x = np.empty_like(z)
    x[:, 0] = z[:, 0]
    for i in range(1, p):
        x[:, i] = coef * x[:, i - 1] + z[:, i]
    return x


def _t1(rng, size):
    return rng.standard_t(1.0, size=size)


def _normal(rng, size):
    return rng.standard_normal(size)


def unit_disk(rng, n):
    r = np.sqrt(rng.random(n))
    a = rng.uniform(-np.pi, np.pi, n)
    return np.column_stack([r * np.cos(a), r * np.sin(a)])


def epanechnikov(rng, size, sigma=1.0 / np.sqrt(5.0)):
    """Draws from the density proportional to 5 sigma^2 - x^2 on |x| <= sqrt(5) sigma.

    The scaled CDF F(t) = (2 + 3t - t^3) / 4 on [-1, 1] is inverted with the
    trigonometric root of the cubic and then polished by Newton steps.
    """
    u = rng.random(size)
    t = 2.0 * np.sin(np.arcsin(2.0 * u - 1.0) / 3.0)
    for _ in range(3):
        f = (2.0 + 3.0 * t - t ** 3) / 4.0 - u
        d = 0.75 * (1.0 - t ** 2)
        step = np.where(d > 1e-12, f / np.where(d > 1e-12, d, 1.0), 0.0)
        t = np.clip(t - step, -1.0, 1.0)
    return np.sqrt(5.0) * sigma * t


def epanechnikov_cdf(x, sigma=1.0 / np.sqrt(5.0)):
    t = np.clip(np.asarray(x, dtype=float) / (np.sqrt(5.0) * sigma), -1.0, 1.0)
    return (2.0 + 3.0 * t - t ** 3) / 4.0


def _sin_scale(p):
    return np.sin(np.arange(1, p + 1))


_SCENARIOS = {
    # name: (n, p, sampler(rng, n, p, params))
    "C1": (200, 2, lambda r, n, p, k: mvn(r, n, C12)),
    "C2": (200, 2, lambda r, n, p, k: mvt1(r, n, C12)),
    "C3": (200, 2, lambda r, n, p, k: rng_union_squares(r, n)),
    "C4": (100, 2, lambda r, n, p, k: r.exponential(1.0, (n, p)) - 1.0),
    "C5": (200, 2, lambda r, n, p, k: r.exponential(1.0, (n, p)) - 1.0),
    "C6": (100, 2, lambda r, n, p, k: r.chisquare(1.0, (n, p)) - 1.0),
    "C7": (200, 2, lambda r, n, p, k: 1.0 / (1.0 - r.random((n, p))) - 2.0),
    "C8": (200, 50, lambda r, n, p, k: ar1(r, n, p, _normal)),
    "C9": (200, 50, lambda r, n, p, k: ar1(r, n, p, _normal) + 0.15),
    "C10": (200, 50, lambda r, n, p, k: ar1(r, n, p, _t1) + 0.9),
    "S1": (200, 2, lambda r, n, p, k: mvn(r, n, D23)),
    "S2": (200, 2, lambda r, n, p, k: mvt1(r, n, D23)),
    "S3": (200, 2, lambda r, n, p, k: r.uniform(-1.0, 1.0, (n, p))),
    "S4": (200, 2, lambda r, n, p, k: mvn(r, n, C12)),
    "S5": (100, 2, lambda r, n, p, k: r.exponential(1.0, (n, p)) - 1.0),
    "S6": (100, 2, lambda r, n, p, k: r.chisquare(1.0, (n, p)) - 1.0),
    "S7": (200, 2, lambda r, n, p, k: r.laplace(0.2, 1.0, (n, p))),
    "S8": (200, 50, lambda r, n, p, k: _sin_scale(p) * r.standard_normal((n, p))),
    "S9": (200, 50, lambda r, n, p, k: _sin_scale(p) * r.standard_normal((n, p)) + 0.003),
    "S10": (200, 50, lambda r, n, p, k: _sin_scale(p) * mvt1(r, n, np.eye(p)) + 0.003),
    "Sp1": (200, 2, lambda r, n, p, k: r.standard_normal((n, p))),
    "Sp2": (200, 2, lambda r, n, p, k: mvt1(r, n, np.eye(p))),
    "Sp3": (200, 2, lambda r, n, p, k: unit_disk(r, n)),
    "Sp4": (200, 2, lambda r, n, p, k: r.standard_normal((n, p)) * np.array([2.0, 1.0])),
    "Sp5": (200, 2, lambda r, n, p, k: mvn(r, n, [[1.0, 0.6], [0.6, 1.0]])),
    "Sp6": (1000, 2, lambda r, n, p, k: r.uniform(-1.0, 1.0, (n, p))),
    "Sp7": (100, 2, lambda r, n, p, k: r.chisquare(1.0, (n, p)) - 1.0),
    "Sp8": (200, 50, lambda r, n, p, k: r.standard_normal((n, p))),
    "Sp9": (200, 50, lambda r, n, p, k: r.standard_normal((n, p)) + 0.05),
    "Sp10": (200, 50, lambda r, n, p, k: mvt1(r, n, np.eye(p)) + 0.05),
    "EpanechnikovShift": (
        1000, 2, lambda r, n, p, k: epanechnikov(r, (n, p), k.get("sigma", 1.0 / np.sqrt(5.0)))
    ),
    "GaussShift": (200, 2, lambda r, n, p, k: r.standard_normal((n, p))),
}

#: Scenarios whose dimension may be changed through ``p``.
_FREE_DIM = {"EpanechnikovShift", "GaussShift", "C8", "C9", "C10", "S8", "S9", "S10", "Sp8", "Sp9", "Sp10"}


def rng_union_squares(rng, n):
    """Uniform on [-1, 0]^2 union [0, 1]^2."""
    s = rng.choice(np.array([-1.0, 1.0]), size=(n, 1))
    return s * rng.random((n, 2))


def scenario_names():
    return list(_SCENARIOS)


def scenario(name, lam=0.0, n=None, p=None, **params):
    """Build a :class:`ScenarioSpec` with the scenario's default sizes.

    Raises
    ------
    UnknownScenario
    """
    if name not in _SCENARIOS:
        raise UnknownScenario(f"unknown scenario {name!r}; known: {', '.join(_SCENARIOS)}")
    n0, p0, _ = _SCENARIOS[name]
    if p is not None and int(p) != p0 and name not in _FREE_DIM:
        raise ValueError(f"scenario {name} has fixed dimension {p0}")
    params = dict(params, lam=float(lam))
    return ScenarioSpec(name, int(n or n0), int(p or p0), params)


def generate(spec, rng=None):
    """Draw ``spec.n`` observations, shape (n, p)."""
    if spec.name not in _SCENARIOS:
        raise UnknownScenario(f"unknown scenario {spec.name!r}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    X = _SCENARIOS[spec.name][2](rng, spec.n, spec.p, spec.params)
    return np.asarray(X, dtype=float) + spec.lam


# --------------------------------------------------------------------------
# Power studies


@dataclass(frozen=True)
class PowerResult:
    """Rejection tally of one method on one scenario."""

    scenario: ScenarioSpec
    method: str
    replications: int
    rejections: int

    @property
    def power(self):
        return self.rejections / self.replications

    @property
    def stderr(self):
        pw = self.power
        return float(np.sqrt(pw * (1.0 - pw) / self.replications))

    def row(self):
        return {
            "scenario": self.scenario.name,
            "method": self.method,
            "lambda": self.scenario.lam,
            "n": self.scenario.n,
            "power": self.power,
            "stderr": self.stderr,
            "reps": self.replications,
        }


def results_to_csv(results):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "method", "lambda", "power", "stderr", "reps"])
    for r in results:
        d = r.row()
        w.writerow([d["scenario"], d["method"], f"{d['lambda']:.6g}", f"{d['power']:.6g}",
                    f"{d['stderr']:.6g}", d["reps"]])
    return buf.getvalue()


def results_to_json(results):
    rows = [{k: (float(f"{v:.6g}") if isinstance(v, float) else v) for k, v in r.row().items()}
            for r in results]
    return json.dumps(rows, indent=2, sort_keys=True)


def default_threads():
    env = os.environ.get("OT_SYMMETRY_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class _Job:
    spec: ScenarioSpec
    methods: tuple
    alpha: float
    seed: int
    group: SymmetryGroup
    erd: str
    construction: str
    calibration: str
    B: int
    fixed_ref: object
    fixed_null: object
    sign_null: object
    hotelling_n: int | None = None


def _one_replication(job, rep):
    """Reject flags (one per method) for replication ``rep``."""
    spec = job.spec
    X = generate(spec, seeding.stream(job.seed, rep, seeding.SCENARIO))
    out = []
    ot_methods = [m for m in job.methods if m != HOTELLING]
    if ot_methods:
        ref = job.fixed_ref
        if ref is None:
            ref = build_reference(job.group, job.erd, spec.n, job.construction,
                                  seeding.stream(job.seed, rep, seeding.REFERENCE))
        need_signs = SIGN_TEST in ot_methods or job.group.kind != SPHERICAL
        signs, sr = signed_rank_parts(X, ref, seeding.stream(job.seed, rep, seeding.SIGNS), need_signs)
    p = spec.p
    for m in job.methods:
        if m == GWSR:
            _, q = gwsr_from_sum(sr.sum(axis=0), spec.n, ref)
            if job.calibration == "exact":
                null = job.fixed_null
                if null is None:
                    null = exact_null(ref, GWSR, job.B, seeding.stream(job.seed, rep, seeding.NULL))
                out.append(exact_p_value(null, float(q)) <= job.alpha)
            else:
                out.append(special.chi2_sf(float(q), p) <= job.alpha)
        elif m == SIGN_TEST:
            kind = job.group.kind
            T = sign_matrices(kind, signs, p).sum(axis=0) / np.sqrt(spec.n)
            q = float(sign_scalar(T, kind))
            if job.calibration == "exact" or sign_df(kind, p) is None:
                out.append(exact_p_value(job.sign_null, q) <= job.alpha)
            else:
                out.append(special.chi2_sf(q, sign_df(kind, p)) <= job.alpha)
        else:
            Y = X if job.hotelling_n is None else X[: job.hotelling_n]
            out.append(_hotelling_reject(Y, job.alpha, job.calibration))
    return out


def _hotelling_reject(Y, alpha, calibration):
    n, p = Y.shape
    xbar = Y.mean(axis=0)
    S = np.cov(Y, rowvar=False).reshape(p, p)
    t2 = float(n * xbar @ np.linalg.solve(S, xbar))
    if calibration == "exact":
        return hotelling_f_pvalue(t2, n, p) <= alpha
    return special.chi2_sf(t2, p) <= alpha


def _run_block(args):
    job, reps = args
    return [_one_replication(job, r) for r in reps]


def _tally(job, replications, threads):
    reps = list(range(replications))
    threads = max(1, int(threads or 1))
    if threads == 1 or replications < 2 * threads:
        flags = _run_block((job, reps))
    else:
        blocks = [reps[i::threads] for i in range(threads)]
        with ProcessPoolExecutor(threads) as ex:
            parts = list(ex.map(_run_block, [(job, b) for b in blocks]))
        flags = [None] * replications
        for b, part in zip(blocks, parts):
            for r, f in zip(b, part):
                flags[r] = f
    return np.asarray(flags, dtype=bool).sum(axis=0)


def _prepare(spec, methods, alpha, seed, group, erd, construction, calibration, B, hotelling_n=None):
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
    if group is None:
        group = SymmetryGroup.from_name(spec.group_kind, spec.p)
    elif isinstance(group, str):
        group = SymmetryGroup.from_name(group, spec.p)
    if calibration in (None, "auto"):
        calibration = "asymptotic" if spec.p <= 10 else "exact"
    fixed_ref = fixed_null = sign_null = None
    ot = [m for m in methods if m != HOTELLING]
    if ot and construction == HALTON:
        fixed_ref = build_reference(group, erd, spec.n, HALTON)
        if calibration == "exact" and GWSR in ot:
            fixed_null = exact_null(fixed_ref, GWSR, B, seeding.stream(seed, seeding.NULL))
    if SIGN_TEST in ot and (calibration == "exact" or group.kind not in (CENTRAL, SIGN, SPHERICAL)):
        sign_null = np.sort(null_sign_scalars(group, spec.n, B, seeding.stream(seed, seeding.NULL, 1)))
    return _Job(spec, tuple(methods), float(alpha), int(seed), group, erd, construction,
                calibration, int(B), fixed_ref, fixed_null, sign_null, hotelling_n)


def power_study(spec, methods=METHODS, replications=1000, alpha=0.05, seed=0, group=None,
                erd=GAUSSIAN, construction=HALTON, calibration="auto", B=1000, threads=1):
    """Empirical rejection rates of several tests on one scenario.

    Parameters
    ----------
    spec : ScenarioSpec
    methods : sequence of {"gwsr", "sign", "hotelling"}
    replications : int
        At least 100.
    alpha : float
    seed : int
        Replication r draws data, reference, tie-breaks and null from
        independent streams keyed by (seed, r), so results do not depend on
        ``threads``.
    group : SymmetryGroup or str, optional
        Defaults to the symmetry probed by the scenario.
    erd, construction : str
        ``random`` draws a fresh reference in every replication; ``halton``
        uses one fixed reference.
    calibration : {"auto", "asymptotic", "exact"}
        ``auto`` picks chi-square limits for p <= 10 and Monte-Carlo nulls of
        size ``B`` (F law for Hotelling's test) otherwise.
    threads : int
        Worker processes.

    Returns
    -------
    list of PowerResult
    """
    if int(replications) < 100:
        raise ValueError("replications must be at least 100")
    seed = seeding.resolve_seed(seed)
    job = _prepare(spec, methods, alpha, seed, group, erd, construction, calibration, B)
    counts = _tally(job, int(replications), threads)
    return [PowerResult(spec, m, int(replications), int(c)) for m, c in zip(job.methods, counts)]


def are_check(erd, group, shift, n_full, efficiency_ratio, replications=10_000, seed=0,
              law="epanechnikov", construction="random", threads=1, p=2, alpha=0.05):
    """GWSR on ``n_full`` observations against Hotelling's T^2 on a fraction of them.

    Both tests see the same replication sample; Hotelling's test uses its
    first ``round(efficiency_ratio * n_full)`` rows. Both are calibrated by
    their chi-square limits.

    Returns
    -------
    (PowerResult, PowerResult)
        GWSR result and Hotelling result.
    """
    if not 0 < efficiency_ratio <= 1:
        raise ValueError("efficiency_ratio must lie in (0, 1]")
    name = {"epanechnikov": "EpanechnikovShift", "gauss": "GaussShift", "gaussian": "GaussShift"}[law]
    spec = scenario(name, lam=shift, n=n_full, p=p)
    seed = seeding.resolve_seed(seed)
    m = int(round(efficiency_ratio * n_full))
    job = _prepare(spec, (GWSR, HOTELLING), alpha, seed, group, erd, construction, "asymptotic",
                   1000, hotelling_n=m)
    counts = _tally(job, int(replications), threads)
    reps = int(replications)
    hspec = ScenarioSpec(spec.name, m, spec.p, spec.params)
    return PowerResult(spec, GWSR, reps, int(counts[0])), PowerResult(hspec, HOTELLING, reps, int(counts[1]))
