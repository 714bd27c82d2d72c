"""Monte-Carlo harness: bias and overlap measurements, detectability, scaling.

Every experiment is a pure function of its config plus one master seed.
Randomness is split per purpose through the counter-based stream scheme in
``sampling.rng_from``: data streams depend only on (seed, cell, trial), never
on the estimator, so estimator comparisons on the same config are paired.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import erfcx
from scipy.stats import norm

from .families import FamilySpec, IndexSet
from .mixture import EMConfig, fit_gmm_em, gmm_estimator, gmm_estimator_shifted
from .sampling import AnomalySampler, rng_from, sample_asd, sample_gmm
from .scan import Budget, DEFAULT_BUDGET, ScanResult, glr_statistic, mle, regularized_submatrix_mle

SCHEMA_VERSION = 1

ESTIMATORS = ("mle", "gmm", "gmm_shifted", "regularized")

# purpose codes for the RNG stream tree
_STREAM_ANOMALY = 0
_STREAM_NOISE = 1
_STREAM_SEARCH = 2
_STREAM_NULL = 3
_STREAM_ALT_ANOMALY = 4
_STREAM_ALT_NOISE = 5
_STREAM_WASSERSTEIN = 6


# -- set overlap metrics ---------------------------------------------------------


def set_metrics(a: IndexSet, est: IndexSet) -> dict[str, float]:
    """F-measure, normalized intersection/error, and the size bias of est."""
    if len(a) == 0:
        raise ValueError("metrics require a nonempty reference anomaly")
    sa, se = a.as_set(), est.as_set()
    inter = len(sa & se)
    return {
        "f_measure": 2.0 * inter / (len(sa) + len(se)),
        "normalized_intersection": inter / len(sa),
        "normalized_error": len(sa ^ se) / len(sa),
        "size_bias": (len(se) - len(sa)) / a.universe_size,
    }


# -- report structures ------------------------------------------------------------


@dataclass(frozen=True)
class TrialRow:
    family: str
    n: int
    k: int
    mu: float
    trial: int
    estimator: str
    est_size: int
    f_measure: float
    norm_intersection: float
    norm_error: float
    size_bias: float
    score: float
    solver: str
    seed: int


@dataclass(frozen=True)
class CellAggregate:
    mu: float
    trials: int
    bias_mean: float
    bias_q1: float
    bias_q3: float
    f_mean: float
    intersection_mean: float
    error_mean: float
    wall_clock_s: float


_CSV_COLUMNS = [
    "family",
    "n",
    "k",
    "mu",
    "trial",
    "estimator",
    "est_size",
    "f_measure",
    "norm_intersection",
    "norm_error",
    "size_bias",
    "score",
    "solver",
    "seed",
]


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    schema_version: int
    config: dict
    cells: tuple[CellAggregate, ...]
    rows: tuple[TrialRow, ...]

    def cell_for(self, mu: float) -> CellAggregate:
        for c in self.cells:
            if c.mu == mu:
                return c
        raise KeyError(f"no cell for mu = {mu}")

    def summary_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "cells": [asdict(c) for c in self.cells],
        }

    def save(self, json_path, csv_path) -> None:
        payload = self.summary_dict()
        payload["trial_csv"] = str(csv_path)
        body = json.dumps(payload, indent=2, sort_keys=True)
        digest = hashlib.sha256(body.encode()).hexdigest()
        payload["content_hash"] = digest
        with open(json_path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_COLUMNS)
            for row in self.rows:
                d = asdict(row)
                writer.writerow([d[c] for c in _CSV_COLUMNS])

    @classmethod
    def load(cls, json_path, csv_path) -> "ExperimentReport":
        with open(json_path) as fh:
            payload = json.load(fh)
        rows = []
        with open(csv_path, newline="") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                rows.append(
                    TrialRow(
                        family=rec["family"],
                        n=int(rec["n"]),
                        k=int(rec["k"]),
                        mu=float(rec["mu"]),
                        trial=int(rec["trial"]),
                        estimator=rec["estimator"],
                        est_size=int(rec["est_size"]),
                        f_measure=float(rec["f_measure"]),
                        norm_intersection=float(rec["norm_intersection"]),
                        norm_error=float(rec["norm_error"]),
                        size_bias=float(rec["size_bias"]),
                        score=float(rec["score"]),
                        solver=rec["solver"],
                        seed=int(rec["seed"]),
                    )
                )
        cells = tuple(CellAggregate(**c) for c in payload["cells"])
        return cls(payload["schema_version"], payload["config"], cells, tuple(rows))


# -- bias experiment ---------------------------------------------------------------


@dataclass(frozen=True)
class BiasConfig:
    """One experiment grid: a family scanned over a range of means.

    ``anomaly_size`` overrides ``anomaly_frac`` when given.  When
    ``sample_family`` is set, anomalies are drawn uniformly from it instead
    of from the scanned family (used e.g. to plant anomalies inside one
    component of a disconnected graph).
    """

    family: FamilySpec
    n: int
    mu_grid: tuple[float, ...]
    trials: int
    estimator: str
    seed: int
    anomaly_frac: Optional[float] = 0.05
    anomaly_size: Optional[int] = None
    budget: Budget = DEFAULT_BUDGET
    em_config: EMConfig = EMConfig()
    band: str = "exact"
    sample_family: Optional[FamilySpec] = None

    def k(self) -> int:
        if self.anomaly_size is not None:
            return int(self.anomaly_size)
        k = int(round(self.anomaly_frac * self.n))
        if k < 1:
            raise ValueError("anomaly_frac * n must be at least 1")
        return k

    def describe(self) -> dict:
        d = {
            "family": self.family.kind,
            "n": self.n,
            "k": self.k(),
            "mu_grid": list(self.mu_grid),
            "trials": self.trials,
            "estimator": self.estimator,
            "seed": self.seed,
            "band": self.band,
        }
        if self.family.kind == "graph_cut":
            d["rho"] = self.family.rho
        if self.family.kind == "edge_dense":
            d["delta"] = self.family.delta
        if self.family.kind == "submatrix":
            d["rows"], d["cols"] = self.family.rows, self.family.cols
        return d


def _search_seed(master: int, *path: int) -> int:
    return int(rng_from(master, _STREAM_SEARCH, *path).integers(2**62))


def _run_estimator(
    x, config: BiasConfig, cell: int, trial: int
) -> ScanResult:
    sseed = _search_seed(config.seed, cell, trial)
    budget = replace(config.budget, seed=sseed)
    if config.estimator == "mle":
        return mle(x, config.family, budget)
    if config.estimator == "regularized":
        return regularized_submatrix_mle(x, budget)
    em = replace(config.em_config, seed=sseed)
    fit = fit_gmm_em(x, em)
    if config.estimator == "gmm":
        return gmm_estimator(x, config.family, fit, budget, band=config.band)
    if config.estimator == "gmm_shifted":
        return gmm_estimator_shifted(x, config.family, fit, budget)
    raise ValueError(f"unknown estimator {config.estimator!r}")


def _run_cell(
    config: BiasConfig, cell: int, mu: float, trials: Sequence[int]
) -> list[TrialRow]:
    sampler = AnomalySampler(config.sample_family or config.family, config.k())
    rows = []
    for trial in trials:
        anomaly = sampler.draw(rng_from(config.seed, _STREAM_ANOMALY, cell, trial))
        x = sample_asd(
            anomaly, mu, config.n, rng_from(config.seed, _STREAM_NOISE, cell, trial)
        )
        result = _run_estimator(x, config, cell, trial)
        m = set_metrics(anomaly, result.set)
        rows.append(
            TrialRow(
                family=config.family.kind,
                n=config.n,
                k=config.k(),
                mu=mu,
                trial=trial,
                estimator=config.estimator,
                est_size=len(result.set),
                f_measure=m["f_measure"],
                norm_intersection=m["normalized_intersection"],
                norm_error=m["normalized_error"],
                size_bias=m["size_bias"],
                score=result.score,
                solver=result.solver,
                seed=config.seed,
            )
        )
    return rows


def _cell_worker(payload: tuple) -> tuple[int, list[TrialRow]]:
    config, cell, mu, trials = payload
    return cell, _run_cell(config, cell, mu, list(trials))


def bias_experiment(config: BiasConfig, n_jobs: int = 1) -> ExperimentReport:
    """Sample, estimate and score ``trials`` times per mean in the grid."""
    if config.estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    if config.k() >= config.n:
        raise ValueError("anomaly size must be smaller than n")
    cells: list[CellAggregate] = []
    all_rows: list[TrialRow] = []
    trial_ids = list(range(config.trials))
    for cell, mu in enumerate(config.mu_grid):
        t0 = time.perf_counter()
        if n_jobs > 1:
            chunks = [
                (config, cell, mu, trial_ids[i::n_jobs]) for i in range(n_jobs)
            ]
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                parts = list(pool.map(_cell_worker, chunks))
            rows = [r for _, part in parts for r in part]
            rows.sort(key=lambda r: r.trial)  # deterministic regardless of scheduling
        else:
            rows = _run_cell(config, cell, mu, trial_ids)
        wall = time.perf_counter() - t0
        biases = np.array([r.size_bias for r in rows])
        cells.append(
            CellAggregate(
                mu=mu,
                trials=len(rows),
                bias_mean=float(biases.mean()),
                bias_q1=float(np.percentile(biases, 25)),
                bias_q3=float(np.percentile(biases, 75)),
                f_mean=float(np.mean([r.f_measure for r in rows])),
                intersection_mean=float(np.mean([r.norm_intersection for r in rows])),
                error_mean=float(np.mean([r.norm_error for r in rows])),
                wall_clock_s=wall,
            )
        )
        all_rows.extend(rows)
    return ExperimentReport(
        SCHEMA_VERSION, config.describe(), tuple(cells), tuple(all_rows)
    )


# -- detectability ------------------------------------------------------------------


@dataclass(frozen=True)
class MuDetectResult:
    mu_detect: float
    threshold: float
    error_target: float
    curve: tuple[tuple[float, float], ...]  # (mu, type-II error) pairs evaluated

    def __float__(self) -> float:
        return self.mu_detect


def estimate_mu_detect(
    family: FamilySpec,
    n: int,
    k: int,
    error_target: float = 0.01,
    trials_null: int = 1000,
    trials_alt: int = 1000,
    seed: int = 0,
    budget: Budget = DEFAULT_BUDGET,
    mu_max: float = 10.0,
    return_details: bool = False,
) -> Union[float, MuDetectResult]:
    """Smallest mean at which the GLR test beats both error targets.

    The null threshold is the empirical (1 - error_target)-quantile of the
    GLR statistic over ``trials_null`` pure-noise samples.  Type-II error at
    a candidate mean is the fraction of ``trials_alt`` alternative samples
    (fresh anomaly each trial) below that threshold.  Alternative samples
    share noise across candidate means, which makes the per-trial statistic
    monotone in mu, so the 0.1-grid can be bracketed by binary search; one
    final bisection refines to the 0.05 grid.
    """
    if min(trials_null, trials_alt) < 100:
        raise ValueError("need at least 100 trials per arm")
    if k >= n / 2:
        raise ValueError("anomaly fraction must stay below 1/2")
    null_stats = np.empty(trials_null)
    for t in range(trials_null):
        rng = rng_from(seed, _STREAM_NULL, t)
        null_stats[t] = glr_statistic(rng.standard_normal(n), family, budget)
    threshold = float(np.quantile(null_stats, 1.0 - error_target))

    sampler = AnomalySampler(family, k)
    anomalies = [
        sampler.draw(rng_from(seed, _STREAM_ALT_ANOMALY, t)) for t in range(trials_alt)
    ]
    noises = [
        rng_from(seed, _STREAM_ALT_NOISE, t).standard_normal(n)
        for t in range(trials_alt)
    ]

    curve: list[tuple[float, float]] = []

    def type2(mu: float) -> float:
        misses = 0
        for a, noise in zip(anomalies, noises):
            x = noise.copy()
            x[list(a.indices)] += mu
            if glr_statistic(x, family, budget) < threshold:
                misses += 1
        rate = misses / trials_alt
        curve.append((mu, rate))
        return rate

    grid = [round(0.1 * i, 10) for i in range(1, int(round(mu_max / 0.1)) + 1)]
    lo, hi = 0, len(grid) - 1
    if type2(grid[hi]) > error_target:
        raise RuntimeError(
            f"grid exhausted: type-II error still above {error_target} at mu = {mu_max}"
        )
    if type2(grid[lo]) <= error_target:
        best = grid[lo]
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if type2(grid[mid]) <= error_target:
                hi = mid
            else:
                lo = mid
        best = grid[hi]
    refined = round(best - 0.05, 10)
    if refined > 0 and type2(refined) <= error_target:
        best = refined
    curve.sort()
    if return_details:
        return MuDetectResult(best, threshold, error_target, tuple(curve))
    return best


# -- closed-form asymptotic bias of the unstructured MLE ------------------------------


def _mills(z: np.ndarray) -> np.ndarray:
    """phi(z) / (1 - Phi(z)), stable for large z via erfcx."""
    return math.sqrt(2.0 / math.pi) / erfcx(z / math.sqrt(2.0))


@dataclass(frozen=True)
class AsymptoticBias:
    t_star: float
    bias: float


def asymptotic_unstructured_bias(alpha: float, mu: float) -> AsymptoticBias:
    """Limit of the unstructured-MLE size bias from the threshold optimization.

    The score of thresholding at T converges to
    g(T) = [alpha (mu sf(T-mu) + pdf(T-mu)) + (1-alpha) pdf(T)]
           / sqrt(alpha sf(T-mu) + (1-alpha) sf(T)),
    whose maximizer T* yields bias
    alpha sf(T*-mu) + (1-alpha) sf(T*) - alpha.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    if mu <= 0:
        raise ValueError("mu must be positive")

    def g(t: float) -> float:
        sf1 = norm.sf(t - mu)
        sf0 = norm.sf(t)
        num = alpha * (mu * sf1 + norm.pdf(t - mu)) + (1 - alpha) * norm.pdf(t)
        den = math.sqrt(alpha * sf1 + (1 - alpha) * sf0)
        return num / den if den > 0 else 0.0

    lo, hi = -8.0, mu + 8.0
    ts = np.linspace(lo, hi, 3201)
    vals = np.array([g(t) for t in ts])
    i = int(np.argmax(vals))
    a = ts[max(i - 1, 0)]
    b = ts[min(i + 1, len(ts) - 1)]
    res = minimize_scalar(
        lambda t: -g(t), bounds=(a, b), method="bounded", options={"xatol": 1e-12}
    )
    t_star = float(res.x)

    # Brent localizes the max only to the floating-point plateau (~1e-8);
    # polishing the central-difference derivative to a root does better.
    h = 1e-5
    gprime = lambda t: (g(t + h) - g(t - h)) / (2 * h)
    d_lo, d_hi = gprime(t_star - 1e-3), gprime(t_star + 1e-3)
    if d_lo > 0 > d_hi:
        t_star = float(brentq(gprime, t_star - 1e-3, t_star + 1e-3, xtol=1e-13))
    deriv = gprime(t_star)
    if abs(deriv) > 1e-8:
        raise RuntimeError(
            f"threshold optimization failed: |g'(T*)| = {abs(deriv):.3g} > 1e-8"
        )
    bias = alpha * norm.sf(t_star - mu) + (1 - alpha) * norm.sf(t_star) - alpha
    return AsymptoticBias(t_star=t_star, bias=float(bias))


# -- Wasserstein --------------------------------------------------------------------


def wasserstein_1d(x: Sequence[float], y: Sequence[float]) -> float:
    """Exact 1-Wasserstein distance between equal-size empirical measures."""
    xa = np.sort(np.asarray(x, dtype=float))
    ya = np.sort(np.asarray(y, dtype=float))
    if xa.shape != ya.shape:
        raise ValueError(f"sample sizes differ: {xa.size} vs {ya.size}")
    return float(np.mean(np.abs(xa - ya)))


@dataclass(frozen=True)
class WassersteinScaling:
    pairs: tuple[tuple[float, float], ...]
    n_grid: tuple[int, ...]
    trials: int
    distances: tuple[tuple[float, ...], ...]  # [pair][n] mean distance
    slopes: tuple[float, ...]


def wasserstein_scaling(
    pairs: Sequence[tuple[float, float]],
    n_grid: Sequence[int],
    trials: int,
    seed: int = 0,
) -> WassersteinScaling:
    """Log-log slope of the GMM-vs-unstructured-ASD distance against n."""
    n_grid = tuple(int(n) for n in n_grid)
    if max(n_grid) < 100 * min(n_grid):
        raise ValueError("n grid must span at least two decades")
    distances = []
    slopes = []
    for pi, (alpha, mu) in enumerate(pairs):
        per_n = []
        for ni, n in enumerate(n_grid):
            k = max(int(round(alpha * n)), 1)
            acc = 0.0
            for t in range(trials):
                rng = rng_from(seed, _STREAM_WASSERSTEIN, pi, ni, t)
                gmm_obs, _ = sample_gmm(alpha, mu, n, rng)
                idx = np.sort(rng.choice(n, size=k, replace=False))
                a = IndexSet(tuple(int(i) for i in idx), n)
                asd_obs = sample_asd(a, mu, n, rng)
                acc += wasserstein_1d(gmm_obs.values, asd_obs.values)
            per_n.append(acc / trials)
        slope = float(
            np.polyfit(np.log(np.array(n_grid, dtype=float)), np.log(per_n), 1)[0]
        )
        distances.append(tuple(per_n))
        slopes.append(slope)
    return WassersteinScaling(
        tuple((float(a), float(m)) for a, m in pairs),
        n_grid,
        trials,
        tuple(distances),
        tuple(slopes),
    )
