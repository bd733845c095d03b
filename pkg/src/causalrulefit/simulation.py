"""Synthetic benchmark scenarios and the replication harness.

Twelve scenarios pair one of three mean surfaces with one of four effect
surfaces (scenario s uses mean ``ceil(s / 4)`` and effect ``((s - 1) mod 4) + 1``):

    mu1 = -0.25 + 0.5 * (x1 + x2 + x3)
    mu2 = 0.7 * 1[x1 > -1] - 1.4 * 1[x2 > 0] + 0.7 * 1[x3 > 1]
    mu3 = sin^2(x1 + x3) - 2 * x2 * exp(-(x4 - x5)^2)

    tau1 = 2
    tau2 = x1 + x2 + x3 - x4 + x5
    tau3 = 2 * sum_{j<=5} 1[xj > 0] - 5
    tau4 = (x1^2 + x3^2 + x5^2 + 4 * x2 * (1 - x4) - 4) / sqrt(2)

Odd-numbered covariates are standard normal, even-numbered are Bernoulli(1/2).
Outcomes are ``y = mu + (t - 1/2) * tau + eps`` with ``eps ~ N(0, 0.25)``.
Randomized designs use pi = 1/2; observational designs use
``pi = logistic(mu - tau / 2)``.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .data import Dataset, format_real
from .errors import ConfigError, ShapeError, ValidationError
from .model import FitConfig, fit, predict_hte
from .transform import PropensitySource

__all__ = [
    "ScenarioSpec", "SimulatedData", "NOISE_SD",
    "gen_covariates", "mu", "tau", "assign_treatment", "gen_scenario", "mse",
    "proposed_estimator", "difference_in_means_estimator",
    "constant_zero_estimator", "oracle_estimator",
    "ReplicationResult", "BenchmarkResult", "run_benchmark",
]

NOISE_SD = 0.5
DESIGNS = ("rct", "observational")


@dataclass(frozen=True)
class ScenarioSpec:
    """One benchmark cell: scenario number, design, and data sizes."""

    scenario: int
    design: str = "rct"
    n: int = 600
    p: int = 50
    seed: int = 0
    noise_sd: float = NOISE_SD

    def __post_init__(self):
        if not 1 <= self.scenario <= 12:
            raise ConfigError(f"scenario must be 1..12, got {self.scenario}")
        if self.design not in DESIGNS:
            raise ConfigError(
                f"design must be one of {DESIGNS}, got {self.design!r}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.p < 5:
            raise ConfigError(f"p must be >= 5, got {self.p}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.noise_sd < 0.0:
            raise ConfigError(f"noise_sd must be >= 0, got {self.noise_sd}")


@dataclass(frozen=True)
class SimulatedData:
    """A drawn dataset plus the ground truth it was drawn from."""

    dataset: Dataset
    true_tau: np.ndarray
    true_mu: np.ndarray


def gen_covariates(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    """Draw covariates column by column: odd j normal, even j Bernoulli(1/2)."""
    X = np.empty((n, p))
    for j in range(p):
        if j % 2 == 0:  # 1-based odd column
            X[:, j] = rng.standard_normal(n)
        else:
            X[:, j] = rng.integers(0, 2, size=n)
    return X


def _as_rows(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] < 5:
        raise ShapeError(f"need rows with at least 5 features, got shape {x.shape}")
    return x, single


def mu(scenario: int, x):
    """Mean surface of the scenario, for a row or matrix of rows."""
    X, single = _as_rows(x)
    which = (scenario - 1) // 4
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    if which == 0:
        out = -0.25 + 0.5 * (x1 + x2 + x3)
    elif which == 1:
        out = (0.7 * (x1 > -1.0) - 1.4 * (x2 > 0.0) + 0.7 * (x3 > 1.0))
    else:
        x4, x5 = X[:, 3], X[:, 4]
        out = np.sin(x1 + x3) ** 2 - 2.0 * x2 * np.exp(-((x4 - x5) ** 2))
    return float(out[0]) if single else out


def tau(scenario: int, x):
    """Effect surface of the scenario, for a row or matrix of rows."""
    X, single = _as_rows(x)
    which = (scenario - 1) % 4
    x1, x2, x3, x4, x5 = (X[:, j] for j in range(5))
    if which == 0:
        out = np.full(X.shape[0], 2.0)
    elif which == 1:
        out = x1 + x2 + x3 - x4 + x5
    elif which == 2:
        out = 2.0 * (X[:, :5] > 0.0).sum(axis=1) - 5.0
    else:
        out = (x1 ** 2 + x3 ** 2 + x5 ** 2 + 4.0 * x2 * (1.0 - x4) - 4.0) \
            / math.sqrt(2.0)
    return float(out[0]) if single else out


def _logistic(eta: np.ndarray) -> np.ndarray:
    # tanh form of 1 / (1 + exp(-eta)): stable for large |eta|
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def assign_treatment(design: str, mu_vals, tau_vals,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw arms; returns (t, pi).

    Randomized designs use pi = 1/2 everywhere; observational designs use
    ``pi = logistic(mu - tau / 2)``, confounding assignment with the outcome.
    """
    if design not in DESIGNS:
        raise ConfigError(f"design must be one of {DESIGNS}, got {design!r}")
    mu_vals = np.asarray(mu_vals, dtype=np.float64)
    if design == "rct":
        pi = np.full(mu_vals.shape[0], 0.5)
    else:
        pi = _logistic(mu_vals - np.asarray(tau_vals) / 2.0)
        # logistic output touches {0, 1} only at |eta| ~ 37, far outside
        # these surfaces' range, so pi is a valid propensity
    t = (rng.random(mu_vals.shape[0]) < pi).astype(np.int64)
    return t, pi


def gen_scenario(spec: ScenarioSpec) -> SimulatedData:
    """Draw one dataset; deterministic given ``spec``."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(spec.seed)))
    X = gen_covariates(spec.n, spec.p, rng)
    mu_vals = mu(spec.scenario, X)
    tau_vals = tau(spec.scenario, X)
    t, pi = assign_treatment(spec.design, mu_vals, tau_vals, rng)
    eps = spec.noise_sd * rng.standard_normal(spec.n)
    y = mu_vals + (t - 0.5) * tau_vals + eps
    ds = Dataset(y=y, t=t, X=X,
                 feature_names=tuple(f"x{j + 1}" for j in range(spec.p)),
                 pscore=pi)
    return SimulatedData(dataset=ds, true_tau=tau_vals, true_mu=mu_vals)


def mse(truth, estimate) -> float:
    """Mean squared error between two equal-length vectors."""
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if truth.shape != estimate.shape or truth.ndim != 1:
        raise ShapeError(
            f"shapes {truth.shape} and {estimate.shape} must match and be 1-d")
    if truth.size < 1:
        raise ValidationError("mse needs at least one element")
    d = truth - estimate
    return float(d @ d / d.size)


# ---------------------------------------------------------------------------
# estimators: callable(train, seed) -> predict(X); the harness threads a
# replication-specific seed so stochastic estimators stay reproducible

Estimator = Callable[[SimulatedData, int], Callable[[np.ndarray], np.ndarray]]


def proposed_estimator(cfg: FitConfig = FitConfig()) -> Estimator:
    """The full pipeline, consuming the stored (true) propensity column."""

    def estimate(train: SimulatedData, seed: int):
        model = fit(train.dataset, PropensitySource(),
                    replace(cfg, seed=seed))
        return lambda X: predict_hte(model, X)

    return estimate


def difference_in_means_estimator() -> Estimator:
    """Constant effect: mean treated outcome minus mean control outcome."""

    def estimate(train: SimulatedData, seed: int):
        ds = train.dataset
        diff = float(ds.y[ds.t == 1].mean() - ds.y[ds.t == 0].mean())
        return lambda X: np.full(np.asarray(X).shape[0], diff)

    return estimate


def constant_zero_estimator() -> Estimator:
    """The intercept-only model's effect surface: identically zero."""

    def estimate(train: SimulatedData, seed: int):
        return lambda X: np.zeros(np.asarray(X).shape[0])

    return estimate


def oracle_estimator(scenario: int) -> Estimator:
    """Ground truth effect surface; the benchmark's floor."""

    def estimate(train: SimulatedData, seed: int):
        return lambda X: tau(scenario, X)

    return estimate


@dataclass(frozen=True)
class ReplicationResult:
    scenario: int
    design: str
    p: int
    replication: int
    seed: int
    mse: float | None
    status: str


@dataclass(frozen=True)
class BenchmarkResult:
    """All replication rows plus the median over successful ones."""

    rows: tuple[ReplicationResult, ...]
    median_mse: float
    failures: int

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["scenario", "design", "p", "replication", "seed", "mse", "status"])
            for r in self.rows:
                writer.writerow([
                    r.scenario, r.design, r.p, r.replication, r.seed,
                    "" if r.mse is None else format_real(r.mse), r.status])


def _derived_seed(base: int, rep: int, stream: int) -> int:
    seq = np.random.SeedSequence([base, rep, stream])
    return int(seq.generate_state(1, np.uint64)[0])


def run_benchmark(spec: ScenarioSpec, cfg: FitConfig, replications: int,
                  estimator: Estimator | None = None) -> BenchmarkResult:
    """Replicate train -> fit -> score on an independent test draw.

    Each replication derives fresh train, test, and fit seeds from
    ``spec.seed`` and the replication index; the test set has the training
    size.  A replication that raises is recorded with status
    ``error:<ExceptionType>`` and excluded from the median.

    Args:
        spec: The benchmark cell.
        cfg: Pipeline configuration for the proposed estimator.
        replications: Number of train/test draws.
        estimator: Alternative estimator; defaults to the proposed pipeline.

    Returns:
        Per-replication rows plus the median MSE over successes.
    """
    if replications < 1:
        raise ConfigError(f"replications must be >= 1, got {replications}")
    if estimator is None:
        estimator = proposed_estimator(cfg)
    rows = []
    scores = []
    for rep in range(replications):
        train_seed = _derived_seed(spec.seed, rep, 0)
        test_seed = _derived_seed(spec.seed, rep, 1)
        fit_seed = _derived_seed(spec.seed, rep, 2)
        train = gen_scenario(replace(spec, seed=train_seed))
        test = gen_scenario(replace(spec, seed=test_seed))
        try:
            predictor = estimator(train, fit_seed)
            est = np.asarray(predictor(test.dataset.X), dtype=np.float64)
            score = mse(test.true_tau, est)
        except Exception as exc:  # record and continue; harness must finish
            rows.append(ReplicationResult(
                scenario=spec.scenario, design=spec.design, p=spec.p,
                replication=rep, seed=train_seed, mse=None,
                status=f"error:{type(exc).__name__}"))
            continue
        scores.append(score)
        rows.append(ReplicationResult(
            scenario=spec.scenario, design=spec.design, p=spec.p,
            replication=rep, seed=train_seed, mse=score, status="ok"))
    median = float(np.median(scores)) if scores else math.nan
    return BenchmarkResult(rows=tuple(rows), median_mse=median,
                           failures=replications - len(scores))
