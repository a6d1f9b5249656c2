"""Rejection ABC with deterministic, schedule-independent parallelism.

Proposal ``t`` of a run draws its parameter and synthetic data from the
stream ``derive_seed(seed, t)``, so the scored list is identical for any
number of workers. Acceptance is applied afterwards from the full score
vector, under a fixed, quantile or schedule threshold rule.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import lfilter

from .synthgen import (
    ConfigurationError,
    Seed,
    as_sample,
    delay_reconstruct,
    derive_seed,
    make_rng,
)

log = logging.getLogger(__name__)


class UndefinedPosteriorError(RuntimeError):
    """Raised when a posterior functional is requested but nothing was accepted."""


# --------------------------------------------------------------------------
# priors and simulators
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PriorSpec:
    """``normal`` uses ``(a, b) = (mean, sd)``; ``uniform`` uses ``(a, b) = (lo, hi)``."""

    family: str = "normal"
    a: float = 0.0
    b: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if self.family == "normal":
            if not self.b > 0:
                raise ConfigurationError("normal prior needs sd > 0")
        elif self.family == "uniform":
            if not self.a < self.b:
                raise ConfigurationError("uniform prior needs lo < hi")
        else:
            raise ConfigurationError(f"unknown prior family {self.family!r}")
        if self.dim < 1:
            raise ConfigurationError("prior dimension must be >= 1")

    def sample(self, rng: np.random.Generator):
        if self.family == "normal":
            v = rng.normal(self.a, self.b, size=self.dim)
        else:
            v = rng.uniform(self.a, self.b, size=self.dim)
        return float(v[0]) if self.dim == 1 else v

    def cdf(self, x: float) -> float:
        if self.family == "normal":
            return 0.5 * math.erfc(-(x - self.a) / (self.b * math.sqrt(2.0)))
        return min(1.0, max(0.0, (x - self.a) / (self.b - self.a)))


class GaussianLocationSimulator:
    """``m`` draws from ``N(theta * direction, covariance)``."""

    def __init__(self, direction, covariance):
        self.direction = np.atleast_1d(np.asarray(direction, dtype=float))
        self.covariance = np.atleast_2d(np.asarray(covariance, dtype=float))
        try:
            self._chol = np.linalg.cholesky(self.covariance)
        except np.linalg.LinAlgError as exc:
            raise ConfigurationError("model covariance is not positive definite") from exc

    def __call__(self, theta, m: int, rng: np.random.Generator) -> np.ndarray:
        g = rng.standard_normal((m, self.direction.size))
        return theta * self.direction + g @ self._chol.T


class Ar1Simulator:
    """AR(1) path ``z_t = psi + theta z_{t-1} + sigma g_t``, ``z_0 ~ N(m0, s0^2)``.

    With ``delay=True`` the path ``z_0..z_m`` is returned as its ``m`` delay pairs.
    Proposals with ``|theta| >= 1`` are simulated all the same (the recursion
    is finite for finite ``m``).
    """

    def __init__(self, sigma: float = 1.0, psi: float = 0.0, init=(0.0, 1.0), delay: bool = True):
        self.sigma = sigma
        self.psi = psi
        self.init = tuple(init)
        self.delay = delay

    def __call__(self, theta, m: int, rng: np.random.Generator) -> np.ndarray:
        eps = rng.standard_normal(m + 1)
        x0 = self.init[0] + self.init[1] * eps[0]
        drive = self.psi + self.sigma * eps[1:]
        path, _ = lfilter([1.0], [1.0, -theta], drive, zi=[theta * x0])
        series = np.concatenate([[x0], path])
        return delay_reconstruct(series) if self.delay else series[1:, None]


# --------------------------------------------------------------------------
# threshold rules
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedThreshold:
    eps: float

    def __post_init__(self):
        if self.eps < 0:
            raise ConfigurationError("threshold must be >= 0")


@dataclass(frozen=True)
class QuantileThreshold:
    q: float

    def __post_init__(self):
        if not 0 < self.q <= 1:
            raise ConfigurationError("quantile must lie in (0, 1]")


@dataclass(frozen=True)
class ScheduleThreshold:
    """Threshold ``eps_star + eps_bar``."""

    eps_star: float
    eps_bar: float

    def __post_init__(self):
        if self.eps_star < 0 or not self.eps_bar > 0:
            raise ConfigurationError("schedule needs eps_star >= 0 and eps_bar > 0")


def quantile_keep_count(q: float, T: int) -> int:
    return int(math.floor(q * T + 0.5))


# --------------------------------------------------------------------------
# run configuration and result
# --------------------------------------------------------------------------

@dataclass
class AbcConfig:
    prior: PriorSpec
    simulator: Callable
    discrepancy: object
    threshold: object
    T: int
    m: int
    seed: Seed = 0
    workers: int = 1

    def __post_init__(self):
        if self.T < 1:
            raise ConfigurationError("budget T must be >= 1")
        if self.m < 1:
            raise ConfigurationError("synthetic sample size m must be >= 1")


@dataclass
class AbcResult:
    theta: np.ndarray
    scores: np.ndarray
    accepted_mask: np.ndarray
    threshold_used: float
    n_failed: int = 0
    errors: list = field(default_factory=list)
    eval_seconds: float = float("nan")

    @property
    def accepted(self) -> np.ndarray:
        return self.theta[self.accepted_mask]

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted_mask.mean())

    @property
    def posterior_defined(self) -> bool:
        return bool(self.accepted_mask.any())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["proposal", "theta", "score", "accepted"])
        for t, (th, s, a) in enumerate(zip(self.theta, self.scores, self.accepted_mask)):
            w.writerow([t, repr(float(th)), repr(float(s)), int(a)])
        return buf.getvalue()

    def summary(self, theta0: float | None = None) -> dict:
        out = {
            "acceptance_rate": self.acceptance_rate,
            "threshold_used": self.threshold_used,
            "n_accepted": int(self.accepted_mask.sum()),
            "n_proposals": int(self.theta.size),
            "n_failed": self.n_failed,
            "posterior_defined": self.posterior_defined,
        }
        if theta0 is not None:
            out["mse"] = posterior_mse(self, theta0) if self.posterior_defined else None
        return out

    def to_json(self, theta0: float | None = None) -> str:
        return json.dumps(self.summary(theta0), indent=2, sort_keys=True)


def result_from_csv(text: str) -> AbcResult:
    rows = list(csv.DictReader(io.StringIO(text)))
    theta = np.array([float(r["theta"]) for r in rows])
    scores = np.array([float(r["score"]) for r in rows])
    mask = np.array([r["accepted"] == "1" for r in rows])
    thr = float(scores[mask].max()) if mask.any() else float("nan")
    return AbcResult(theta, scores, mask, thr, int(np.isnan(scores).sum()))


# --------------------------------------------------------------------------
# proposal scoring
# --------------------------------------------------------------------------

def _score_chunk(y, prior, simulator, discrepancies, m, seed, indices):
    """Score proposals ``indices`` under every discrepancy (worker entry point)."""
    bound = [d.bind(y) for d in discrepancies]
    k = len(indices)
    theta = np.empty(k)
    scores = np.full((len(discrepancies), k), np.nan)
    errors = []
    spent = np.zeros(len(discrepancies))
    for j, t in enumerate(indices):
        rng = make_rng(derive_seed(seed, t))
        th = prior.sample(rng)
        theta[j] = th
        try:
            z = simulator(th, m, rng)
            for i, f in enumerate(bound):
                start = time.perf_counter()
                scores[i, j] = f(z)
                spent[i] += time.perf_counter() - start
        except Exception as exc:  # recorded per proposal, never fatal
            errors.append((int(t), repr(exc)))
    return theta, scores, errors, spent


def _chunks(T: int, workers: int) -> list[np.ndarray]:
    size = max(1, math.ceil(T / (4 * workers)))
    return [np.arange(s, min(T, s + size)) for s in range(0, T, size)]


def score_proposals(
    y,
    prior: PriorSpec,
    simulator: Callable,
    discrepancies: Sequence,
    T: int,
    m: int,
    seed: Seed,
    workers: int = 1,
):
    """Simulate ``T`` proposals once and score each under every discrepancy.

    Returns ``(theta, scores, errors, seconds_per_eval)`` with ``scores`` of
    shape ``(len(discrepancies), T)``; failed proposals score NaN.
    """
    y = as_sample(y, "y")
    if workers <= 1:
        theta, scores, errors, spent = _score_chunk(
            y, prior, simulator, discrepancies, m, seed, np.arange(T)
        )
    else:
        chunks = _chunks(T, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    _score_chunk,
                    *zip(*[(y, prior, simulator, discrepancies, m, seed, c) for c in chunks]),
                )
            )
        theta = np.concatenate([p[0] for p in parts])
        scores = np.concatenate([p[1] for p in parts], axis=1)
        errors = [e for p in parts for e in p[2]]
        spent = np.sum([p[3] for p in parts], axis=0)
    n_ok = T - len(errors)
    per_eval = spent / max(n_ok, 1)
    return theta, scores, errors, per_eval


def apply_threshold(scores: np.ndarray, rule) -> tuple[np.ndarray, float]:
    """Accepted mask and realized threshold for a score vector.

    Under the quantile rule proposals are ordered by (score, index) and the
    first ``round(q T)`` kept; NaN scores are never accepted.
    """
    scores = np.asarray(scores, dtype=float)
    valid = ~np.isnan(scores)
    if isinstance(rule, QuantileThreshold):
        keep = quantile_keep_count(rule.q, scores.size)
        order = np.argsort(np.where(valid, scores, np.inf), kind="stable")
        order = order[: min(keep, int(valid.sum()))]
        mask = np.zeros(scores.size, dtype=bool)
        mask[order] = True
        thr = float(scores[order[-1]]) if order.size else float("nan")
        return mask, thr
    if isinstance(rule, FixedThreshold):
        eps = rule.eps
    elif isinstance(rule, ScheduleThreshold):
        eps = rule.eps_star + rule.eps_bar
    else:
        raise ConfigurationError(f"unknown threshold rule {rule!r}")
    mask = valid & (np.where(valid, scores, np.inf) <= eps)
    return mask, float(eps)


def run_rejection_multi(
    y, prior, simulator, discrepancies, threshold, T, m, seed=0, workers=1
) -> list[AbcResult]:
    """Rejection ABC under several discrepancies sharing one set of proposals.

    Each result equals what :func:`run_rejection` returns for that
    discrepancy with the same seed.
    """
    theta, scores, errors, per_eval = score_proposals(
        y, prior, simulator, discrepancies, T, m, seed, workers
    )
    if errors:
        log.warning("%d of %d proposals failed to simulate or score", len(errors), T)
    out = []
    for i in range(len(discrepancies)):
        mask, thr = apply_threshold(scores[i], threshold)
        res = AbcResult(theta, scores[i], mask, thr, len(errors), errors, float(per_eval[i]))
        if not res.posterior_defined:
            log.info("no proposal accepted under %r; posterior undefined", discrepancies[i])
        out.append(res)
    return out


def run_rejection(cfg: AbcConfig, y) -> AbcResult:
    """Run rejection ABC for observed data ``y`` under ``cfg``."""
    return run_rejection_multi(
        y, cfg.prior, cfg.simulator, [cfg.discrepancy], cfg.threshold,
        cfg.T, cfg.m, cfg.seed, cfg.workers,
    )[0]


# --------------------------------------------------------------------------
# posterior functionals and studies
# --------------------------------------------------------------------------

def posterior_mse(result: AbcResult, theta0: float) -> float:
    """Mean of ``(theta - theta0)^2`` over the accepted parameters."""
    acc = result.accepted
    if acc.size == 0:
        raise UndefinedPosteriorError("no accepted parameters; posterior undefined")
    return float(np.mean((acc - theta0) ** 2))


@dataclass
class ReplicateStudy:
    mse: np.ndarray
    results: list

    @property
    def mean(self) -> float:
        return float(self.mse.mean())

    @property
    def stderr(self) -> float:
        if self.mse.size < 2:
            return 0.0
        return float(self.mse.std(ddof=1) / math.sqrt(self.mse.size))


def replicate_study(
    cfg: AbcConfig,
    replicates: int,
    data_generator: Callable,
    theta0: float,
    keep_results: bool = False,
) -> ReplicateStudy:
    """Independent ABC studies on ``replicates`` fresh observed datasets.

    Replicate ``r`` observes ``data_generator(derive_seed(cfg.seed, r, 0))``
    and runs ABC with master seed ``derive_seed(cfg.seed, r, 1)``.
    """
    if replicates < 1:
        raise ConfigurationError("replicates must be >= 1")
    mses = np.empty(replicates)
    kept = []
    for r in range(replicates):
        y = data_generator(derive_seed(cfg.seed, r, 0))
        run_cfg = AbcConfig(
            cfg.prior, cfg.simulator, cfg.discrepancy, cfg.threshold,
            cfg.T, cfg.m, derive_seed(cfg.seed, r, 1), cfg.workers,
        )
        try:
            res = run_rejection(run_cfg, y)
            mses[r] = posterior_mse(res, theta0)
        except Exception as exc:
            raise RuntimeError(f"replicate {r} failed: {exc}") from exc
        if keep_results:
            kept.append(res)
    return ReplicateStudy(mses, kept)


def support_check(result: AbcResult, oracle: Callable[[float], float], radius: float) -> float:
    """Fraction of accepted parameters whose population discrepancy is ``<= radius``."""
    acc = result.accepted
    if acc.size == 0:
        return float("nan")
    if math.isinf(radius) and radius > 0:
        return 1.0
    vals = np.array([oracle(th) for th in acc])
    return float(np.mean(vals <= radius))
