"""Monte Carlo coverage of the concentration inequalities for the KS class.

Two suites:

* i.i.d. draws from the uniform law on ``{1, ..., k}``; the event
  ``D_KS(mu_hat, mu) <= 2 * Rhat + delta`` is checked against the guarantee
  ``1 - exp(-n delta^2 / 2)``, with ``Rhat`` the empirical complexity of the
  replicate's own sample. A lower-tail event is checked alongside.
* a stationary Gaussian AR(1); the event
  ``D_KS(mu_hat, mu) <= 2 R_s + 4 / sqrt(n) + delta`` with ``R_s`` the
  complexity at the blocked size, against
  ``1 - 2 exp(-s delta^2 / 2) - 2 s beta(floor(sqrt n))``.

The KS class has ``b = 1`` throughout.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtr

from .bounds import ar1_beta_coefficient, lemma1_upper_prob, lemma2_blocked_prob
from .rademacher import KsIndicators, blocked_sample_size, empirical_rademacher, population_rademacher
from .synthgen import Ar1Spec, Seed, derive_seed, make_rng, sample_ar1


@dataclass
class CoverageRow:
    suite: str
    delta: float
    empirical: float
    guaranteed: float
    slack: float
    passed: bool
    tail: str = "upper"

    def to_dict(self) -> dict:
        return asdict(self)


def ks_to_discrete_uniform(x: np.ndarray, k: int) -> float:
    """Exact KS distance between the empirical law of ``x`` and uniform on ``{1..k}``."""
    counts = np.bincount(x.astype(int), minlength=k + 1)[1 : k + 1]
    ecdf = np.cumsum(counts) / x.size
    return float(np.abs(ecdf - np.arange(1, k + 1) / k).max())


def ks_to_normal(x: np.ndarray, mean: float, sd: float) -> float:
    """Exact KS distance between the empirical law of ``x`` and ``N(mean, sd^2)``."""
    xs = np.sort(x)
    n = xs.size
    F = ndtr((xs - mean) / sd)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def iid_coverage(
    n: int = 100,
    support: int = 10,
    deltas=(0.1, 0.2, 0.3),
    replicates: int = 1000,
    sign_draws: int = 256,
    slack: float = 0.03,
    seed: Seed = 0,
) -> list[CoverageRow]:
    dist = np.empty(replicates)
    comp = np.empty(replicates)
    fc = KsIndicators()
    for r in range(replicates):
        rng = make_rng(derive_seed(seed, r))
        x = rng.integers(1, support + 1, size=n).astype(float)
        dist[r] = ks_to_discrete_uniform(x, support)
        comp[r] = empirical_rademacher(x, fc, sign_draws, rng).value
    rows = []
    # sup_f |E f| over half-line indicators is 1
    for d in deltas:
        guar = lemma1_upper_prob(n, 1.0, d)
        up = float(np.mean(dist <= 2.0 * comp + d))
        lo = float(np.mean(dist >= comp / 2.0 - 1.0 / (2.0 * math.sqrt(n)) - d))
        rows.append(CoverageRow("iid", d, up, guar, slack, up >= guar - slack, "upper"))
        rows.append(CoverageRow("iid", d, lo, guar, slack, lo >= guar - slack, "lower"))
    return rows


def blocked_coverage(
    n: int = 100,
    theta: float = 0.5,
    deltas=(0.5, 1.0),
    replicates: int = 1000,
    complexity_draws: int = 2000,
    slack: float = 0.03,
    seed: Seed = 0,
) -> list[CoverageRow]:
    spec = Ar1Spec(theta)
    mean, var = spec.stationary_moments()
    sd = math.sqrt(var)
    s = blocked_sample_size(n)
    beta = ar1_beta_coefficient(theta, math.isqrt(n))

    def marginal(k, rng):
        return rng.normal(mean, sd, size=(k, 1))

    R_s = population_rademacher(
        marginal, s, KsIndicators(), data_draws=complexity_draws, seed=derive_seed(seed, 1)
    ).value
    dist = np.empty(replicates)
    for r in range(replicates):
        x = sample_ar1(spec, n, derive_seed(seed, 0, r))[:, 0]
        dist[r] = ks_to_normal(x, mean, sd)
    radius_base = 2.0 * R_s + 4.0 / math.sqrt(n)
    rows = []
    for d in deltas:
        guar = lemma2_blocked_prob(n, 1.0, d, beta)
        emp = float(np.mean(dist <= radius_base + d))
        rows.append(CoverageRow("blocked", d, emp, guar, slack, emp >= guar - slack))
    return rows
