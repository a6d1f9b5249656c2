"""Empirical Rademacher complexity with exact inner suprema, plus closed-form bounds.

For a fixed sample ``x`` and sign vector ``eps`` the supremum
``sup_f |(1/n) sum_i eps_i f(x_i)|`` is computed exactly for each supported
class; averaging over sign vectors (by Monte Carlo, or exhaustively for
``n <= 12``) gives the empirical complexity conditional on ``x``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .discrepancy import Kernel
from .synthgen import Seed, as_sample, make_rng

EXHAUSTIVE_MAX_N = 12
DEFAULT_DRAWS = 256


@dataclass(frozen=True)
class RkhsBall:
    """Unit ball of the RKHS of ``kernel``."""

    kernel: Kernel
    requires_1d = False


@dataclass(frozen=True)
class KsIndicators:
    """Half-line indicators ``1(-inf, a]``; the class behind Kolmogorov-Smirnov."""

    requires_1d = True
    b = 1.0


@dataclass(frozen=True)
class SupNormBall:
    """All functions with ``|f| <= b``; the class behind total variation."""

    b: float = 1.0
    requires_1d = False

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("sup-norm radius b must be positive")


@dataclass(frozen=True)
class LipschitzPinned1D:
    """1-Lipschitz functions on R with ``f = 0`` at the leftmost sample point.

    Pinning removes constants, which would make the supremum infinite; an IPS
    between probability measures does not see constants anyway.
    """

    requires_1d = True


@dataclass(frozen=True)
class RademacherEstimate:
    value: float
    mc_draws: int
    mc_stderr: float
    exhaustive: bool = False


def rademacher_signs(n: int, draws: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=(draws, n), dtype=np.int8) * 2.0 - 1.0


def all_sign_vectors(n: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=n)))


def _tie_groups(values: np.ndarray) -> np.ndarray:
    """Group id for each row, identical rows sharing an id."""
    _, inv = np.unique(values, axis=0, return_inverse=True)
    return inv.ravel()


def _group_sums(eps: np.ndarray, groups: np.ndarray) -> np.ndarray:
    n_groups = groups.max() + 1
    out = np.zeros((eps.shape[0], n_groups))
    np.add.at(out.T, groups, eps.T)
    return out


def inner_sup(x, fc, eps: np.ndarray) -> np.ndarray:
    """Exact ``sup_f |(1/n) sum_i eps_i f(x_i)|`` for each row of ``eps``."""
    x = as_sample(x)
    eps = np.atleast_2d(np.asarray(eps, dtype=float))
    n = x.shape[0]
    if fc.requires_1d and x.shape[1] != 1:
        raise ValueError(f"{type(fc).__name__} needs one-dimensional data")

    if isinstance(fc, RkhsBall):
        gram = fc.kernel.gram(x, x)
        quad = np.einsum("ri,ij,rj->r", eps, gram, eps)
        return np.sqrt(np.maximum(quad, 0.0)) / n

    if isinstance(fc, KsIndicators):
        # prefixes may only cut between distinct values
        order = np.argsort(x[:, 0], kind="stable")
        xs = x[order, 0]
        sums = np.cumsum(eps[:, order], axis=1)
        cut = np.append(xs[1:] != xs[:-1], True)
        prefix = sums[:, cut]
        return np.abs(prefix).max(axis=1) / n

    if isinstance(fc, SupNormBall):
        g = _group_sums(eps, _tie_groups(x))
        return fc.b * np.abs(g).sum(axis=1) / n

    if isinstance(fc, LipschitzPinned1D):
        # with v_1 = 0 and increments d_j, sum_i eps_i v_i = sum_j d_j S_j where
        # S_j is the sum of eps beyond sorted position j; optimum d_j = gap_j sign(S_j)
        order = np.argsort(x[:, 0], kind="stable")
        xs = x[order, 0]
        gaps = np.diff(xs)
        e = eps[:, order]
        suffix = np.cumsum(e[:, ::-1], axis=1)[:, ::-1][:, 1:]
        return (np.abs(suffix) * gaps).sum(axis=1) / n

    raise TypeError(f"unsupported function class {fc!r}")


def empirical_rademacher(
    x,
    fc,
    draws: int = DEFAULT_DRAWS,
    seed: Seed | np.random.Generator = 0,
    exhaustive: bool | None = None,
) -> RademacherEstimate:
    """Empirical Rademacher complexity of ``fc`` conditional on the sample ``x``.

    Parameters
    ----------
    x : array_like, shape (n, d)
    fc : function-class descriptor
    draws : number of Monte Carlo sign vectors
    seed : seed for the sign vectors
    exhaustive : enumerate all ``2**n`` sign vectors. ``None`` means "when
        ``n <= 12``"; the standard error is then reported as 0.
    """
    x = as_sample(x)
    n = x.shape[0]
    if exhaustive is None:
        exhaustive = n <= EXHAUSTIVE_MAX_N
    if exhaustive:
        if n > 20:
            raise ValueError("exhaustive enumeration is limited to n <= 20")
        sups = inner_sup(x, fc, all_sign_vectors(n))
        return RademacherEstimate(float(sups.mean()), sups.size, 0.0, True)
    if draws < 1:
        raise ValueError("draws must be >= 1")
    sups = inner_sup(x, fc, rademacher_signs(n, draws, make_rng(seed)))
    stderr = float(sups.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return RademacherEstimate(float(sups.mean()), draws, stderr, False)


def population_rademacher(
    sampler,
    n: int,
    fc,
    data_draws: int = 200,
    sign_draws: int = 64,
    seed: Seed = 0,
) -> RademacherEstimate:
    """Monte Carlo estimate of the complexity at sample size ``n`` under a law.

    ``sampler(n, rng)`` must return an ``(n, d)`` sample. Each data draw is
    paired with ``sign_draws`` sign vectors (or all of them for small ``n``);
    the standard error is taken across data draws.
    """
    rng = make_rng(seed)
    vals = np.empty(data_draws)
    for i in range(data_draws):
        x = sampler(n, rng)
        vals[i] = empirical_rademacher(x, fc, sign_draws, rng).value
    stderr = float(vals.std(ddof=1) / math.sqrt(data_draws)) if data_draws > 1 else 0.0
    return RademacherEstimate(float(vals.mean()), data_draws, stderr, False)


# --------------------------------------------------------------------------
# closed-form upper bounds
# --------------------------------------------------------------------------

def rkhs_complexity_bound(k: Kernel, x) -> float:
    """Plug-in ``sqrt(mean_i k(x_i, x_i) / n)``; ``n**-0.5`` for kernels with ``k(x, x) = 1``."""
    x = as_sample(x)
    return math.sqrt(float(k.diag(x).mean()) / x.shape[0])


def ks_complexity_bound(n: int) -> float:
    """``2 sqrt(log(n + 1) / n)``, valid for every law on the real line."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 * math.sqrt(math.log(n + 1) / n)


def blocked_sample_size(n: int) -> int:
    """``floor(n / (2 floor(sqrt(n))))``, the effective size for beta-mixing data."""
    if n < 4:
        raise ValueError("blocked sample size needs n >= 4")
    return n // (2 * math.isqrt(n))
