"""Discrepancies between the empirical distributions of two samples.

All evaluators take two ``(n, d)`` samples and return a
:class:`DiscrepancyScore`. The IPS evaluators (MMD, energy, Wasserstein-1,
Kolmogorov-Smirnov, total variation, summary distances) are symmetric,
permutation invariant and vanish on identical inputs. ``kl_knn`` is a
divergence estimator, not a semimetric, and can be negative.

For use inside the ABC loop each evaluator class has a ``bind(y)`` method
returning a fast ``z -> float`` closure with everything that only depends on
the observed sample precomputed once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist

from .synthgen import as_sample

KL_DISTANCE_FLOOR = 1e-12


class DimensionMismatchError(ValueError):
    pass


class UnsupportedConfigurationError(ValueError):
    pass


class DegenerateBandwidthError(ValueError):
    pass


@dataclass(frozen=True)
class DiscrepancyScore:
    value: float
    meta: dict = field(default_factory=dict, compare=False)

    def __float__(self) -> float:
        return float(self.value)


def _pair(y, z):
    y = as_sample(y, "y")
    z = as_sample(z, "z")
    if y.shape[1] != z.shape[1]:
        raise DimensionMismatchError(
            f"samples have different dimensions ({y.shape[1]} vs {z.shape[1]})"
        )
    return y, z


# --------------------------------------------------------------------------
# summary maps
# --------------------------------------------------------------------------

def mean_summary(x: np.ndarray) -> np.ndarray:
    """Identity feature map; its sample average is the sample mean."""
    return np.asarray(x, dtype=float)


def second_moment_summary(x: np.ndarray) -> np.ndarray:
    """Per-point products ``x_i x_j`` for ``i <= j`` (raw second moments)."""
    x = np.asarray(x, dtype=float)
    iu = np.triu_indices(x.shape[1])
    return (x[:, :, None] * x[:, None, :])[:, iu[0], iu[1]]


class CovarianceSummary:
    """Upper-triangular entries of the (1/n-normalized) sample covariance.

    Not an average of a per-point map because of the centering, so it has no
    exact summary-kernel MMD counterpart.
    """

    def statistic(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        c = x - x.mean(axis=0)
        cov = c.T @ c / x.shape[0]
        return cov[np.triu_indices(x.shape[1])]

    def __repr__(self):
        return "CovarianceSummary()"


def summary_statistic(x: np.ndarray, f) -> np.ndarray:
    if hasattr(f, "statistic"):
        return np.asarray(f.statistic(x), dtype=float)
    feats = np.asarray(f(x), dtype=float)
    if feats.ndim == 1:
        feats = feats[:, None]
    return feats.mean(axis=0)


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

KERNEL_FAMILIES = ("gaussian", "laplace", "polynomial", "summary", "distance")


@dataclass(frozen=True)
class Kernel:
    """Positive-definite kernel on R^d.

    ``gaussian``: ``exp(-|x - x'|^2 / bandwidth^2)``;
    ``laplace``: ``exp(-|x - x'| / bandwidth)``;
    ``polynomial``: ``(1 + scale <x, x'>)^degree``;
    ``summary``: ``<f(x), f(x')>`` for a per-point feature map ``f``;
    ``distance``: ``|x| + |x'| - |x - x'|`` (the kernel behind energy distance).
    """

    family: str = "gaussian"
    bandwidth: float = 1.0
    degree: int = 2
    scale: float = 1.0
    summary: Callable | None = None

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family in ("gaussian", "laplace") and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.family == "polynomial" and (self.degree < 2 or not self.scale > 0):
            raise ValueError("polynomial kernel needs degree >= 2 and scale > 0")
        if self.family == "summary" and self.summary is None:
            raise ValueError("summary kernel needs a feature map")

    @property
    def bounded(self) -> bool:
        return self.family in ("gaussian", "laplace")

    def gram(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fam = self.family
        if fam == "gaussian":
            return np.exp(-cdist(x, y, "sqeuclidean") / self.bandwidth**2)
        if fam == "laplace":
            return np.exp(-cdist(x, y, "euclidean") / self.bandwidth)
        if fam == "polynomial":
            return (1.0 + self.scale * (x @ y.T)) ** self.degree
        if fam == "summary":
            fx = np.atleast_2d(np.asarray(self.summary(x), dtype=float).reshape(len(x), -1))
            fy = np.atleast_2d(np.asarray(self.summary(y), dtype=float).reshape(len(y), -1))
            return fx @ fy.T
        nx = np.linalg.norm(x, axis=1)
        ny = np.linalg.norm(y, axis=1)
        return nx[:, None] + ny[None, :] - cdist(x, y, "euclidean")

    def diag(self, x) -> np.ndarray:
        """``k(x_i, x_i)`` for every row."""
        x = np.asarray(x, dtype=float)
        fam = self.family
        if fam in ("gaussian", "laplace"):
            return np.ones(len(x))
        if fam == "polynomial":
            return (1.0 + self.scale * np.einsum("ij,ij->i", x, x)) ** self.degree
        if fam == "summary":
            f = np.asarray(self.summary(x), dtype=float).reshape(len(x), -1)
            return np.einsum("ij,ij->i", f, f)
        return 2.0 * np.linalg.norm(x, axis=1)


def median_heuristic_bandwidth(y) -> float:
    """Median of the nonzero pairwise Euclidean distances within ``y``."""
    y = as_sample(y, "y")
    if y.shape[0] < 2:
        raise DegenerateBandwidthError("median heuristic needs at least 2 points")
    d = pdist(y)
    d = d[d > 0]
    if d.size == 0:
        raise DegenerateBandwidthError("all points are identical")
    return float(np.median(d))


# --------------------------------------------------------------------------
# evaluators
# --------------------------------------------------------------------------

def _mmd_from_means(kyy: float, kyz: float, kzz: float) -> float:
    return math.sqrt(max(0.0, kyy - 2.0 * kyz + kzz))


def mmd(y, z, k: Kernel) -> DiscrepancyScore:
    """V-statistic MMD between the empirical measures of ``y`` and ``z``."""
    y, z = _pair(y, z)
    val = _mmd_from_means(k.gram(y, y).mean(), k.gram(y, z).mean(), k.gram(z, z).mean())
    meta = {"kernel": k.family}
    if k.family in ("gaussian", "laplace"):
        meta["bandwidth"] = k.bandwidth
    return DiscrepancyScore(val, meta)


def energy_distance(y, z) -> DiscrepancyScore:
    """Square root of ``2 E|y - z| - E|y - y'| - E|z - z'|`` over all pairs."""
    y, z = _pair(y, z)
    d2 = 2.0 * cdist(y, z).mean() - cdist(y, y).mean() - cdist(z, z).mean()
    return DiscrepancyScore(math.sqrt(max(0.0, d2)))


def wasserstein1(y, z) -> DiscrepancyScore:
    """Exact Wasserstein-1 between equal-size empirical measures.

    One-dimensional samples use the sorted coupling; otherwise the optimal
    matching is found by an exact assignment solver on the Euclidean cost
    matrix.
    """
    y, z = _pair(y, z)
    n = y.shape[0]
    if z.shape[0] != n:
        raise UnsupportedConfigurationError(
            f"wasserstein1 requires equal sample sizes (got {n} and {z.shape[0]})"
        )
    if y.shape[1] == 1:
        val = float(np.abs(np.sort(y[:, 0]) - np.sort(z[:, 0])).mean())
        return DiscrepancyScore(val, {"solver": "sorted"})
    cost = cdist(y, z)
    rows, cols = linear_sum_assignment(cost)
    val = float(cost[rows, cols].sum() / n)
    return DiscrepancyScore(val, {"solver": "assignment", "ot_cost": val})


def _ks_sorted(ys: np.ndarray, zs: np.ndarray) -> float:
    pooled = np.concatenate([ys, zs])
    fy = np.searchsorted(ys, pooled, side="right") / ys.size
    fz = np.searchsorted(zs, pooled, side="right") / zs.size
    return float(np.max(np.abs(fy - fz)))


def kolmogorov_smirnov(y, z) -> DiscrepancyScore:
    """Sup-distance between the two empirical CDFs (1-D only)."""
    y, z = _pair(y, z)
    if y.shape[1] != 1:
        raise DimensionMismatchError("Kolmogorov-Smirnov distance is defined for d = 1")
    return DiscrepancyScore(_ks_sorted(np.sort(y[:, 0]), np.sort(z[:, 0])))


def total_variation_empirical(y, z) -> DiscrepancyScore:
    """L1 distance between the empirical pmfs, i.e. the sup over ``|f| <= 1``.

    This is twice the classical total variation distance; two samples with
    disjoint supports score 2.
    """
    y, z = _pair(y, z)
    _, inv = np.unique(np.vstack([y, z]), axis=0, return_inverse=True)
    inv = inv.ravel()
    n_atoms = inv.max() + 1
    py = np.bincount(inv[: len(y)], minlength=n_atoms) / len(y)
    pz = np.bincount(inv[len(y):], minlength=n_atoms) / len(z)
    return DiscrepancyScore(float(np.abs(py - pz).sum()), {"convention": "ips"})


def summary_distance(y, z, f=mean_summary) -> DiscrepancyScore:
    """Euclidean distance between the summaries of ``y`` and ``z``.

    ``f`` is either a per-point feature map (summaries are feature averages)
    or an object with a ``statistic(sample)`` method.
    """
    y, z = _pair(y, z)
    diff = summary_statistic(y, f) - summary_statistic(z, f)
    return DiscrepancyScore(float(np.linalg.norm(diff)))


def kl_knn(y, z) -> float:
    """1-nearest-neighbour estimate of KL(law of y || law of z).

    ``(d/n) sum_i log(nu_i / rho_i) + log(m / (n - 1))`` where ``rho_i`` is the
    distance from ``y_i`` to its nearest other point of ``y`` and ``nu_i`` the
    distance to the nearest point of ``z``. Distances are floored at 1e-12.
    """
    y, z = _pair(y, z)
    n, d = y.shape
    if n < 2:
        raise ValueError("kl_knn needs at least 2 points in y")
    return _kl_from_trees(y, cKDTree(y), z)


def _kl_from_trees(y, ytree, z, rho=None) -> float:
    n, d = y.shape
    m = z.shape[0]
    if rho is None:
        rho = ytree.query(y, k=2)[0][:, 1]
    nu = cKDTree(z).query(y, k=1)[0]
    rho = np.maximum(rho, KL_DISTANCE_FLOOR)
    nu = np.maximum(nu, KL_DISTANCE_FLOOR)
    return float(d / n * np.log(nu / rho).sum() + math.log(m / (n - 1)))


# --------------------------------------------------------------------------
# evaluator objects for the ABC engine
# --------------------------------------------------------------------------

class MMD:
    """MMD evaluator; with ``kernel=None`` a Gaussian kernel is fitted by the
    median heuristic on the observed sample at ``bind`` time."""

    name = "mmd"
    is_ips = True

    def __init__(self, kernel: Kernel | None = None):
        self.kernel = kernel

    def kernel_for(self, y) -> Kernel:
        if self.kernel is not None:
            return self.kernel
        return Kernel("gaussian", bandwidth=median_heuristic_bandwidth(y))

    def __call__(self, y, z) -> DiscrepancyScore:
        return mmd(y, z, self.kernel_for(y))

    def bind(self, y):
        y = as_sample(y, "y")
        k = self.kernel_for(y)
        kyy = k.gram(y, y).mean()
        if k.family == "gaussian":
            inv_bw2 = 1.0 / k.bandwidth**2

            def score(z):
                kyz = np.exp(-cdist(y, z, "sqeuclidean") * inv_bw2).mean()
                kzz = np.exp(-cdist(z, z, "sqeuclidean") * inv_bw2).mean()
                return _mmd_from_means(kyy, kyz, kzz)
        else:
            def score(z):
                return _mmd_from_means(kyy, k.gram(y, z).mean(), k.gram(z, z).mean())
        return score

    def __repr__(self):
        return f"MMD(kernel={self.kernel!r})"


class _Simple:
    is_ips = True
    fn: Callable = None

    def __call__(self, y, z) -> DiscrepancyScore:
        return type(self).fn(y, z)

    def bind(self, y):
        y = as_sample(y, "y")
        fn = type(self).fn
        return lambda z: fn(y, z).value

    def __repr__(self):
        return f"{type(self).__name__}()"


class Energy(_Simple):
    name = "energy"
    fn = staticmethod(energy_distance)

    def bind(self, y):
        y = as_sample(y, "y")
        dyy = cdist(y, y).mean()

        def score(z):
            return math.sqrt(max(0.0, 2.0 * cdist(y, z).mean() - dyy - cdist(z, z).mean()))
        return score


class Wasserstein1(_Simple):
    name = "wasserstein"
    fn = staticmethod(wasserstein1)

    def bind(self, y):
        y = as_sample(y, "y")
        if y.shape[1] > 1:
            return super().bind(y)
        ys = np.sort(y[:, 0])

        def score(z):
            if len(z) != len(ys):
                return wasserstein1(y, z).value  # raises the size error
            return float(np.abs(ys - np.sort(z[:, 0])).mean())
        return score


class KolmogorovSmirnov(_Simple):
    name = "ks"
    fn = staticmethod(kolmogorov_smirnov)


class TotalVariation(_Simple):
    name = "tv"
    fn = staticmethod(total_variation_empirical)


class Summary:
    is_ips = True

    def __init__(self, f=mean_summary, name: str = "summary"):
        self.f = f
        self.name = name

    def __call__(self, y, z) -> DiscrepancyScore:
        return summary_distance(y, z, self.f)

    def bind(self, y):
        sy = summary_statistic(as_sample(y, "y"), self.f)
        return lambda z: float(np.linalg.norm(sy - summary_statistic(z, self.f)))

    def __repr__(self):
        return f"Summary({self.name!r})"


class KLDivergence:
    """1-NN KL estimate clamped at zero so it can serve as an acceptance score."""

    name = "kl"
    is_ips = False

    def __call__(self, y, z) -> DiscrepancyScore:
        raw = kl_knn(y, z)
        return DiscrepancyScore(max(0.0, raw), {"raw": raw})

    def bind(self, y):
        y = as_sample(y, "y")
        if y.shape[0] < 2:
            raise ValueError("kl_knn needs at least 2 points in y")
        tree = cKDTree(y)
        rho = tree.query(y, k=2)[0][:, 1]
        return lambda z: max(0.0, _kl_from_trees(y, tree, z, rho))

    def __repr__(self):
        return "KLDivergence()"


def get_discrepancy(name: str, **kwargs):
    """Evaluator by name: mmd, energy, wasserstein, ks, tv, summary-mean,
    summary-cov, kl."""
    if name == "mmd":
        return MMD(kwargs.get("kernel"))
    if name == "summary-mean":
        return Summary(mean_summary, "summary-mean")
    if name == "summary-cov":
        return Summary(CovarianceSummary(), "summary-cov")
    table = {
        "energy": Energy,
        "wasserstein": Wasserstein1,
        "ks": KolmogorovSmirnov,
        "tv": TotalVariation,
        "kl": KLDivergence,
    }
    try:
        return table[name]()
    except KeyError:
        raise ValueError(f"unknown discrepancy {name!r}") from None


DISCREPANCY_NAMES = ("mmd", "energy", "wasserstein", "ks", "tv", "summary-mean", "summary-cov", "kl")
