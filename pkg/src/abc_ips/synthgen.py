"""Seedable samplers for the data-generating processes and models used in the studies.

A *sample* is a 2-D float array of shape ``(n, d)``. Every sampler is a pure
function of ``(spec, n, seed)``: seeds are integers or
:class:`numpy.random.SeedSequence` objects, and sub-streams are derived with
:func:`derive_seed` so results never depend on call order or worker layout.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.signal import lfilter

Seed = Union[int, np.random.SeedSequence]


class ConfigurationError(ValueError):
    """Raised when a distribution or process specification is invalid."""


# --------------------------------------------------------------------------
# seeding and sample plumbing
# --------------------------------------------------------------------------

def derive_seed(seed: Seed, *keys: int) -> np.random.SeedSequence:
    """Child seed identified by ``keys`` (e.g. replicate, proposal index).

    ``derive_seed(s, r, t)`` is a pure function of its arguments, which is what
    makes parallel runs reproducible regardless of scheduling.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(
            entropy=seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(keys)
        )
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(keys))


def make_rng(seed: Seed | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.PCG64(seed))


def as_sample(x, name: str = "sample") -> np.ndarray:
    """Validate and coerce ``x`` to an ``(n, d)`` float array.

    One-dimensional input is read as ``n`` scalar observations.
    """
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must have n >= 1 rows and d >= 1 columns")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return a


def write_sample_csv(x, path=None) -> str:
    """Serialize a sample as CSV with header ``x1,...,xd``.

    Values use Python's shortest round-trip ``repr`` so reading the file back
    reproduces the array bitwise. Returns the CSV text; also writes it to
    ``path`` when given.
    """
    a = as_sample(x)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j + 1}" for j in range(a.shape[1])])
    for row in a:
        w.writerow([repr(float(v)) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_sample_csv(source) -> np.ndarray:
    """Inverse of :func:`write_sample_csv`; accepts a path or CSV text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    else:
        text = source
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], [r for r in rows[1:] if r]
    if header != [f"x{j + 1}" for j in range(len(header))]:
        raise ValueError(f"unexpected sample header {header!r}")
    return as_sample(np.array([[float(v) for v in r] for r in body]).reshape(-1, len(header)))


# --------------------------------------------------------------------------
# distribution specs
# --------------------------------------------------------------------------

def _cholesky(matrix: np.ndarray, what: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if m.shape[0] != m.shape[1] or not np.allclose(m, m.T):
        raise ConfigurationError(f"{what} must be a symmetric square matrix")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise ConfigurationError(f"{what} is not positive definite") from exc


@dataclass(frozen=True)
class GaussianSpec:
    mean: tuple
    covariance: tuple

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ConfigurationError("covariance shape does not match mean")
        _cholesky(cov, "covariance")

    @property
    def dim(self) -> int:
        return np.atleast_1d(self.mean).size


@dataclass(frozen=True)
class StudentTSpec:
    """Multivariate Student-t with ``df`` degrees of freedom.

    For ``df > 2`` the covariance is ``df / (df - 2) * dispersion``.
    """

    df: float
    mean: tuple
    dispersion: tuple

    def __post_init__(self):
        if not self.df > 0:
            raise ConfigurationError(f"df must be positive, got {self.df}")
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        disp = np.atleast_2d(np.asarray(self.dispersion, dtype=float))
        if disp.shape != (mean.size, mean.size):
            raise ConfigurationError("dispersion shape does not match mean")
        _cholesky(disp, "dispersion")

    @property
    def dim(self) -> int:
        return np.atleast_1d(self.mean).size


@dataclass(frozen=True)
class HuberMixtureSpec:
    base: object
    contaminant: object
    alpha: float

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ConfigurationError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.base.dim != self.contaminant.dim:
            raise ConfigurationError("base and contaminant dimensions differ")

    @property
    def dim(self) -> int:
        return self.base.dim


@dataclass(frozen=True)
class Ar1Spec:
    """Gaussian AR(1): ``x_t = psi + theta * x_{t-1} + sigma * g_t``.

    ``init`` is either the string ``"stationary"`` or a pair ``(m0, s0)``
    giving ``x_0 ~ N(m0, s0**2)``.
    """

    theta: float
    psi: float = 0.0
    sigma: float = 1.0
    init: object = "stationary"

    def __post_init__(self):
        if not abs(self.theta) < 1:
            raise ConfigurationError(f"|theta| must be < 1, got {self.theta}")
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if self.init != "stationary":
            m0, s0 = self.init
            if not s0 >= 0:
                raise ConfigurationError("initial standard deviation must be >= 0")

    @property
    def dim(self) -> int:
        return 1

    def stationary_moments(self) -> tuple[float, float]:
        """Mean and variance of the stationary marginal."""
        return self.psi / (1 - self.theta), self.sigma**2 / (1 - self.theta**2)


@dataclass(frozen=True)
class GaussianLocationModelSpec:
    """Gaussian with mean ``theta * direction`` and a fixed covariance."""

    direction: tuple
    covariance: tuple
    theta: float = 0.0

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.direction, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (d.size, d.size):
            raise ConfigurationError("covariance shape does not match direction")
        _cholesky(cov, "covariance")

    @property
    def dim(self) -> int:
        return np.atleast_1d(self.direction).size

    def at(self, theta: float) -> GaussianSpec:
        mean = float(theta) * np.atleast_1d(np.asarray(self.direction, dtype=float))
        return GaussianSpec(tuple(mean), _as_tuple(self.covariance))


def _as_tuple(m):
    a = np.atleast_2d(np.asarray(m, dtype=float))
    return tuple(tuple(float(v) for v in row) for row in a)


# --------------------------------------------------------------------------
# samplers
# --------------------------------------------------------------------------

def _draw_gaussian(spec: GaussianSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    mean = np.atleast_1d(np.asarray(spec.mean, dtype=float))
    chol = _cholesky(spec.covariance, "covariance")
    g = rng.standard_normal((n, mean.size))
    return mean + g @ chol.T


def _draw_student_t(spec: StudentTSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    mean = np.atleast_1d(np.asarray(spec.mean, dtype=float))
    chol = _cholesky(spec.dispersion, "dispersion")
    g = rng.standard_normal((n, mean.size))
    w = rng.chisquare(spec.df, size=n) / spec.df
    return mean + (g @ chol.T) / np.sqrt(w)[:, None]


def draw(spec, n: int, seed: Seed | np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. rows from a Gaussian, Student-t or Huber spec."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if isinstance(spec, GaussianLocationModelSpec):
        spec = spec.at(spec.theta)
    if isinstance(spec, GaussianSpec):
        return _draw_gaussian(spec, n, make_rng(seed))
    if isinstance(spec, StudentTSpec):
        return _draw_student_t(spec, n, make_rng(seed))
    if isinstance(spec, HuberMixtureSpec):
        return sample_huber(spec, n, seed)
    raise ConfigurationError(f"cannot draw from {type(spec).__name__}")


def sample_student_t(spec: StudentTSpec, n: int, seed: Seed) -> np.ndarray:
    """``n`` draws ``mean + L g / sqrt(chi2_df / df)`` with ``L L^T = dispersion``."""
    return draw(spec, n, seed)


def _replace_rows(x: np.ndarray, alpha: float, contaminant, seed: Seed) -> np.ndarray:
    n = x.shape[0]
    k = int(np.floor(alpha * n + 0.5))
    if k == 0:
        return x.copy()
    rng = make_rng(seed)
    idx = rng.choice(n, size=k, replace=False)
    out = x.copy()
    out[idx] = draw(contaminant, k, rng)
    return out


def sample_huber(spec: HuberMixtureSpec, n: int, seed: Seed) -> np.ndarray:
    """Base draws with exactly ``round(alpha * n)`` rows replaced by contaminant draws.

    The base sample uses ``derive_seed(seed, 0)``; the replaced indices and
    contaminant values use ``derive_seed(seed, 1)``. Hence with ``alpha = 0``
    the output equals ``draw(spec.base, n, derive_seed(seed, 0))``.
    """
    base = draw(spec.base, n, derive_seed(seed, 0))
    return _replace_rows(base, spec.alpha, spec.contaminant, derive_seed(seed, 1))


def contaminate_pointwise(x, alpha: float, contaminant, seed: Seed) -> np.ndarray:
    """Replace exactly ``round(alpha * n)`` uniformly chosen rows of ``x``."""
    if not 0 <= alpha < 1:
        raise ConfigurationError(f"alpha must lie in [0, 1), got {alpha}")
    x = as_sample(x)
    return _replace_rows(x, alpha, contaminant, seed)


def sample_ar1(spec: Ar1Spec, n: int, seed: Seed, include_initial: bool = False) -> np.ndarray:
    """Simulate ``x_1..x_n`` (or ``x_0..x_n`` with ``include_initial``) as an ``(., 1)`` sample."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    if spec.init == "stationary":
        m0, v0 = spec.stationary_moments()
        s0 = np.sqrt(v0)
    else:
        m0, s0 = spec.init
    eps = rng.standard_normal(n + 1)
    x0 = m0 + s0 * eps[0]
    drive = spec.psi + spec.sigma * eps[1:]
    path, _ = lfilter([1.0], [1.0, -spec.theta], drive, zi=[spec.theta * x0])
    out = np.concatenate([[x0], path]) if include_initial else path
    return out[:, None]


def delay_reconstruct(x) -> np.ndarray:
    """Pairs ``(x_t, x_{t+1})`` of a scalar series; ``n`` points give ``n - 1`` rows."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 2:
        if a.shape[1] != 1:
            raise ValueError("delay reconstruction needs a scalar series")
        a = a[:, 0]
    if a.size < 2:
        raise ValueError("delay reconstruction needs at least 2 points")
    return np.column_stack([a[:-1], a[1:]])
