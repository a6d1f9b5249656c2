"""Closed-form concentration radii, probability bounds and threshold schedules.

Every function is pure. Complexity inputs (``R``) are whatever the caller
supplies: an empirical per-law estimate or a closed-form uniform bound. The
uniform complexity ``sup_mu R_{mu,n}`` the guarantees are stated for is not
computable in general, so reports built from estimates are labelled
``plug-in``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple, Optional

from .rademacher import blocked_sample_size


class BoundDomainError(ValueError):
    """Inputs fall outside the domain where a bound is defined."""


class RadiusBound(NamedTuple):
    radius: float
    mass: Optional[float]


@dataclass
class BoundInputs:
    """Scalar constants feeding the calculators.

    ``R`` is the Rademacher complexity at size ``n`` (``R_s`` at the blocked
    size ``s_n`` for dependent data; defaults to ``R``). ``M`` is the slack
    sequence value; ``None`` selects the documented default per bound.
    """

    n: int
    b: float = 1.0
    L: float = 1.0
    c_pi: float = 1.0
    eps_star: float = 0.0
    eps_bar: Optional[float] = None
    R: float = 0.0
    R_s: Optional[float] = None
    s_n: Optional[int] = None
    alpha: float = 0.0
    K: float = 1.0
    nu: float = 1.0
    M: Optional[float] = None
    eps_tilde: Optional[float] = None
    complexity_source: str = "plug-in"

    def __post_init__(self):
        if self.n < 1:
            raise BoundDomainError("n must be >= 1")
        for name in ("b", "L", "c_pi"):
            if not getattr(self, name) > 0:
                raise BoundDomainError(f"{name} must be positive")
        if self.R < 0:
            raise BoundDomainError("R must be nonnegative")
        if self.eps_bar is not None and not self.eps_bar > 0:
            raise BoundDomainError("eps_bar must be positive")
        if not 0 <= self.alpha < 1:
            raise BoundDomainError("alpha must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


def lemma1_upper_prob(n: int, b: float, delta: float) -> float:
    """``1 - exp(-n delta^2 / (2 b^2))``: probability that ``D(mu_hat, mu) <= 2R + delta``."""
    if delta < 0:
        raise BoundDomainError("delta must be nonnegative")
    if math.isinf(delta):
        return 1.0
    return -math.expm1(-n * delta**2 / (2.0 * b**2))


def lemma2_blocked_prob(n: int, b: float, delta: float, beta_at_root: float) -> float:
    """Dependent-data analogue: ``1 - 2 exp(-s_n delta^2 / (2 b^2)) - 2 s_n beta(floor(sqrt n))``.

    This is the probability that ``D(mu_hat, mu) <= 2 R_{s_n} + 4b/sqrt(n) + delta``;
    the value may be negative, in which case the guarantee is vacuous.
    """
    if delta < 0:
        raise BoundDomainError("delta must be nonnegative")
    s = blocked_sample_size(n)
    return 1.0 - 2.0 * math.exp(-s * delta**2 / (2.0 * b**2)) - 2.0 * s * beta_at_root


def _log_term(n: int, eps_bar: float, L: float, M: float | None) -> float:
    arg = (n if M is None else M) / eps_bar**L
    if not arg > 1:
        raise BoundDomainError(
            f"log argument {arg:g} <= 1; need eps_bar < (M)^(1/L)"
        )
    return math.log(arg)


def _require_eps_bar(inputs: BoundInputs) -> float:
    if inputs.eps_bar is None:
        raise BoundDomainError("eps_bar is required")
    return inputs.eps_bar


def theorem2_radius(inputs: BoundInputs) -> RadiusBound:
    """i.i.d. concentration radius and the mass left outside it.

    ``eps* + 4 eps_bar / 3 + 2 R + sqrt(2 b^2 / n * log(M / eps_bar^L))`` with
    mass ``2 * 3^L / (c_pi M)``; ``M`` defaults to ``n``.
    """
    eb = _require_eps_bar(inputs)
    n, b, L = inputs.n, inputs.b, inputs.L
    M = n if inputs.M is None else inputs.M
    radius = (
        inputs.eps_star
        + 4.0 * eb / 3.0
        + 2.0 * inputs.R
        + math.sqrt(2.0 * b**2 / n * _log_term(n, eb, L, M))
    )
    return RadiusBound(radius, 2.0 * 3.0**L / (inputs.c_pi * M))


def threshold_schedule(n: int, R: float, L: float = 1.0) -> float:
    """``max(sqrt(log n / n), R log log n)``.

    ``L`` does not enter the schedule; it is accepted so callers can pass a
    full set of bound constants.
    """
    if n < 3:
        raise BoundDomainError("threshold schedule needs n >= 3")
    return max(math.sqrt(math.log(n) / n), R * math.log(math.log(n)))


def corollary2_parameter_radius(inputs: BoundInputs) -> float:
    """``K * (theorem-2 radius without eps*)^nu``: a radius in parameter space."""
    if not (inputs.K > 0 and inputs.nu > 0):
        raise BoundDomainError("K and nu must be positive")
    inner = theorem2_radius(inputs).radius - inputs.eps_star
    return parameter_radius_from_inner(inner, inputs.K, inputs.nu)


def parameter_radius_from_inner(inner: float, K: float, nu: float) -> float:
    if inner < 0:
        raise BoundDomainError("inner radius must be nonnegative")
    return K * inner**nu


def corollary4_mmd_radius(n: int, L: float, eps_star: float = 0.0) -> float:
    """Bounded-kernel MMD radius ``eps* + (10/3 + sqrt(L + 2)) sqrt(log n / n)``."""
    if n < 2:
        raise BoundDomainError("n must be >= 2")
    return eps_star + (10.0 / 3.0 + math.sqrt(L + 2.0)) * math.sqrt(math.log(n) / n)


def prop1_recommended_eps_bar(M: float, n: int, L: float) -> float:
    return (M / n) ** (1.0 / (2.0 + L))


def prop1_unbounded_radius(
    eps_star: float, eps_bar: float | None, M: float | None, n: int, L: float
) -> RadiusBound:
    """Unbounded-kernel MMD radius ``eps* + 4 eps_bar / 3 + sqrt(M / (n eps_bar^L))``.

    ``M`` defaults to ``sqrt(n)``; ``eps_bar=None`` uses the recommended
    ``(M / n)^(1 / (2 + L))``, for which the radius equals
    ``eps* + (7/3) (M / n)^(1 / (2 + L))``. The returned mass is ``1 / M``:
    the bound is ``C / M`` with ``C`` an unknown model constant.
    """
    M = math.sqrt(n) if M is None else M
    if not M > 0:
        raise BoundDomainError("M must be positive")
    if eps_bar is None:
        eps_bar = prop1_recommended_eps_bar(M, n, L)
    if not eps_bar > 0:
        raise BoundDomainError("eps_bar must be positive")
    radius = eps_star + 4.0 * eps_bar / 3.0 + math.sqrt(M / (n * eps_bar**L))
    return RadiusBound(radius, 1.0 / M)


def prop1_simplified_radius(eps_star: float, M: float, n: int, L: float) -> float:
    return eps_star + 7.0 / 3.0 * prop1_recommended_eps_bar(M, n, L)


def theorem3_dependent_radius(inputs: BoundInputs) -> RadiusBound:
    """beta-mixing concentration radius and mass.

    ``eps* + 4 eps_bar / 3 + 2 R_s + 4 b / sqrt(n) + sqrt(2 b^2 / s_n * log(n / eps_bar^L))``
    with mass ``4 * 3^L / (c_pi n)``.
    """
    eb = _require_eps_bar(inputs)
    n, b, L = inputs.n, inputs.b, inputs.L
    s = inputs.s_n if inputs.s_n is not None else blocked_sample_size(n)
    if s < 1:
        raise BoundDomainError("s_n must be >= 1")
    R_s = inputs.R if inputs.R_s is None else inputs.R_s
    M = n if inputs.M is None else inputs.M
    radius = (
        inputs.eps_star
        + 4.0 * eb / 3.0
        + 2.0 * R_s
        + 4.0 * b / math.sqrt(n)
        + math.sqrt(2.0 * b**2 / s * _log_term(n, eb, L, M))
    )
    return RadiusBound(radius, 4.0 * 3.0**L / (inputs.c_pi * M))


def huber_eps_star_bound(b: float, alpha: float) -> float:
    """Upper bound ``2 b alpha`` on the misspecification level under contamination."""
    if not 0 <= alpha < 1:
        raise BoundDomainError("alpha must lie in [0, 1)")
    return 2.0 * b * alpha


def huber_uncontaminated_shift(b: float, alpha: float) -> float:
    """``4 b alpha``: the eps* to use when targeting the uncontaminated model."""
    return 2.0 * huber_eps_star_bound(b, alpha)


def ar1_beta_coefficient(theta: float, k: int) -> float:
    """Mixing bound ``|theta|^k / (2 sqrt(1 - theta^2))`` for a stationary Gaussian AR(1)."""
    if not abs(theta) < 1:
        raise BoundDomainError("|theta| must be < 1")
    if k < 1:
        raise BoundDomainError("k must be >= 1")
    return abs(theta) ** k / (2.0 * math.sqrt(1.0 - theta**2))


def theorem1_acceptance_band(
    mass_oracle: Callable[[float], float], eps: float, c_F: float
) -> tuple[float, float]:
    """Asymptotic acceptance-probability band with the vanishing terms dropped.

    ``mass_oracle(r)`` is the prior mass of ``{theta: D(mu_theta, mu*) <= r}``.
    """
    return float(mass_oracle(eps - c_F)), float(mass_oracle(eps + c_F))


def bounds_report(inputs: BoundInputs, delta: float = 0.1) -> list[dict]:
    """Every radius / mass applicable to ``inputs`` as a list of table rows."""
    rows = []
    n, L = inputs.n, inputs.L
    eps_bar = inputs.eps_bar
    if eps_bar is None and n >= 3:
        eps_bar = threshold_schedule(n, inputs.R, L)
        rows.append({"quantity": "threshold_schedule", "value": eps_bar, "mass": None})

    def add(name, fn):
        try:
            out = fn()
        except BoundDomainError as exc:
            rows.append({"quantity": name, "value": None, "mass": None, "error": str(exc)})
            return
        if isinstance(out, RadiusBound):
            rows.append({"quantity": name, "value": out.radius, "mass": out.mass})
        else:
            rows.append({"quantity": name, "value": out, "mass": None})

    filled = BoundInputs(**{**inputs.to_dict(), "eps_bar": eps_bar})
    add("lemma1_upper_prob", lambda: lemma1_upper_prob(n, inputs.b, delta))
    add("theorem2_radius", lambda: theorem2_radius(filled))
    add("corollary2_parameter_radius", lambda: corollary2_parameter_radius(filled))
    if n >= 2:
        add("corollary4_mmd_radius", lambda: corollary4_mmd_radius(n, L, inputs.eps_star))
    add("prop1_unbounded_radius", lambda: prop1_unbounded_radius(inputs.eps_star, None, inputs.M, n, L))
    if n >= 4:
        add("theorem3_dependent_radius", lambda: theorem3_dependent_radius(filled))
        rows.append({"quantity": "blocked_sample_size", "value": blocked_sample_size(n), "mass": None})
    add("huber_eps_star_bound", lambda: huber_eps_star_bound(inputs.b, inputs.alpha))
    add("huber_uncontaminated_shift", lambda: huber_uncontaminated_shift(inputs.b, inputs.alpha))
    for row in rows:
        row["complexity_source"] = inputs.complexity_source
    return rows
