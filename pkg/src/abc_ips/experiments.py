"""Experiment drivers behind the ``abc-ips`` subcommands.

Table studies use common random numbers across contamination levels and
discrepancies: replicate ``r`` draws its clean data from
``derive_seed(seed, r, 0)`` and its proposals from ``derive_seed(seed, r, 1)``
whatever ``alpha`` is, and all discrepancies score the same proposals. The
quantile threshold is recomputed inside every replicate.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .abc_engine import (
    Ar1Simulator,
    GaussianLocationSimulator,
    PriorSpec,
    QuantileThreshold,
    FixedThreshold,
    UndefinedPosteriorError,
    posterior_mse,
    run_rejection_multi,
    support_check,
)
from .bounds import BoundInputs, bounds_report, theorem1_acceptance_band
from .config import ExperimentConfig
from .coverage import blocked_coverage, iid_coverage
from .discrepancy import Kernel, MMD, get_discrepancy
from .rademacher import (
    KsIndicators,
    LipschitzPinned1D,
    RkhsBall,
    SupNormBall,
    empirical_rademacher,
)
from .synthgen import (
    Ar1Spec,
    GaussianSpec,
    HuberMixtureSpec,
    StudentTSpec,
    as_sample,
    contaminate_pointwise,
    delay_reconstruct,
    derive_seed,
    make_rng,
    sample_ar1,
    sample_huber,
)

log = logging.getLogger(__name__)

TABLE1_DISPERSION = ((1.0, 0.5), (0.5, 1.0))
TABLE1_THETA0 = 1.0
TABLE2_THETA0 = 0.5


# --------------------------------------------------------------------------
# data generating processes and models of the two studies
# --------------------------------------------------------------------------

def table1_data(alpha: float, n: int, seed) -> np.ndarray:
    """Bivariate t(3) around (1, 1) with ``round(alpha n)`` rows from a t(3) around (20, 20)."""
    base = StudentTSpec(3.0, (1.0, 1.0), TABLE1_DISPERSION)
    cont = StudentTSpec(3.0, (20.0, 20.0), TABLE1_DISPERSION)
    return sample_huber(HuberMixtureSpec(base, cont, alpha), n, seed)


def table1_model():
    cov = 3.0 * np.asarray(TABLE1_DISPERSION)  # covariance of the clean t(3)
    return PriorSpec("normal", 0.0, 1.0), GaussianLocationSimulator((1.0, 1.0), cov)


def table2_data(alpha: float, n: int, seed) -> np.ndarray:
    """Delay pairs of an AR(1) path (theta 0.5, x_0 ~ N(0, 1)) whose ``x_1..x_n``
    are contaminated by ``N(20, 1)`` replacements."""
    path = sample_ar1(Ar1Spec(TABLE2_THETA0, init=(0.0, 1.0)), n, derive_seed(seed, 0), include_initial=True)
    tail = contaminate_pointwise(path[1:], alpha, GaussianSpec((20.0,), ((1.0,),)), derive_seed(seed, 1))
    return delay_reconstruct(np.concatenate([path[:1], tail])[:, 0])


def table2_model():
    return PriorSpec("uniform", -1.0, 1.0), Ar1Simulator(sigma=1.0, init=(0.0, 1.0), delay=True)


STUDIES = {
    "table1": (table1_data, table1_model, TABLE1_THETA0),
    "table2": (table2_data, table2_model, TABLE2_THETA0),
}


# --------------------------------------------------------------------------
# result table
# --------------------------------------------------------------------------

@dataclass
class ResultRow:
    discrepancy: str
    alpha: float
    mean_mse: float
    mse_stderr: float
    replicates: int
    n_undefined: int
    seconds_per_eval: float


TABLE_FIELDS = ["discrepancy", "alpha", "mean_mse", "mse_stderr", "replicates", "n_undefined"]
TIMING_FIELDS = ["discrepancy", "alpha", "seconds_per_eval"]


class ResultTable:
    """Rows keyed by (discrepancy, alpha)."""

    def __init__(self, rows=()):
        self.rows: list[ResultRow] = []
        for r in rows:
            self.add(r)

    def add(self, row: ResultRow):
        if self.get(row.discrepancy, row.alpha) is not None:
            raise ValueError(f"duplicate row ({row.discrepancy}, {row.alpha})")
        self.rows.append(row)

    def get(self, discrepancy: str, alpha: float):
        for r in self.rows:
            if r.discrepancy == discrepancy and r.alpha == alpha:
                return r
        return None

    def mse(self, discrepancy: str, alpha: float) -> float:
        row = self.get(discrepancy, alpha)
        if row is None:
            raise KeyError((discrepancy, alpha))
        return row.mean_mse

    @property
    def discrepancies(self) -> list[str]:
        return list(dict.fromkeys(r.discrepancy for r in self.rows))

    @property
    def alphas(self) -> list[float]:
        return sorted({r.alpha for r in self.rows})

    def to_csv(self, fields=None) -> str:
        fields = fields or list(ResultRow.__dataclass_fields__)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(v) for k, v in asdict(r).items()})
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, timing: str | None = None) -> "ResultTable":
        times = {}
        if timing:
            for t in csv.DictReader(io.StringIO(timing)):
                times[(t["discrepancy"], float(t["alpha"]))] = float(t["seconds_per_eval"])
        rows = []
        for d in csv.DictReader(io.StringIO(text)):
            key = (d["discrepancy"], float(d["alpha"]))
            secs = d.get("seconds_per_eval")
            rows.append(
                ResultRow(
                    key[0],
                    key[1],
                    float(d["mean_mse"]),
                    float(d["mse_stderr"]),
                    int(d["replicates"]),
                    int(d["n_undefined"]),
                    float(secs) if secs is not None else times.get(key, math.nan),
                )
            )
        return cls(rows)

    def __eq__(self, other):
        if not isinstance(other, ResultTable) or len(self.rows) != len(other.rows):
            return False
        for a, b in zip(self.rows, other.rows):
            for k in ResultRow.__dataclass_fields__:
                va, vb = getattr(a, k), getattr(b, k)
                if isinstance(va, float) and math.isnan(va) and math.isnan(vb):
                    continue
                if va != vb:
                    return False
        return True


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


# --------------------------------------------------------------------------
# table studies
# --------------------------------------------------------------------------

def _replicate(kind, alphas, n, m, T, q, names, seed, r):
    """One replicate of a table study at every alpha; returns MSEs, timings, posteriors."""
    data_fn, model_fn, theta0 = STUDIES[kind]
    prior, sim = model_fn()
    out = []
    for alpha in alphas:
        y = data_fn(alpha, n, derive_seed(seed, r, 0))
        discs = [get_discrepancy(d) for d in names]
        try:
            results = run_rejection_multi(
                y, prior, sim, discs, QuantileThreshold(q), T, m, derive_seed(seed, r, 1)
            )
        except Exception as exc:
            raise RuntimeError(f"{kind}: replicate {r} at alpha={alpha} failed: {exc}") from exc
        for name, res in zip(names, results):
            try:
                mse = posterior_mse(res, theta0)
            except UndefinedPosteriorError:
                mse = math.nan
            out.append((name, alpha, mse, res.eval_seconds, res.accepted))
    log.info("%s: replicate %d done", kind, r)
    return out


def _replicate_star(args):
    return _replicate(*args)


def run_table(cfg: ExperimentConfig, workers: int = 1, keep_posterior: int = 1):
    """Run a table study; returns ``(table, posterior_rows)``.

    ``posterior_rows`` holds ``(discrepancy, alpha, replicate, theta)`` for the
    accepted parameters of the first ``keep_posterior`` replicates.
    """
    kind = cfg.experiment
    names = list(cfg.discrepancies)
    tasks = [
        (kind, cfg.alphas, cfg.n, cfg.m, cfg.T, cfg.q, names, cfg.seed, r)
        for r in range(cfg.replicates)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_rep = list(pool.map(_replicate_star, tasks))
    else:
        per_rep = [_replicate_star(t) for t in tasks]

    table = ResultTable()
    posterior = []
    for name in names:
        for alpha in cfg.alphas:
            mses, secs = [], []
            for r, rep in enumerate(per_rep):
                for d, a, mse, sec, acc in rep:
                    if d == name and a == alpha:
                        mses.append(mse)
                        secs.append(sec)
                        if r < keep_posterior:
                            posterior.extend((d, a, r, float(t)) for t in acc)
            arr = np.asarray(mses)
            ok = arr[~np.isnan(arr)]
            se = float(ok.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else 0.0
            table.add(
                ResultRow(
                    name,
                    float(alpha),
                    float(ok.mean()) if ok.size else math.nan,
                    se,
                    len(mses),
                    int(np.isnan(arr).sum()),
                    float(np.mean(secs)),
                )
            )
    return table, posterior


def write_table_outputs(cfg: ExperimentConfig, table: ResultTable, posterior, out: Path) -> dict:
    """``table.csv`` (deterministic), ``timing.csv``, ``posterior_samples.csv``, ``summary.json``."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.csv").write_text(table.to_csv(TABLE_FIELDS))
    (out / "timing.csv").write_text(table.to_csv(TIMING_FIELDS))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["discrepancy", "alpha", "replicate", "theta"])
    for d, a, r, t in posterior:
        w.writerow([d, repr(a), r, repr(t)])
    (out / "posterior_samples.csv").write_text(buf.getvalue())
    summary = {
        "experiment": cfg.experiment,
        "version": __version__,
        "config": cfg.model_dump(),
        "rows": [asdict(r) for r in table.rows],
        "platform": platform.platform(),
    }
    _write_json(out / "summary.json", summary)
    return summary


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def cmd_table1(cfg: ExperimentConfig, out: Path | None = None, workers: int = 1) -> ResultTable:
    if cfg.experiment != "table1":
        raise ValueError("cmd_table1 needs experiment 'table1'")
    table, post = run_table(cfg, workers)
    if out is not None:
        write_table_outputs(cfg, table, post, out)
    return table


def cmd_table2(cfg: ExperimentConfig, out: Path | None = None, workers: int = 1) -> ResultTable:
    if cfg.experiment != "table2":
        raise ValueError("cmd_table2 needs experiment 'table2'")
    table, post = run_table(cfg, workers)
    if out is not None:
        write_table_outputs(cfg, table, post, out)
    return table


# --------------------------------------------------------------------------
# coverage, bounds, rademacher
# --------------------------------------------------------------------------

def cmd_coverage(cfg: ExperimentConfig, out: Path | None = None, workers: int = 1) -> list[dict]:
    c = cfg.coverage
    rows = []
    if c.suite in ("iid", "both"):
        rows += iid_coverage(
            c.iid_n, c.iid_support, c.iid_deltas, c.replicates, c.sign_draws, c.slack,
            derive_seed(cfg.seed, 0),
        )
    if c.suite in ("blocked", "both"):
        rows += blocked_coverage(
            c.blocked_n, c.blocked_theta, c.blocked_deltas, c.replicates, slack=c.slack,
            seed=derive_seed(cfg.seed, 1),
        )
    report = [r.to_dict() for r in rows]
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_rows_csv(out / "table.csv", report)
        _write_json(out / "summary.json", {"experiment": "coverage", "rows": report})
    return report


def cmd_bounds(cfg: ExperimentConfig, out: Path | None = None, workers: int = 1) -> list[dict]:
    b = cfg.bounds
    inputs = BoundInputs(
        n=b.n, b=b.b, L=b.L, c_pi=b.c_pi, eps_star=b.eps_star, eps_bar=b.eps_bar,
        R=b.R, R_s=b.R_s, alpha=b.alpha, K=b.K, nu=b.nu, M=b.M,
        complexity_source=b.complexity_source,
    )
    rows = bounds_report(inputs, b.delta)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_rows_csv(out / "table.csv", rows)
        _write_json(out / "summary.json", {"experiment": "bounds", "inputs": inputs.to_dict(), "rows": rows})
    return rows


def _function_class(sec):
    if sec.function_class == "ks":
        return KsIndicators()
    if sec.function_class == "sup-norm":
        return SupNormBall(sec.b)
    if sec.function_class == "lipschitz":
        return LipschitzPinned1D()
    return RkhsBall(Kernel("gaussian", bandwidth=sec.bandwidth))


def cmd_rademacher(cfg: ExperimentConfig, out: Path | None = None, workers: int = 1) -> dict:
    sec = cfg.rademacher
    src = sec.sample
    if src.values is not None:
        x = as_sample(src.values, "sample")
    else:
        rng = make_rng(derive_seed(cfg.seed, 0))
        if src.family == "normal":
            x = rng.standard_normal((src.n, src.dim))
        else:
            x = rng.uniform(size=(src.n, src.dim))
    est = empirical_rademacher(
        x, _function_class(sec), sec.draws, derive_seed(cfg.seed, 1), sec.exhaustive
    )
    report = {
        "function_class": sec.function_class,
        "n": int(x.shape[0]),
        "value": est.value,
        "mc_draws": est.mc_draws,
        "mc_stderr": est.mc_stderr,
        "exhaustive": est.exhaustive,
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_rows_csv(out / "table.csv", [report])
        _write_json(out / "summary.json", {"experiment": "rademacher", **report})
    return report


def _write_rows_csv(path: Path, rows: list[dict]):
    fields = list(dict.fromkeys(k for r in rows for k in r))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    path.write_text(buf.getvalue())


# --------------------------------------------------------------------------
# support check on the Gaussian-location toy
# --------------------------------------------------------------------------

def gaussian_location_mmd(theta: float, bandwidth: float = 1.0) -> float:
    """Population MMD between ``N(0, 1)`` and ``N(theta, 1)`` under ``exp(-|x - x'|^2 / bw^2)``."""
    c = 1.0 / math.sqrt(1.0 + 4.0 / bandwidth**2)
    return math.sqrt(max(0.0, 2.0 * c * -math.expm1(-theta**2 / (bandwidth**2 + 4.0))))


def gaussian_location_ball_mass(radius: float, prior: PriorSpec, bandwidth: float = 1.0) -> float:
    """Prior mass of ``{theta : MMD(N(theta, 1), N(0, 1)) <= radius}``."""
    if radius < 0:
        return 0.0
    c = 1.0 / math.sqrt(1.0 + 4.0 / bandwidth**2)
    frac = radius**2 / (2.0 * c)
    if frac >= 1.0:
        return 1.0
    t = math.sqrt(-(bandwidth**2 + 4.0) * math.log1p(-frac))
    return prior.cdf(t) - prior.cdf(-t)


def plugin_mmd(theta: float, draws: int, bandwidth: float, seed) -> tuple[float, float]:
    """Plug-in population MMD from ``draws`` fresh samples of each law.

    Uses the linear-time pairing estimator of MMD^2; returns the square root
    of the (clipped) mean and a delta-method standard error.
    """
    rng = make_rng(seed)
    x = rng.standard_normal(draws)
    z = theta + rng.standard_normal(draws)
    h = draws // 2
    x1, x2, z1, z2 = x[:h], x[h : 2 * h], z[:h], z[h : 2 * h]

    def k(a, b):
        return np.exp(-((a - b) ** 2) / bandwidth**2)

    terms = k(x1, x2) + k(z1, z2) - k(x1, z2) - k(x2, z1)
    m2 = float(terms.mean())
    se2 = float(terms.std(ddof=1) / math.sqrt(h))
    val = math.sqrt(max(m2, 0.0))
    se = se2 / (2.0 * val) if val > 0 else math.sqrt(se2)
    return val, se


def cmd_support_check(cfg: ExperimentConfig, out: Path | None = None, workers: int = 1) -> dict:
    """Acceptance region and acceptance rate on the well-specified Gaussian-location toy.

    Data ``N(0, 1)``, model ``N(theta, 1)``, prior ``N(0, prior_sd^2)``, MMD with
    a fixed Gaussian bandwidth and a fixed threshold. The population
    discrepancy is available in closed form, so the oracle margin is zero.
    """
    s = cfg.support
    n = s.n
    prior = PriorSpec("normal", 0.0, s.prior_sd)
    y = make_rng(derive_seed(cfg.seed, 0)).standard_normal((n, 1))
    sim = GaussianLocationSimulator((1.0,), ((1.0,),))
    disc = MMD(Kernel("gaussian", bandwidth=s.bandwidth))
    res = run_rejection_multi(
        y, prior, sim, [disc], FixedThreshold(s.eps), s.T, n, derive_seed(cfg.seed, 1), workers
    )[0]
    radius = s.eps + 4.0 / math.sqrt(n)
    frac = support_check(res, lambda t: gaussian_location_mmd(t, s.bandwidth), radius)
    c_F = 8.0 / math.sqrt(n)
    band = theorem1_acceptance_band(
        lambda r: gaussian_location_ball_mass(r, prior, s.bandwidth), s.eps, c_F
    )
    p_hat = res.acceptance_rate
    report = {
        "n": n,
        "T": s.T,
        "eps": s.eps,
        "radius": radius,
        "oracle_margin": 0.0,
        "n_accepted": int(res.accepted_mask.sum()),
        "fraction_inside": frac,
        "p_hat": p_hat,
        "band_low": band[0],
        "band_high": band[1],
        "p_hat_in_band": bool(band[0] <= p_hat <= band[1]),
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "posterior_samples.csv").write_text(res.to_csv())
        _write_rows_csv(out / "table.csv", [report])
        _write_json(out / "summary.json", {"experiment": "support-check", **report})
    return report


COMMANDS = {
    "table1": cmd_table1,
    "table2": cmd_table2,
    "coverage": cmd_coverage,
    "bounds": cmd_bounds,
    "rademacher": cmd_rademacher,
    "support-check": cmd_support_check,
}
