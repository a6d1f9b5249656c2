"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criteria 6 and 7 have a CI part (the ``*-ci`` presets, run every time) and a
full part. The full part evaluates ``results/table{1,2}-full/table.csv``
produced by ``abc-ips table1 --config preset:table1 --out results/table1-full``
(hours on one core); set ``ABC_IPS_RUN_FULL=1`` to regenerate them inside the
test instead. Without either, the full part is skipped.
"""
import filecmp
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from abc_ips.bounds import (
    BoundInputs,
    ar1_beta_coefficient,
    corollary4_mmd_radius,
    lemma1_upper_prob,
    prop1_simplified_radius,
    prop1_unbounded_radius,
    theorem2_radius,
    theorem3_dependent_radius,
    threshold_schedule,
)
from abc_ips.cli import main
from abc_ips.config import parse_config
from abc_ips.coverage import blocked_coverage, iid_coverage
from abc_ips.discrepancy import (
    Kernel,
    energy_distance,
    kolmogorov_smirnov,
    mmd,
    mean_summary,
    second_moment_summary,
    summary_distance,
    total_variation_empirical,
    wasserstein1,
)
from abc_ips.experiments import ResultTable, cmd_support_check, run_table
from abc_ips.rademacher import (
    KsIndicators,
    LipschitzPinned1D,
    RkhsBall,
    SupNormBall,
    empirical_rademacher,
    ks_complexity_bound,
)
from oracles import naive

ROOT = Path(__file__).parents[1]
RESULTS = ROOT / "results"

TABLE1_MMD = {0.05: 0.024, 0.10: 0.027, 0.15: 0.031}
TABLE2_MMD = {0.05: 0.029, 0.10: 0.036, 0.15: 0.049}


def report(capsys, criterion, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")


def check(capsys, criterion, checks):
    """``checks`` is a list of (label, ok, detail)."""
    bad = [c for c in checks if not c[1]]
    for label, ok, detail in checks:
        with capsys.disabled():
            print(f"    {'ok  ' if ok else 'FAIL'} {label}: {detail}")
    summary = f"{len(checks) - len(bad)}/{len(checks)} checks"
    if bad:
        summary += "; failed: " + ", ".join(c[0] for c in bad)
    report(capsys, criterion, not bad, summary)
    assert not bad, summary


# -------------------------------------------------------------------- 1

def test_criterion_1_oracle_equivalence(capsys):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = {"mmd": 0.0, "energy": 0.0, "energy-kernel": 0.0, "w1": 0.0, "summary": 0.0}
    for _ in range(200):
        n, m, d = rng.integers(2, 7), rng.integers(2, 7), rng.integers(1, 4)
        y, z = rng.normal(size=(n, d)) * rng.uniform(0.2, 3), rng.normal(size=(m, d))
        bw = rng.uniform(0.3, 3.0)
        ly, lz = y.tolist(), z.tolist()
        worst["mmd"] = max(worst["mmd"], abs(
            mmd(y, z, Kernel("gaussian", bandwidth=bw)).value
            - naive.mmd_double_sum(ly, lz, naive.gaussian_k(bw))))
        e = energy_distance(y, z).value
        worst["energy"] = max(worst["energy"], abs(e - naive.energy_direct(ly, lz)))
        worst["energy-kernel"] = max(worst["energy-kernel"], abs(e - mmd(y, z, Kernel("distance")).value))
        f = mean_summary if rng.random() < 0.5 else second_moment_summary
        worst["summary"] = max(worst["summary"], abs(
            summary_distance(y, z, f).value - mmd(y, z, Kernel("summary", summary=f)).value))
        k = rng.integers(2, 7)
        a, b = rng.normal(size=(k, 2)), rng.normal(size=(k, 2))
        worst["w1"] = max(worst["w1"], abs(wasserstein1(a, b).value - naive.w1_bruteforce(a.tolist(), b.tolist())))
    elapsed = time.perf_counter() - start
    checks = [(k, v <= 1e-9, f"max abs diff {v:.2e}") for k, v in worst.items()]
    checks.append(("runtime", elapsed < 10, f"{elapsed:.2f} s"))
    check(capsys, 1, checks)


# -------------------------------------------------------------------- 2

def test_criterion_2_ips_axioms(capsys):
    rng = np.random.default_rng(202)
    evaluators = {
        "mmd": lambda a, b: mmd(a, b, Kernel("gaussian", bandwidth=1.0)).value,
        "energy": lambda a, b: energy_distance(a, b).value,
        "wasserstein": lambda a, b: wasserstein1(a, b).value,
        "summary-mean": lambda a, b: summary_distance(a, b).value,
        "tv": lambda a, b: total_variation_empirical(a, b).value,
        "ks": lambda a, b: kolmogorov_smirnov(a, b).value,
    }
    viol = {k: 0 for k in evaluators}
    for _ in range(500):
        n = rng.integers(1, 7)
        d = rng.integers(1, 3)
        if rng.random() < 0.5:
            x, y, z = (rng.integers(-2, 3, size=(n, d)).astype(float) for _ in range(3))
        else:
            x, y, z = (rng.normal(size=(n, d)) for _ in range(3))
        for name, D in evaluators.items():
            if name == "ks" and d != 1:
                continue
            dxy, dyx, dxz, dyz, dxx = D(x, y), D(y, x), D(x, z), D(y, z), D(x, x)
            ok = (dxy >= 0 and abs(dxy - dyx) <= 1e-9 and abs(dxx) <= 1e-9
                  and dxz <= dxy + dyz + 1e-9)
            viol[name] += not ok
    check(capsys, 2, [(k, v == 0, f"{v} violations in 500 triples") for k, v in viol.items()])


# -------------------------------------------------------------------- 3

def test_criterion_3_rademacher_exactness(capsys):
    rng = np.random.default_rng(303)
    checks = []
    classes = {
        "ks": KsIndicators(),
        "sup-norm": SupNormBall(1.0),
        "lipschitz": LipschitzPinned1D(),
        "rkhs": RkhsBall(Kernel("gaussian", bandwidth=0.8)),
    }
    for n in (6, 9, 12):
        x = rng.normal(size=n)
        for name, fc in classes.items():
            exact = empirical_rademacher(x, fc)
            mc = empirical_rademacher(x, fc, draws=2000, seed=n, exhaustive=False)
            gap = abs(mc.value - exact.value)
            checks.append((f"mc-vs-enum {name} n={n}", gap <= 3 * mc.mc_stderr,
                           f"|diff| {gap:.4f} vs 3se {3 * mc.mc_stderr:.4f}"))
    x = rng.normal(size=(8, 2))
    k = Kernel("gaussian", bandwidth=1.0)
    K = k.gram(x, x)
    ref = naive.rademacher_enumerate(list(range(8)), lambda e: math.sqrt(max(0.0, np.array(e) @ K @ np.array(e))) / 8)
    got = empirical_rademacher(x, RkhsBall(k)).value
    checks.append(("rkhs closed form", abs(got - ref) < 1e-12, f"{got:.12f} vs {ref:.12f}"))
    for b in (0.5, 1.0, 2.0):
        v = empirical_rademacher(np.arange(10.0), SupNormBall(b)).value
        checks.append((f"sup-norm b={b}", abs(v - b) < 1e-12 and v >= b / 2, f"{v}"))
    for n in (10, 100, 1000):
        v = empirical_rademacher(rng.normal(size=n), KsIndicators(), draws=256, seed=1).value
        bound = ks_complexity_bound(n)
        checks.append((f"ks n={n}", v <= bound, f"{v:.4f} <= {bound:.4f}"))
    check(capsys, 3, checks)


# -------------------------------------------------------------------- 4 / 5

def test_criterion_4_lemma1_coverage(capsys):
    start = time.perf_counter()
    rows = iid_coverage(n=100, support=10, deltas=(0.1, 0.2, 0.3), replicates=1000, seed=404)
    elapsed = time.perf_counter() - start
    checks = [
        (f"{r.tail} delta={r.delta}", r.empirical >= 1 - math.exp(-100 * r.delta**2 / 2) - 0.03,
         f"empirical {r.empirical:.3f} vs guaranteed {r.guaranteed:.4f} - 0.03")
        for r in rows
    ]
    checks.append(("runtime", elapsed < 60, f"{elapsed:.1f} s"))
    check(capsys, 4, checks)


def test_criterion_5_lemma2_blocked_coverage(capsys):
    start = time.perf_counter()
    rows = blocked_coverage(n=100, theta=0.5, deltas=(0.5, 1.0), replicates=1000, seed=505)
    elapsed = time.perf_counter() - start
    beta = ar1_beta_coefficient(0.5, 10)
    checks = []
    for r in rows:
        target = 1 - 2 * math.exp(-5 * r.delta**2 / 2) - 2 * 5 * beta - 0.03
        checks.append((f"delta={r.delta}", r.empirical >= target,
                       f"empirical {r.empirical:.3f} vs {target:.4f}"))
    checks.append(("runtime", elapsed < 120, f"{elapsed:.1f} s"))
    check(capsys, 5, checks)


# -------------------------------------------------------------------- 6 / 7

def _preset(name):
    from importlib import resources

    return parse_config((resources.files("abc_ips.presets") / f"{name}.json").read_text())


def table1_ordering_checks(t: ResultTable):
    out = []
    for a in (0.10, 0.15):
        mmd_, w, s, kl = (t.mse(d, a) for d in ("mmd", "wasserstein", "summary-mean", "kl"))
        out.append((f"(b) mmd<wass<summary a={a}", mmd_ < w < s, f"{mmd_:.4f} < {w:.4f} < {s:.4f}"))
        out.append((f"(b) mmd<kl<summary a={a}", mmd_ < kl < s, f"{mmd_:.4f} < {kl:.4f} < {s:.4f}"))
    return out


def table2_ordering_checks(t: ResultTable):
    out = []
    for a in t.alphas:
        vals = {d: t.mse(d, a) for d in t.discrepancies}
        out.append((f"mmd lowest a={a}", min(vals, key=vals.get) == "mmd",
                    ", ".join(f"{d} {v:.4f}" for d, v in vals.items())))
        out.append((f"summary-cov worst a={a}", max(vals, key=vals.get) == "summary-cov",
                    f"summary-cov {vals['summary-cov']:.4f}"))
    return out


def schema_checks(t: ResultTable, cfg):
    keys = {(r.discrepancy, r.alpha) for r in t.rows}
    want = {(d, a) for d in cfg.discrepancies for a in cfg.alphas}
    ok = keys == want and len(t.rows) == len(want)
    finite = all(math.isfinite(r.mean_mse) and r.mean_mse >= 0 for r in t.rows)
    times = all(r.seconds_per_eval > 0 for r in t.rows)
    return [
        ("schema: one row per (discrepancy, alpha)", ok, f"{len(t.rows)} rows"),
        ("schema: finite MSEs", finite, ""),
        ("schema: positive timings", times, ""),
    ]


def ratio_check(label, t, name):
    vals = [t.mse(name, a) for a in t.alphas]
    r = max(vals) / min(vals)
    return (label, r <= 1.5, f"max/min {r:.3f}")


def band_checks(t, targets):
    out = []
    for a, p in targets.items():
        v = t.mse("mmd", a)
        out.append((f"(a) mmd a={a} in [0.5x, 2x] of {p}", 0.5 * p <= v <= 2 * p, f"{v:.4f}"))
    return out


def _full_table(kind):
    out = RESULTS / f"{kind}-full"
    if os.environ.get("ABC_IPS_RUN_FULL") == "1":
        assert main([kind, "--config", f"preset:{kind}", "--out", str(out)]) == 0
    if not (out / "table.csv").exists():
        return None
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"] == _preset(kind).model_dump(), "full results were produced by a different config"
    timing = (out / "timing.csv").read_text() if (out / "timing.csv").exists() else None
    return ResultTable.from_csv((out / "table.csv").read_text(), timing)


def test_criterion_6_table1_ci(capsys):
    cfg = _preset("table1-ci")
    t, _ = run_table(cfg)
    check(capsys, "6-ci", schema_checks(t, cfg) + table1_ordering_checks(t))


def test_criterion_6_table1_full(capsys):
    t = _full_table("table1")
    if t is None:
        report(capsys, "6-full", False, "SKIPPED: no full-preset results")
        pytest.skip("full table1 results not present")
    checks = band_checks(t, TABLE1_MMD) + table1_ordering_checks(t)
    w = [t.mse("wasserstein", a) for a in t.alphas]
    checks.append(("(c) wasserstein increasing", all(a < b for a, b in zip(w, w[1:])),
                   " < ".join(f"{v:.4f}" for v in w)))
    checks.append(ratio_check("(d) kl flat", t, "kl"))
    check(capsys, "6-full", checks)


def test_criterion_7_table2_ci(capsys):
    cfg = _preset("table2-ci")
    t, _ = run_table(cfg)
    check(capsys, "7-ci", schema_checks(t, cfg) + table2_ordering_checks(t))


def test_criterion_7_table2_full(capsys):
    t = _full_table("table2")
    if t is None:
        report(capsys, "7-full", False, "SKIPPED: no full-preset results")
        pytest.skip("full table2 results not present")
    checks = band_checks(t, TABLE2_MMD) + table2_ordering_checks(t)
    checks.append(ratio_check("kl flat", t, "kl"))
    check(capsys, "7-full", checks)


# -------------------------------------------------------------------- 8

def test_criterion_8_support_check(capsys):
    start = time.perf_counter()
    rep = cmd_support_check(_preset("support-check"))
    elapsed = time.perf_counter() - start
    check(capsys, 8, [
        ("accepted inside eps + 4/sqrt(n)", rep["fraction_inside"] >= 0.95,
         f"{rep['fraction_inside']:.4f} of {rep['n_accepted']} accepted (radius {rep['radius']:.4f})"),
        ("p_hat in acceptance band", rep["p_hat_in_band"],
         f"{rep['band_low']:.4f} <= {rep['p_hat']:.4f} <= {rep['band_high']:.4f}"),
        ("runtime", elapsed < 600, f"{elapsed:.1f} s"),
    ])


# -------------------------------------------------------------------- 9

def test_criterion_9_bound_regression(capsys):
    eb = 0.214596602628934723963618357029
    pins = [
        ("schedule R=0.1", threshold_schedule(100, 0.1), 0.2145966026289347),
        ("schedule R=1", threshold_schedule(100, 1.0), 1.5271796258079011),
        ("theorem2 radius", theorem2_radius(BoundInputs(n=100, R=0.1, eps_bar=eb)).radius, 0.8366759605634140517),
        ("theorem2 mass", theorem2_radius(BoundInputs(n=100, R=0.1, eps_bar=eb)).mass, 0.06),
        ("corollary4 L=1", corollary4_mmd_radius(100, 1.0), 1.0870142276480996),
        ("corollary4 L=2", corollary4_mmd_radius(100, 2.0), 1.1445152140209852),
        ("prop1 simplified", prop1_simplified_radius(0.0, 100.0, 10**4, 1.0), 0.5027014276741062),
        ("theorem3 radius", theorem3_dependent_radius(BoundInputs(n=100, eps_bar=0.5, R=0.2)).radius, 2.9224574986955041),
        ("theorem3 mass", theorem3_dependent_radius(BoundInputs(n=100, eps_bar=0.5, R=0.2)).mass, 0.12),
        ("lemma1 n=100 delta=0.3", lemma1_upper_prob(100, 1.0, 0.3), 0.9888910034617577),
        ("beta(0.5, 2)", ar1_beta_coefficient(0.5, 2), 0.14433756729740644),
        ("beta(0.5, 10)", ar1_beta_coefficient(0.5, 10), 0.0005638186222554939),
        ("ks bound n=100", ks_complexity_bound(100), 0.42965663112961538),
        ("mmd {0} vs {1}", mmd([[0.0]], [[1.0]], Kernel("gaussian", bandwidth=1.0)).value, 1.1243847729568003),
    ]
    checks = [(name, abs(got - want) <= 1e-9, f"{got!r} vs {want!r}") for name, got, want in pins]
    rng = np.random.default_rng(909)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(10, 10**7))
        M, L, es = rng.uniform(1, n), rng.uniform(0.1, 5), rng.uniform(0, 2)
        worst = max(worst, abs(prop1_unbounded_radius(es, None, M, n, L).radius - prop1_simplified_radius(es, M, n, L)))
    checks.append(("prop1 identity", worst <= 1e-12, f"max diff {worst:.1e}"))
    grid = [10**k for k in range(1, 13)]
    vals = [corollary4_mmd_radius(n, 1.0, 0.3) for n in grid]
    mono = all(a > b for a, b in zip(vals, vals[1:])) and all(v > 0.3 for v in vals) and vals[-1] - 0.3 < 1e-4
    checks.append(("corollary4 decreases to eps*", mono, f"{vals[0]:.4f} -> {vals[-1]:.6f}"))
    check(capsys, 9, checks)


# -------------------------------------------------------------------- 10

def test_criterion_10_determinism(tmp_path, capsys):
    a, b = tmp_path / "w1", tmp_path / "w8"
    assert main(["table1", "--config", "preset:table1-smoke", "--workers", "1", "--out", str(a)]) == 0
    assert main(["table1", "--config", "preset:table1-smoke", "--workers", "8", "--out", str(b)]) == 0
    checks = [
        (f, filecmp.cmp(a / f, b / f, shallow=False), "byte-identical")
        for f in ("table.csv", "posterior_samples.csv")
    ]
    check(capsys, 10, checks)
