import math

import numpy as np
import pytest

from abc_ips.abc_engine import PriorSpec
from abc_ips.coverage import ks_to_discrete_uniform, ks_to_normal
from abc_ips.discrepancy import Kernel, mmd
from abc_ips.experiments import (
    gaussian_location_ball_mass,
    gaussian_location_mmd,
    plugin_mmd,
)


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.0, 2.5])
def test_closed_form_mmd_vs_plugin(theta):
    est, se = plugin_mmd(theta, 10**5, 1.0, seed=int(theta * 10))
    assert abs(est - gaussian_location_mmd(theta)) <= max(4 * se, 0.02)


def test_closed_form_mmd_vs_large_vstatistic():
    vals = []
    for s in range(8):
        rng = np.random.default_rng(s)
        x, z = rng.normal(size=(2000, 1)), 1.2 + rng.normal(size=(2000, 1))
        vals.append(mmd(x, z, Kernel("gaussian", bandwidth=1.0)).value)
    assert abs(np.mean(vals) - gaussian_location_mmd(1.2)) < 3 * np.std(vals, ddof=1) / math.sqrt(8) + 1e-3


def test_ball_mass_inverts_mmd():
    prior = PriorSpec()
    for r in (0.05, 0.2, 0.5, 0.9):
        t = math.sqrt(-5.0 * math.log1p(-r**2 / (2 / math.sqrt(5))))
        assert abs(gaussian_location_mmd(t) - r) < 1e-12
        assert abs(gaussian_location_ball_mass(r, prior) - (prior.cdf(t) - prior.cdf(-t))) < 1e-15
    assert gaussian_location_ball_mass(-0.1, prior) == 0.0
    assert gaussian_location_ball_mass(5.0, prior) == 1.0


def test_ks_helpers():
    x = np.array([1, 1, 2, 3, 3, 3], dtype=float)
    # ecdf at 1,2,3 = 2/6, 3/6, 1; uniform{1,2,3} cdf 1/3, 2/3, 1
    assert abs(ks_to_discrete_uniform(x, 3) - 1 / 6) < 1e-15
    from scipy import stats

    y = np.random.default_rng(1).normal(size=50)
    assert abs(ks_to_normal(y, 0.0, 1.0) - stats.kstest(y, "norm").statistic) < 1e-12


@pytest.mark.parametrize("alpha", [0.05, 0.10, 0.15])
def test_huber_bound_dominates_plugin_mmd(alpha):
    from abc_ips.bounds import huber_eps_star_bound
    from abc_ips.experiments import table1_data

    # clean law vs contaminated law, linear-time MMD^2 on 10^5 pairs, unit bandwidth (b = 1)
    clean = table1_data(0.0, 200_000, 1)
    dirty = table1_data(alpha, 200_000, 2)
    h = 100_000
    k = lambda a, b: np.exp(-((a - b) ** 2).sum(axis=1))
    terms = k(clean[:h], clean[h:]) + k(dirty[:h], dirty[h:]) - k(clean[:h], dirty[h:]) - k(clean[h:], dirty[:h])
    est = math.sqrt(max(terms.mean(), 0.0))
    assert est <= huber_eps_star_bound(1.0, alpha)
    # the mixture identity gives alpha * MMD(clean, contaminant), well below the bound
    assert est < alpha * math.sqrt(2) + 0.02
