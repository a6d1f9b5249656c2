"""Slow reference implementations written as literal loops.

Nothing here imports ``abc_ips``; these are the second route for the
dual-route checks.
"""
import itertools
import math


def _sqdist(a, b):
    return sum((ai - bi) ** 2 for ai, bi in zip(a, b))


def gaussian_k(bw):
    return lambda a, b: math.exp(-_sqdist(a, b) / bw**2)


def mmd_double_sum(y, z, k):
    n, m = len(y), len(z)
    syy = sum(k(a, b) for a in y for b in y) / n**2
    szz = sum(k(a, b) for a in z for b in z) / m**2
    syz = sum(k(a, b) for a in y for b in z) / (n * m)
    return math.sqrt(max(0.0, syy + szz - 2 * syz))


def energy_direct(y, z):
    d = lambda a, b: math.sqrt(_sqdist(a, b))
    n, m = len(y), len(z)
    e = (
        2 * sum(d(a, b) for a in y for b in z) / (n * m)
        - sum(d(a, b) for a in y for b in y) / n**2
        - sum(d(a, b) for a in z for b in z) / m**2
    )
    return math.sqrt(max(0.0, e))


def w1_bruteforce(y, z):
    n = len(y)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        cost = sum(math.sqrt(_sqdist(y[i], z[perm[i]])) for i in range(n)) / n
        best = min(best, cost)
    return best


def ks_direct(y, z):
    pts = sorted(set(y) | set(z))
    best = 0.0
    for t in pts:
        fy = sum(v <= t for v in y) / len(y)
        fz = sum(v <= t for v in z) / len(z)
        best = max(best, abs(fy - fz))
    return best


def tv_direct(y, z):
    keys = set(map(tuple, y)) | set(map(tuple, z))
    cy = {k: 0 for k in keys}
    cz = {k: 0 for k in keys}
    for r in y:
        cy[tuple(r)] += 1
    for r in z:
        cz[tuple(r)] += 1
    return sum(abs(cy[k] / len(y) - cz[k] / len(z)) for k in keys)


def kl_1nn_direct(y, z):
    """1-NN KL estimate; y is the sample of the first argument."""
    n, m, d = len(y), len(z), len(y[0])
    total = 0.0
    for i, a in enumerate(y):
        rho = min(math.sqrt(_sqdist(a, b)) for j, b in enumerate(y) if j != i)
        nu = min(math.sqrt(_sqdist(a, b)) for b in z)
        total += math.log(max(nu, 1e-12) / max(rho, 1e-12))
    return d / n * total + math.log(m / (n - 1))


def rademacher_enumerate(values, sup_fn):
    """Average of ``sup_fn(eps)`` over all sign vectors."""
    n = len(values)
    tot = 0.0
    for eps in itertools.product((-1, 1), repeat=n):
        tot += sup_fn(eps)
    return tot / 2**n
