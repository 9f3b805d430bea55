"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's own shortcuts: the
brute-force distribution walks every spin configuration, the scalar
mean-field root comes from bisection, and derivatives come from
Richardson-extrapolated central differences.
"""

import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from mscw.model import ModelSpec, validate_model


def make_model(sizes, J, h=None):
    return validate_model(ModelSpec.from_sizes(sizes, np.asarray(J, dtype=float), h))


def random_pd_model(rng, n, sizes=None, scale=1.0, field=0.3):
    """A random model with positive definite J and positive diagonal."""
    B = rng.normal(size=(n, n))
    J = scale * (B @ B.T / n + 0.2 * np.eye(n))
    h = rng.uniform(-field, field, size=n)
    if sizes is None:
        sizes = tuple(int(s) for s in rng.integers(1, 5, size=n))
    return make_model(sizes, J, h)


def all_configs(N):
    return np.array(list(itertools.product((-1, 1), repeat=N)), dtype=float)


def brute_force_sums(model):
    """Law of the species sums from all 2^N configurations, by direct site sums."""
    part = model.partition
    N = part.N
    lab = np.repeat(np.arange(part.n), part.sizes)
    sig = all_configs(N)
    Jfull = model.J[np.ix_(lab, lab)]
    hfull = model.h[lab]
    # -H over sites, written out independently of the library's energy routine
    minus_H = ((sig @ Jfull) * sig).sum(axis=1) / (2 * N) + sig @ hfull
    counts = np.stack([(sig[:, lab == l] > 0).sum(axis=1) for l in range(part.n)], axis=1)
    keys, inverse = np.unique(counts, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    logZ = logsumexp(minus_H)
    out = np.zeros([s + 1 for s in part.sizes])
    for k, c in enumerate(keys):
        out[tuple(c)] = math.exp(logsumexp(minus_H[inverse == k]) - logZ)
    return out


def bisect_tanh_root(J, h=0.0, lo=1e-9, hi=1.0, iters=200):
    """Positive root of ``mu = tanh(J mu + h)`` by bisection."""
    f = lambda m: m - math.tanh(J * m + h)
    a, b = lo, hi
    fa = f(a)
    for _ in range(iters):
        c = 0.5 * (a + b)
        fc = f(c)
        if (fc > 0) == (fa > 0):
            a, fa = c, fc
        else:
            b = c
    return 0.5 * (a + b)


def richardson(f, x, step, i):
    """Central difference of f along axis i with one Richardson step (O(h^4))."""
    e = np.zeros_like(x)
    e[i] = 1.0
    d = lambda s: (f(x + s * e) - f(x - s * e)) / (2 * s)
    return (4.0 * d(step / 2) - d(step)) / 3.0


def gamma_quartic_moment(c, p):
    """``E[x^p]`` for density proportional to ``exp(-c x^4)`` (p even)."""
    if p % 2:
        return 0.0
    return c ** (-p / 4) * math.gamma((p + 1) / 4) / math.gamma(0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def k1_model():
    return make_model((1, 1), [[0.8, 0.3], [0.3, 0.8]])


@pytest.fixture
def k2_model():
    return make_model((1, 1), [[2.0, 0.0], [0.0, 2.0]])


@pytest.fixture
def product_model():
    return make_model((1, 1), [[2.0, 0.0], [0.0, 1.0]])


@pytest.fixture
def two_minima_model():
    return make_model((1, 1), [[3.0, 0.4], [0.4, 3.0]])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
