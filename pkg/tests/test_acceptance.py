"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every criterion prints one ``[PASS]`` or ``[FAIL]`` line; the lines are
also repeated in pytest's terminal summary. Run standalone with
``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from mscw.exactdist import (
    compare_to_law,
    conditional_joint,
    exact_joint,
    glauber_sample,
    normalized_moments,
)
from mscw.landscape import (
    MinimumType,
    eval_G,
    find_global_minima,
    grad_G,
    hess_G,
    taylor4_G,
)
from mscw.limits import build_limit_law, chi_via_hessian, susceptibility_chi
from mscw.model import SpeciesPartition, energy_quadratic, g_per_spin, magnetizations

from conftest import (
    ACCEPTANCE_LINES,
    all_configs,
    bisect_tanh_root,
    brute_force_sums,
    make_model,
    richardson,
)


def record(cid, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def small_models(count=200, seed=1):
    """Random models with n <= 3 species and at most 12 spins in total."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(1, 4))
        sizes = tuple(int(s) for s in rng.integers(1, 5, size=n))
        if sum(sizes) > 12:
            continue
        B = rng.normal(size=(n, n))
        J = B @ B.T / n + rng.uniform(0.1, 1.5) * np.eye(n)
        h = rng.uniform(-0.5, 0.5, size=n)
        out.append(make_model(sizes, J, h))
    return out


def test_c1_hamiltonian_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for m in small_models():
        sig = all_configs(m.partition.N)
        H = energy_quadratic(sig, m)
        ref = -m.partition.N * g_per_spin(magnetizations(sig, m.partition), m)
        worst = max(worst, float(np.max(np.abs(H - ref) / np.maximum(1.0, np.abs(ref)))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 10
    record(1, ok, f"max relative |H + N g| = {worst:.2e} over 200 models ({dt:.1f} s)")
    assert ok


def test_c2_brute_force_distribution():
    t0 = time.perf_counter()
    worst = 0.0
    for m in small_models():
        worst = max(worst, float(np.max(np.abs(exact_joint(m).probabilities() - brute_force_sums(m)))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 30
    record(2, ok, f"max probability error vs 2^N enumeration = {worst:.2e} ({dt:.1f} s)")
    assert ok


def test_c3_covariance_cross_formula():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst, spd, done = 0.0, True, 0
    while done < 100:
        n = int(rng.integers(1, 4))
        B = rng.normal(size=(n, n))
        J = rng.uniform(0.3, 2.0) * (B @ B.T / n + 0.3 * np.eye(n))
        m = make_model(tuple(int(s) for s in rng.integers(1, 6, size=n)), J, rng.uniform(-0.5, 0.5, n))
        ms = find_global_minima(m, grid_points_per_axis=7)
        if len(ms) != 1 or ms.points[0].k != MinimumType.TYPE1:
            continue
        mu = ms.points[0].mu
        a, b = susceptibility_chi(mu, m), chi_via_hessian(mu, m)
        worst = max(worst, float(np.max(np.abs(a - b))))
        for c in (a, b):
            spd &= bool(np.array_equal(c, c.T) and np.linalg.eigvalsh(c)[0] > 0)
        done += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and spd and dt < 10
    record(3, ok, f"max |chi_response - chi_hessian| = {worst:.2e}, both SPD={spd} ({dt:.1f} s)")
    assert ok


def test_c4_gaussian_limit_k1():
    t0 = time.perf_counter()
    m = make_model((1, 1), [[0.8, 0.3], [0.3, 0.8]])
    pt = find_global_minima(m).points[0]
    law = build_limit_law(pt, m)
    rel = []
    for s in (100, 200, 400, 800):
        dist = exact_joint(m, SpeciesPartition((s, s)))
        rep = normalized_moments(dist, center=pt.mu, exponents=law.exponents)
        rel.append(compare_to_law(rep, law).cov_rel)
    dt = time.perf_counter() - t0
    ok = all(a > b for a, b in zip(rel, rel[1:])) and rel[-1] <= 0.05 and dt < 120
    record(4, ok, "covariance discrepancy " + ", ".join(f"{r:.4f}" for r in rel)
           + f" at N_l = 100..800 ({dt:.1f} s)")
    assert ok


def test_c5_quartic_limit_k2():
    t0 = time.perf_counter()
    m = make_model((1, 1), [[2.0, 0.0], [0.0, 2.0]])
    pt = find_global_minima(m).points[0]
    assert pt.k == MinimumType.TYPE2
    law = build_limit_law(pt, m)
    a = m.alphas
    err, vals = [], []
    for s in (200, 500, 1000):
        dist = exact_joint(m, SpeciesPartition((s, s)))
        rep = normalized_moments(dist, center=np.zeros(2), exponents=law.exponents)
        # y = x / alpha^(1/4) has limit density exp(-y^4/24), E[y^4] = 6
        y4 = rep.fourth / a
        vals.append(y4)
        err.append(float(np.max(np.abs(y4 - 6.0))))
    dt = time.perf_counter() - t0
    ok = err[-1] <= 0.15 * 6 and all(p > q for p, q in zip(err, err[1:])) and dt < 180
    record(5, ok, "E[y^4] per coordinate " + ", ".join(f"{v[0]:.4f}" for v in vals)
           + f" at N_l = 200, 500, 1000 (target 6; raw S/N_l^(3/4) gives "
           + ", ".join(f"{v[0] * a[0]:.4f}" for v in vals) + f" -> 3; {dt:.1f} s)")
    assert ok


def test_c6_product_case():
    t0 = time.perf_counter()
    m = make_model((1, 1), [[2.0, 0.0], [0.0, 1.0]])
    pt = find_global_minima(m).points[0]
    assert pt.k == MinimumType.SEPARABLE
    law = build_limit_law(pt, m)
    reports = {}
    for s in (800, 1000):
        dist = exact_joint(m, SpeciesPartition((s, s)))
        reports[s] = normalized_moments(dist, center=np.zeros(2), exponents=law.exponents)
    kurt2 = reports[800].kurtosis[1]
    y4 = reports[1000].fourth[0] / m.alphas[0]
    cross = max(abs(r.covariance[0, 1]) for r in reports.values())
    dt = time.perf_counter() - t0
    ok = abs(kurt2 - 3) <= 0.05 * 3 and abs(y4 - 6) <= 0.15 * 6 and cross <= 1e-10 and dt < 180
    record(6, ok, f"coord 2 kurtosis {kurt2:.4f} at N_2=800, coord 1 E[y^4] {y4:.4f} at N_1=1000, "
           f"cross covariance {cross:.1e} ({dt:.1f} s)")
    assert ok


def _ball_experiment(J, sizes=(200, 400, 800)):
    m = make_model((1, 1), J)
    ms = find_global_minima(m)
    if len(ms) < 2:
        return None, ms
    pt = ms.points[-1]  # lexicographically largest: +mu*
    law = build_limit_law(pt, m)
    rows = []
    for s in sizes:
        dist = conditional_joint(m, SpeciesPartition((s, s)), pt.mu, ms.delta_bar / 2, ms.delta_bar)
        rep = normalized_moments(dist, center=pt.mu, exponents=law.exponents)
        mean_rel = np.abs(dist.mean_magnetization() - pt.mu) / np.abs(pt.mu)
        rows.append((s, float(mean_rel.max()), compare_to_law(rep, law).cov_rel))
    return rows, ms


@pytest.mark.xfail(strict=True, reason="this coupling has a single minimum at the origin, not two")
def test_c7_ball_conditioning_literal_model():
    t0 = time.perf_counter()
    rows, ms = _ball_experiment([[1.5, 0.2], [0.2, 1.5]])
    dt = time.perf_counter() - t0
    if rows is None:
        mu = ms.points[0].mu
        lam = np.linalg.eigvalsh(make_model((1, 1), [[1.5, 0.2], [0.2, 1.5]]).K).max()
        record(7, False, f"premise fails: {len(ms)} global minimum at mu={np.round(mu, 12).tolist()}; "
               f"largest eigenvalue of J diag(alpha) is {lam:.2f} < 1 ({dt:.1f} s)")
        pytest.fail("J=[[1.5,0.2],[0.2,1.5]] with alpha=(1/2,1/2) has a unique minimum")
    s, mean_rel, cov_rel = rows[-1]
    ok = mean_rel <= 0.02 and cov_rel <= 0.07 and dt < 120
    record(7, ok, f"mean rel err {mean_rel:.4f}, covariance rel err {cov_rel:.4f} at N_l={s}")
    assert ok


def test_c7b_ball_conditioning_two_minima():
    t0 = time.perf_counter()
    rows, ms = _ball_experiment([[3.0, 0.4], [0.4, 3.0]])
    dt = time.perf_counter() - t0
    assert rows is not None and len(ms) == 2
    s, mean_rel, cov_rel = rows[-1]
    ok = mean_rel <= 0.02 and cov_rel <= 0.07 and dt < 120
    record("7b", ok, "J=[[3,0.4],[0.4,3]], ball B(+mu*, delta/2): covariance rel err "
           + ", ".join(f"{r[2]:.4f}" for r in rows)
           + f" at N_l = 200..800, mean rel err {mean_rel:.2e} at 800 ({dt:.1f} s)")
    assert ok


def _mixed_second(f, x, i, j, h):
    ei = np.zeros_like(x)
    ej = np.zeros_like(x)
    ei[i] = h
    ej[j] = h
    return (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)


def test_c8_derivatives_vs_richardson():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = 0.0

    def rel(a, b):
        return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))

    for _ in range(200):
        n = int(rng.integers(1, 4))
        B = rng.normal(size=(n, n))
        m = make_model(tuple(int(s) for s in rng.integers(1, 5, size=n)),
                       B @ B.T / n + 0.5 * np.eye(n), rng.uniform(-0.5, 0.5, n))
        x = rng.uniform(-1.5, 1.5, size=n)
        G = lambda y: eval_G(y, m)
        g_fd = np.array([richardson(G, x, 1e-3, i) for i in range(n)])
        H_fd = np.array([[richardson(lambda y: richardson(G, y, 1e-3, j), x, 1e-3, i)
                          for j in range(n)] for i in range(n)])
        H = lambda y: hess_G(y, m)
        T3_fd = np.array([richardson(H, x, 1e-3, i) for i in range(n)])
        T4_fd = np.array([[(4 * _mixed_second(H, x, i, j, 1e-3) - _mixed_second(H, x, i, j, 2e-3)) / 3
                           for j in range(n)] for i in range(n)])
        t = taylor4_G(x, m)
        worst = max(worst, rel(grad_G(x, m), g_fd), rel(hess_G(x, m), H_fd),
                    rel(t.third, T3_fd), rel(t.fourth, T4_fd))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 10
    record(8, ok, f"max relative error of grad/hess/third/fourth = {worst:.2e} at 200 points ({dt:.1f} s)")
    assert ok


def test_c9_classical_reduction():
    t0 = time.perf_counter()
    ms = find_global_minima(make_model((1,), [[1.5]]))
    root = bisect_tanh_root(1.5)
    mus = sorted(float(p.mu[0]) for p in ms.points)
    err_mu = max(abs(mus[0] + root), abs(mus[1] - root)) if len(mus) == 2 else math.inf
    chi = float(susceptibility_chi([0.0], make_model((1,), [[0.5]]))[0, 0])
    dt = time.perf_counter() - t0
    ok = len(mus) == 2 and err_mu <= 1e-10 and abs(chi - 2) <= 1e-10 and dt < 1
    record(9, ok, f"minima {mus} vs bisection +-{root:.12f} (err {err_mu:.1e}); chi = {chi!r} ({dt:.2f} s)")
    assert ok


def test_c10_glauber_vs_exact():
    t0 = time.perf_counter()
    m = make_model((50, 50), [[0.8, 0.3], [0.3, 0.8]], [0.1, -0.05])
    mu = find_global_minima(m).points[0].mu
    exact = normalized_moments(exact_joint(m), center=mu)
    mc = glauber_sample(m, sweeps=100_000, burn_in=1000, seed=7, center=mu)
    z = {}
    for key in ("mean", "covariance", "third", "fourth", "kurtosis"):
        diff = np.asarray(getattr(mc, key)) - np.asarray(getattr(exact, key))
        z[key] = float(np.max(np.abs(diff) / mc.stderr[key]))
    dt = time.perf_counter() - t0
    ok = max(z.values()) <= 3 and dt < 60
    record(10, ok, "max |z| " + ", ".join(f"{k} {v:.2f}" for k, v in z.items()) + f" ({dt:.1f} s)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
