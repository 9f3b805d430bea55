"""Exact finite-N law of the species sums, and a heat-bath sampler.

The Boltzmann weight depends on a configuration only through the species
sums, so the joint law of ``(S_1, ..., S_n)`` is enumerated over the counts
``c_l`` of up spins with binomial multiplicities::

    log w(c) = sum_l ln C(N_l, c_l) + (1/2N) <J S, S> + <h, S>,  S = 2c - N_l
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.special import logsumexp

from .landscape import find_global_minima
from .limits import LimitLaw, MomentReport, law_log_density, law_moments
from .model import ModelError, SpeciesPartition, ValidatedModel, log_binomial

MAX_GRID = 10**7


class BudgetExceeded(ValueError):
    pass


@dataclass
class FiniteDist:
    model: ValidatedModel
    log_weights: np.ndarray
    log_Z: float
    condition: tuple[np.ndarray, float] | None = None
    boundary_mass: float = 0.0
    _p: np.ndarray | None = field(default=None, init=False, repr=False)

    @property
    def partition(self) -> SpeciesPartition:
        return self.model.partition

    @property
    def boundary_flag(self) -> bool:
        return self.boundary_mass > 0.01

    def probabilities(self) -> np.ndarray:
        if self._p is None:
            self._p = np.exp(self.log_weights - self.log_Z)
            self._p.setflags(write=False)
        return self._p

    def sums(self, l: int) -> np.ndarray:
        N_l = self.partition.sizes[l]
        return 2.0 * np.arange(N_l + 1) - N_l

    def magnetizations(self, l: int) -> np.ndarray:
        return self.sums(l) / self.partition.sizes[l]

    def marginal(self, *axes: int) -> np.ndarray:
        p = self.probabilities()
        other = tuple(i for i in range(p.ndim) if i not in axes)
        m = p.sum(axis=other) if other else p
        if len(axes) == 2 and axes[0] > axes[1]:
            m = m.T
        return m

    def mean_magnetization(self) -> np.ndarray:
        return np.array(
            [math.fsum(self.marginal(l) * self.magnetizations(l)) for l in range(self.partition.n)]
        )


def _check_partition(model: ValidatedModel, partition: SpeciesPartition | None) -> ValidatedModel:
    if partition is None or partition.sizes == model.partition.sizes:
        return model
    if partition.n != model.n:
        raise ModelError(f"partition has {partition.n} species, model has {model.n}")
    if partition.fractions != model.partition.fractions:
        raise ModelError(
            f"partition sizes {partition.sizes} change the species proportions of {model.partition.sizes}"
        )
    return model.with_partition(partition)


def _grid_sums(partition: SpeciesPartition) -> list[np.ndarray]:
    n = partition.n
    out = []
    for l, N_l in enumerate(partition.sizes):
        shape = [1] * n
        shape[l] = N_l + 1
        out.append((2.0 * np.arange(N_l + 1) - N_l).reshape(shape))
    return out


def exact_joint(model: ValidatedModel, partition: SpeciesPartition | None = None) -> FiniteDist:
    """Exact joint law of the species sums by count enumeration."""
    model = _check_partition(model, partition)
    part = model.partition
    size = math.prod(s + 1 for s in part.sizes)
    if size > MAX_GRID:
        raise BudgetExceeded(f"grid of {size} states exceeds the budget of {MAX_GRID}")
    n, N = part.n, part.N
    S = _grid_sums(part)
    lw = np.zeros([s + 1 for s in part.sizes])
    for l, N_l in enumerate(part.sizes):
        c = (S[l] + N_l) / 2.0
        lw = lw + log_binomial(N_l, c) + model.h[l] * S[l]
        for s in range(n):
            lw = lw + (model.J[l, s] / (2.0 * N)) * (S[l] * S[s])
    return FiniteDist(model, lw, float(logsumexp(lw)))


def _ball_distance(part: SpeciesPartition, center) -> np.ndarray:
    d2 = 0.0
    for l, S_l in enumerate(_grid_sums(part)):
        d2 = d2 + (S_l / part.sizes[l] - center[l]) ** 2
    return np.sqrt(d2)


def conditional_joint(
    model: ValidatedModel,
    partition: SpeciesPartition | None,
    center,
    radius: float,
    delta_bar: float | None = None,
) -> FiniteDist:
    """Joint law conditioned on the magnetization vector lying in a closed ball.

    ``delta_bar`` (minimum distance between global minima), when given,
    bounds the admissible radius.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    if delta_bar is not None and math.isfinite(delta_bar) and radius >= delta_bar:
        raise ValueError(f"radius {radius} must be below the minima separation {delta_bar}")
    full = exact_joint(model, partition)
    part = full.partition
    center = np.asarray(center, dtype=float)
    if center.shape != (part.n,):
        raise ValueError(f"ball center must have {part.n} coordinates")
    dist = _ball_distance(part, center)
    inside = dist <= radius * (1 + 1e-12)
    if not inside.any():
        raise ValueError("the ball contains no grid point")
    lw = np.where(inside, full.log_weights, -np.inf)
    log_Z = float(logsumexp(lw))
    half_cell = math.sqrt(sum((1.0 / s) ** 2 for s in part.sizes))
    near = inside & (np.abs(dist - radius) <= half_cell)
    p = np.exp(lw - log_Z)
    boundary = float(p[near].sum())
    return FiniteDist(full.model, lw, log_Z, (center, float(radius)), boundary)


def _default_center(dist: FiniteDist) -> np.ndarray:
    minima = find_global_minima(dist.model)
    if dist.condition is not None:
        return minima.nearest(dist.condition[0]).mu
    if len(minima) != 1:
        raise ValueError("several global minima: pass a center or condition on a ball")
    return minima.points[0].mu


def _normalized_axes(dist: FiniteDist, center, exponents) -> list[np.ndarray]:
    sizes = dist.partition.sizes
    return [
        (dist.sums(l) - sizes[l] * center[l]) / sizes[l] ** (1.0 - exponents[l])
        for l in range(len(sizes))
    ]


def normalized_moments(dist: FiniteDist, center=None, exponents=None) -> MomentReport:
    """Moments of ``x_l = (S_l - N_l mu_l) / N_l^(1 - gamma_l)`` under ``dist``.

    ``center`` defaults to the theoretical minimum of G (nearest to the ball
    center for conditioned laws); ``exponents`` default to 1/2.
    """
    n = dist.partition.n
    center = _default_center(dist) if center is None else np.asarray(center, dtype=float)
    exponents = np.full(n, 0.5) if exponents is None else np.asarray(exponents, dtype=float)
    xs = _normalized_axes(dist, center, exponents)
    marg = [dist.marginal(l) for l in range(n)]

    def e1(l, f):
        return math.fsum(marg[l] * f)

    mean = np.array([e1(l, xs[l]) for l in range(n)])
    third = np.array([e1(l, xs[l] ** 3) for l in range(n)])
    fourth = np.array([e1(l, xs[l] ** 4) for l in range(n)])
    kurt = np.empty(n)
    cov = np.empty((n, n))
    cross = np.empty((n, n))
    for l in range(n):
        dx = xs[l] - mean[l]
        var = e1(l, dx**2)
        cov[l, l] = var
        kurt[l] = e1(l, dx**4) / var**2
        cross[l, l] = fourth[l]
        for m in range(l + 1, n):
            P = dist.marginal(l, m)
            dy = xs[m] - mean[m]
            cov[l, m] = cov[m, l] = math.fsum((P * np.outer(dx, dy)).ravel())
            cross[l, m] = cross[m, l] = math.fsum((P * np.outer(xs[l] ** 2, xs[m] ** 2)).ravel())
    return MomentReport(
        mean=mean, covariance=cov, third=third, fourth=fourth, kurtosis=kurt,
        cross_fourth=cross, exponents=exponents, center=center,
    )


@dataclass
class Discrepancy:
    cov_abs: float
    cov_rel: float
    mean_abs: float
    fourth_abs: np.ndarray
    kurtosis_abs: np.ndarray
    tv: float | None = None


def _discretized_tv(dist: FiniteDist, law: LimitLaw, center, exponents) -> float:
    xs = _normalized_axes(dist, center, exponents)
    widths = [2.0 / s ** (1.0 - g) for s, g in zip(dist.partition.sizes, exponents)]
    X = np.stack(np.meshgrid(*xs, indexing="ij"), axis=-1)
    q = np.exp(law_log_density(law, X)) * math.prod(widths)
    p = dist.probabilities()
    # mass the discretized law puts off the grid counts against the match
    return 0.5 * math.fsum(np.abs(p - q).ravel()) + 0.5 * abs(1.0 - math.fsum(q.ravel()))


def compare_to_law(report: MomentReport, law: LimitLaw, dist: FiniteDist | None = None) -> Discrepancy:
    """Entrywise discrepancies between observed moments and a limit law.

    A discretized total-variation distance is added for one- and
    two-dimensional laws with a quartic factor when ``dist`` is supplied.
    """
    if not np.allclose(report.exponents, law.exponents, rtol=0, atol=1e-15):
        raise ValueError(
            f"normalization exponents {report.exponents.tolist()} do not match the law's {np.asarray(law.exponents).tolist()}"
        )
    ref = law_moments(law)
    dcov = np.abs(report.covariance - ref.covariance)
    tv = None
    has_quartic = law.kind == "quartic" or any(f.kind == "quartic" for f in law.factors)
    if dist is not None and has_quartic and dist.partition.n <= 2:
        tv = _discretized_tv(dist, law, report.center, report.exponents)
    return Discrepancy(
        cov_abs=float(dcov.max()),
        cov_rel=float(dcov.max() / np.max(np.abs(ref.covariance))),
        mean_abs=float(np.max(np.abs(report.mean - ref.mean))),
        fourth_abs=np.abs(report.fourth - ref.fourth),
        kurtosis_abs=np.abs(report.kurtosis - ref.kurtosis),
        tv=tv,
    )


@numba.njit(cache=True)
def _heat_bath(counts, sizes, bounds, J, h, N, u_site, u_acc, n_sweeps, out):
    n = sizes.size
    S = np.empty(n)
    for l in range(n):
        S[l] = 2.0 * counts[l] - sizes[l]
    k = 0
    for sw in range(n_sweeps):
        for _ in range(N):
            site = int(u_site[k] * N)
            if site >= N:
                site = N - 1
            l = 0
            while site >= bounds[l + 1]:
                l += 1
            spin = 1.0 if site - bounds[l] < counts[l] else -1.0
            field = h[l] - J[l, l] * spin / N
            for s in range(n):
                field += J[l, s] * S[s] / N
            p_up = 1.0 / (1.0 + math.exp(-2.0 * field))
            new = 1.0 if u_acc[k] < p_up else -1.0
            if new != spin:
                counts[l] += 1 if new > 0 else -1
                S[l] += new - spin
            k += 1
        for l in range(n):
            out[sw, l] = S[l]


def simulate_sums(
    model: ValidatedModel,
    partition: SpeciesPartition | None,
    sweeps: int,
    seed: int,
    chunk: int = 2000,
) -> np.ndarray:
    """Species sums after each sweep of single-site heat-bath updates.

    Spins within a species are exchangeable, so the chain is run on the up
    counts: a uniformly chosen site of species l is up with probability
    ``c_l / N_l``. This is an exact lumping of the site-level dynamics.
    """
    model = _check_partition(model, partition)
    part = model.partition
    sizes = np.array(part.sizes, dtype=np.int64)
    bounds = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    N = int(part.N)
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = rng.binomial(sizes, 0.5).astype(np.int64)
    J = np.ascontiguousarray(model.J, dtype=float)
    h = np.ascontiguousarray(model.h, dtype=float)
    out = np.empty((sweeps, part.n))
    done = 0
    while done < sweeps:
        m = min(chunk, sweeps - done)
        u_site = rng.random(m * N)
        u_acc = rng.random(m * N)
        _heat_bath(counts, sizes, bounds, J, h, N, u_site, u_acc, m, out[done : done + m])
        done += m
    return out


def _sample_stats(x: np.ndarray) -> dict:
    mean = x.mean(axis=0)
    d = x - mean
    var = (d**2).mean(axis=0)
    # a frozen chain has zero variance; its kurtosis is reported as NaN
    with np.errstate(invalid="ignore", divide="ignore"):
        kurt = (d**4).mean(axis=0) / var**2
    return dict(
        mean=mean,
        covariance=d.T @ d / len(x),
        third=(x**3).mean(axis=0),
        fourth=(x**4).mean(axis=0),
        kurtosis=kurt,
        cross_fourth=(x**2).T @ (x**2) / len(x),
    )


def glauber_sample(
    model: ValidatedModel,
    partition: SpeciesPartition | None = None,
    sweeps: int = 100_000,
    burn_in: int = 1000,
    seed: int = 0,
    center=None,
    exponents=None,
    batches: int = 50,
) -> MomentReport:
    """Monte Carlo moments of the normalized sums with batch-mean standard errors."""
    if not (isinstance(sweeps, int) and isinstance(burn_in, int)):
        raise TypeError("sweeps and burn_in must be integers")
    if not (sweeps > burn_in >= 0):
        raise ValueError("need sweeps > burn_in >= 0")
    if batches < 2 or sweeps - burn_in < batches:
        raise ValueError("need at least two batches and one sweep per batch")
    model = _check_partition(model, partition)
    part = model.partition
    n = part.n
    if center is None:
        minima = find_global_minima(model)
        if len(minima) != 1:
            raise ValueError("several global minima: pass an explicit center")
        center = minima.points[0].mu
    center = np.asarray(center, dtype=float)
    exponents = np.full(n, 0.5) if exponents is None else np.asarray(exponents, dtype=float)
    S = simulate_sums(model, None, sweeps, seed)[burn_in:]
    sizes = np.array(part.sizes, dtype=float)
    x = (S - sizes * center) / sizes ** (1.0 - exponents)
    est = _sample_stats(x)
    per = len(x) // batches
    blocks = [_sample_stats(x[i * per : (i + 1) * per]) for i in range(batches)]
    stderr = {
        key: np.std([b[key] for b in blocks], axis=0, ddof=1) / math.sqrt(batches)
        for key in est
    }
    return MomentReport(
        mean=est["mean"], covariance=est["covariance"], third=est["third"],
        fourth=est["fourth"], kurtosis=est["kurtosis"], cross_fourth=est["cross_fourth"],
        exponents=exponents, center=center, stderr=stderr,
    )


def write_csv(dist: FiniteDist, fh) -> None:
    """Rows ``c_1..c_n, S_1..S_n, probability`` over the support of ``dist``."""
    part = dist.partition
    n = part.n
    p = dist.probabilities()
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([f"c{l + 1}" for l in range(n)] + [f"S{l + 1}" for l in range(n)] + ["probability"])
    for idx in zip(*np.nonzero(p > 0)):
        c = [int(i) for i in idx]
        S = [2 * c[l] - part.sizes[l] for l in range(n)]
        writer.writerow(c + S + [repr(float(p[idx]))])


__all__ = [
    "BudgetExceeded",
    "FiniteDist",
    "Discrepancy",
    "exact_joint",
    "conditional_joint",
    "normalized_moments",
    "compare_to_law",
    "simulate_sums",
    "glauber_sample",
    "write_csv",
]
