"""The function G, its derivatives, and its global minima.

With ``u_l(x) = sum_s alpha_s J_ls x_s + h_l`` and ``K = J diag(alpha)``::

    G(x) = 1/2 <aJa x, x> - sum_l alpha_l ln cosh(u_l(x))

where ``a = diag(alpha)``. The stationary points of G are exactly the
solutions of the mean-field equations ``x = tanh(u(x))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .model import ModelError, ValidatedModel

LN2 = math.log(2.0)
MAX_STARTS = 10**7
# residual at which damped iteration hands over to Newton
SWITCH_TOL = 1e-5


class NonConvergence(RuntimeError):
    def __init__(self, message: str, residual: float = math.inf):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class MinimumType(str, Enum):
    TYPE1 = "Type1"
    TYPE2 = "Type2"
    SEPARABLE = "NonHomogeneousSeparable"
    UNCLASSIFIED = "Unclassified"


def lncosh(t):
    """Overflow-safe ``ln cosh t``."""
    a = np.abs(t)
    return a - LN2 + np.log1p(np.exp(-2.0 * a))


def _args(x, model: ValidatedModel) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x @ model.K.T + model.h


def _quadratic(x, model: ValidatedModel):
    ax = np.asarray(x, dtype=float) * model.alphas
    return 0.5 * np.einsum("...l,ls,...s->...", ax, model.J, ax)


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def eval_phi(x, model: ValidatedModel):
    """``sum_l alpha_l ln cosh(u_l(x))``, a convex function of x."""
    return _scalar(lncosh(_args(x, model)) @ model.alphas)


def eval_G(x, model: ValidatedModel):
    """G at x; x may be a single point or an array of shape ``(..., n)``."""
    return _scalar(_quadratic(x, model) - lncosh(_args(x, model)) @ model.alphas)


def eval_pressure_functional(x, model: ValidatedModel):
    return _scalar(LN2 - _quadratic(x, model) + lncosh(_args(x, model)) @ model.alphas)


def grad_G(x, model: ValidatedModel) -> np.ndarray:
    """``aJa (x - tanh(u(x)))``; zero exactly at mean-field solutions."""
    x = np.asarray(x, dtype=float)
    t = np.tanh(_args(x, model))
    a = model.alphas
    return ((x - t) * a) @ model.J * a


def hess_G(x, model: ValidatedModel) -> np.ndarray:
    """``aJa - K^T diag(alpha (1 - tanh^2 u)) K``."""
    x = np.asarray(x, dtype=float)
    t = np.tanh(_args(x, model))
    a = model.alphas
    K = model.K
    w = a * (1.0 - t * t)
    return a[:, None] * model.J * a[None, :] - np.einsum("l,li,lj->ij", w, K, K)


def third_G(x, model: ValidatedModel) -> np.ndarray:
    """Tensor of third partials; ``(ln cosh)''' = -2 t (1 - t^2)``."""
    t = np.tanh(_args(x, model))
    w = model.alphas * 2.0 * t * (1.0 - t * t)
    K = model.K
    return np.einsum("l,li,lj,lk->ijk", w, K, K, K)


def fourth_G(x, model: ValidatedModel) -> np.ndarray:
    """Tensor of fourth partials; ``(ln cosh)'''' = -2 (1 - t^2)(1 - 3 t^2)``."""
    t = np.tanh(_args(x, model))
    t2 = t * t
    w = model.alphas * 2.0 * (1.0 - t2) * (1.0 - 3.0 * t2)
    K = model.K
    return np.einsum("l,li,lj,lk,lm->ijkm", w, K, K, K, K)


@dataclass(frozen=True)
class Taylor4:
    """Third and fourth derivative tensors of G at a point."""

    third: np.ndarray
    fourth: np.ndarray

    @property
    def quartic(self) -> np.ndarray:
        """Coefficients ``c`` of the quartic term ``sum c_ijkl y_i y_j y_k y_l``."""
        return self.fourth / 24.0

    def quartic_form(self, y) -> np.ndarray | float:
        return quartic_form(self.quartic, y)


def quartic_form(coeffs: np.ndarray, y) -> np.ndarray | float:
    y = np.asarray(y, dtype=float)
    return _scalar(np.einsum("ijkl,...i,...j,...k,...l->...", coeffs, y, y, y, y))


def taylor4_G(mu, model: ValidatedModel) -> Taylor4:
    return Taylor4(third_G(mu, model), fourth_G(mu, model))


def mean_field_residual(x, model: ValidatedModel) -> np.ndarray:
    """``max_l |x_l - tanh(u_l(x))|`` for points of shape ``(..., n)``."""
    x = np.asarray(x, dtype=float)
    return np.max(np.abs(x - np.tanh(_args(x, model))), axis=-1)


def _damped_batch(X, model, tol, max_iter, damping=0.5):
    """Damped fixed-point iteration run on many starts at once."""
    X = np.array(X, dtype=float)
    K, h = model.K, model.h
    res = mean_field_residual(X, model)
    active = res > tol
    it = 0
    while it < max_iter and active.any():
        idx = np.nonzero(active)[0]
        Xa = X[idx]
        T = np.tanh(Xa @ K.T + h)
        Xa = (1.0 - damping) * Xa + damping * T
        X[idx] = Xa
        r = np.max(np.abs(Xa - np.tanh(Xa @ K.T + h)), axis=-1)
        res[idx] = r
        active[idx] = r > tol
        it += 1
    return X, res


def _newton(x, model, max_iter):
    """Newton on grad G. Singular Hessians fall back to least squares.

    Runs until the step stagnates rather than stopping at a residual, so that
    degenerate minima (linear convergence) are still located to high accuracy.
    """
    x = np.array(x, dtype=float)
    for _ in range(max_iter):
        g = grad_G(x, model)
        if not np.any(g):
            break
        H = hess_G(x, model)
        step = np.linalg.lstsq(H, g, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            break
        x = x - step
        if np.max(np.abs(step)) <= 1e-16 * (1.0 + np.max(np.abs(x))):
            break
    return x


def solve_mean_field(
    x0,
    model: ValidatedModel,
    tol: float = 1e-12,
    max_damped: int = 100_000,
    max_newton: int = 50,
    damping: float = 0.5,
) -> np.ndarray:
    """Solve ``mu = tanh(K mu + h)`` from the start ``x0``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    x0 = np.asarray(x0, dtype=float).reshape(1, model.n)
    X, _ = _damped_batch(x0, model, max(tol, SWITCH_TOL), max_damped, damping)
    x = _newton(X[0], model, max_newton)
    res = float(mean_field_residual(x, model))
    if not (np.isfinite(res) and res <= tol and np.all(np.abs(x) < 1.0)):
        # Newton may have wandered; fall back to the damped iterate.
        X, _ = _damped_batch(x0, model, tol, max_damped, damping)
        x = X[0]
        res = float(mean_field_residual(x, model))
        if not (res <= tol and np.all(np.abs(x) <= 1.0)):
            raise NonConvergence("mean-field iteration did not converge", res)
    return x


def _sphere_directions(d: int, count: int = 1024) -> np.ndarray:
    """Quasi-uniform unit vectors plus the signed coordinate axes."""
    axes = np.vstack([np.eye(d), -np.eye(d)])
    if d == 1:
        return axes
    u = qmc.Sobol(d, scramble=True, seed=0).random(count)
    z = _normal.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return np.vstack([axes, z])


def _quartic_positive(coeffs: np.ndarray, tol: float) -> bool:
    d = coeffs.shape[0]
    vals = quartic_form(coeffs, _sphere_directions(d))
    return bool(np.min(vals) > tol)


@dataclass
class CriticalPoint:
    mu: np.ndarray
    value: float
    grad_norm: float
    hessian: np.ndarray
    k: MinimumType
    quartic: np.ndarray | None = None
    third_order_norm: float = 0.0
    null_coords: tuple[int, ...] = ()
    hessian_eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def homogeneous_type(self) -> int | None:
        return {MinimumType.TYPE1: 1, MinimumType.TYPE2: 2}.get(self.k)


def _decoupled(J: np.ndarray, block: list[int], rest: list[int]) -> bool:
    return not np.any(J[np.ix_(block, rest)])


def classify_minimum(mu, model: ValidatedModel) -> CriticalPoint:
    """Find the homogeneous type of a stationary point of G.

    Hessian eigenvalues at or below ``1e-8 max(1, ||H||)`` count as zero.
    """
    mu = np.asarray(mu, dtype=float)
    H = hess_G(mu, model)
    H = 0.5 * (H + H.T)
    lam, V = np.linalg.eigh(H)
    tau = 1e-8 * max(1.0, float(np.max(np.abs(lam))))
    g = grad_G(mu, model)
    base = dict(
        mu=mu,
        value=float(eval_G(mu, model)),
        grad_norm=float(np.linalg.norm(g)),
        hessian=H,
        hessian_eigenvalues=lam,
    )
    null = lam <= tau
    if not null.any():
        return CriticalPoint(k=MinimumType.TYPE1, **base)

    tay = taylor4_G(mu, model)
    quartic = tay.quartic
    tau4 = 1e-8 * max(1.0, float(np.max(np.abs(tay.fourth))))
    n = model.n
    if null.all():
        third_norm = float(np.max(np.abs(tay.third)))
        ok = third_norm <= tau4 and _quartic_positive(quartic, tau4 / 24.0)
        k = MinimumType.TYPE2 if ok else MinimumType.UNCLASSIFIED
        return CriticalPoint(
            k=k, quartic=quartic, third_order_norm=third_norm,
            null_coords=tuple(range(n)), **base,
        )

    weight = np.sum(V[:, null] ** 2, axis=1)
    block = [i for i in range(n) if weight[i] > 0.5]
    rest = [i for i in range(n) if i not in block]
    touching = np.zeros((n, n, n), dtype=bool)
    touching[block, :, :] = touching[:, block, :] = touching[:, :, block] = True
    third_norm = float(np.max(np.abs(tay.third[touching]))) if block else 0.0
    k = MinimumType.UNCLASSIFIED
    if block and rest and _decoupled(model.J, block, rest):
        sub_null = np.linalg.eigvalsh(H[np.ix_(block, block)])
        sub_rest = np.linalg.eigvalsh(H[np.ix_(rest, rest)])
        qb = quartic[np.ix_(block, block, block, block)]
        if (
            np.all(np.abs(sub_null) <= tau)
            and np.all(sub_rest > tau)
            and third_norm <= tau4
            and _quartic_positive(qb, tau4 / 24.0)
        ):
            k = MinimumType.SEPARABLE
    return CriticalPoint(
        k=k, quartic=quartic, third_order_norm=third_norm,
        null_coords=tuple(block), **base,
    )


@dataclass
class MinimaSet:
    points: list[CriticalPoint]
    f_min: float
    delta_bar: float

    def __len__(self):
        return len(self.points)

    def nearest(self, x) -> CriticalPoint:
        x = np.asarray(x, dtype=float)
        return min(self.points, key=lambda p: float(np.linalg.norm(p.mu - x)))


def _lex_sorted(X: np.ndarray) -> np.ndarray:
    return X[np.lexsort(X.T[::-1])] if len(X) else X


def _dedup(X: np.ndarray, tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for x in _lex_sorted(X):
        if all(np.linalg.norm(x - y) > tol for y in kept):
            kept.append(x)
    return np.array(kept).reshape(-1, X.shape[1])


def find_global_minima(
    model: ValidatedModel,
    grid_points_per_axis: int = 21,
    tol: float = 1e-12,
    max_damped: int = 100_000,
    max_newton: int = 50,
) -> MinimaSet:
    """Multi-start search for every global minimum of G on ``[-1, 1]^n``."""
    if not model.positive_definite:
        raise ModelError("reduced interaction matrix not positive definite")
    if grid_points_per_axis < 5:
        raise ValueError("grid_points_per_axis must be at least 5")
    n = model.n
    if grid_points_per_axis**n > MAX_STARTS:
        raise ValueError(
            f"{grid_points_per_axis}^{n} starts exceeds the limit of {MAX_STARTS}"
        )
    axis = np.linspace(-1.0, 1.0, grid_points_per_axis)
    starts = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    X, _ = _damped_batch(starts, model, SWITCH_TOL, max_damped)
    reps = _dedup(X[np.all(np.isfinite(X), axis=1)], 1e-4)

    found, worst = [], math.inf
    for x in reps:
        mu = _newton(x, model, max_newton)
        res = float(mean_field_residual(mu, model))
        if res <= tol and np.all(np.abs(mu) < 1.0):
            found.append(mu)
        else:
            worst = min(worst, res)
    if not found:
        raise NonConvergence("no start converged to a mean-field solution", worst)

    found = np.array(found)
    values = np.asarray(eval_G(found, model), dtype=float).reshape(-1)
    f_min = float(values.min())
    keep = []
    for mu, v in zip(found, values):
        if v - f_min > 1e-9 * model.scale:
            continue
        lam = np.linalg.eigvalsh(hess_G(mu, model))
        if lam[0] >= -1e-8 * max(1.0, float(np.max(np.abs(lam)))):
            keep.append(mu)
    mus = _dedup(np.array(keep), 1e-6)
    points = [classify_minimum(mu, model) for mu in mus]
    if len(mus) > 1:
        diff = mus[:, None, :] - mus[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        delta_bar = float(dist[np.triu_indices(len(mus), 1)].min())
    else:
        delta_bar = math.inf
    return MinimaSet(points, f_min, delta_bar)


__all__ = [
    "NonConvergence",
    "MinimumType",
    "CriticalPoint",
    "MinimaSet",
    "Taylor4",
    "lncosh",
    "eval_G",
    "eval_pressure_functional",
    "eval_phi",
    "grad_G",
    "hess_G",
    "third_G",
    "fourth_G",
    "taylor4_G",
    "quartic_form",
    "mean_field_residual",
    "solve_mean_field",
    "classify_minimum",
    "find_global_minima",
]
