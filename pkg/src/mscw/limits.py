"""Limit laws of the normalized sum vector at a classified minimum.

At a nondegenerate minimum the sums ``(S_l - N_l mu_l) / sqrt(N_l)`` become
Gaussian with covariance ``chi``. At a fully degenerate minimum of type 2 the
sums ``(S_l - N_l mu_l) / N_l^(3/4)`` have density proportional to
``exp(-G4(x / alpha^(1/4)))`` where ``G4`` is the quartic Taylor term of G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .landscape import CriticalPoint, MinimumType, _sphere_directions, hess_G, quartic_form
from .model import ValidatedModel

TAIL_EPS = 1e-14


class DegeneracyError(ValueError):
    """The point is critical; a Gaussian covariance does not exist there."""


def _jacobian_dmu_dh(mu, model: ValidatedModel, coords=None) -> np.ndarray:
    """``d mu / d h`` from implicit differentiation of the mean-field equations."""
    mu = np.asarray(mu, dtype=float)
    idx = list(range(model.n)) if coords is None else list(coords)
    D = np.diag(1.0 - mu[idx] ** 2)
    M = model.K[np.ix_(idx, idx)]
    L = np.eye(len(idx)) - D @ M
    if np.linalg.cond(L) > 1e12:
        raise DegeneracyError("I - D M is singular: the point is not a type-1 minimum")
    return np.linalg.solve(L, D)


def susceptibility_chi(mu, model: ValidatedModel, coords=None, sign_rtol: float = 1e-8):
    """Covariance of the sqrt(N)-normalized sums from the response ``d mu / d h``.

    Off-diagonal entries are ``sign * sqrt(|d mu_l/d h_m * d mu_m/d h_l|)``;
    the two cross responses must agree in sign.
    """
    R = _jacobian_dmu_dh(mu, model, coords)
    d = R.shape[0]
    chi = np.empty_like(R)
    scale = float(np.max(np.abs(R)))
    for l in range(d):
        chi[l, l] = R[l, l]
        for m in range(l + 1, d):
            a, b = R[l, m], R[m, l]
            if a * b < 0 and min(abs(a), abs(b)) > sign_rtol * scale:
                raise DegeneracyError(
                    f"cross responses d mu_{l}/d h_{m}={a:.3e} and d mu_{m}/d h_{l}={b:.3e} differ in sign"
                )
            chi[l, m] = chi[m, l] = math.copysign(math.sqrt(abs(a * b)), a + b)
    return chi


def chi_via_hessian(mu, model: ValidatedModel) -> np.ndarray:
    """``Ht^-1 - A^-1`` with ``Ht = D^-1 H_G D^-1``, ``D = diag(sqrt(alpha))``."""
    d = np.sqrt(model.alphas)
    Ht = hess_G(mu, model) / np.outer(d, d)
    Ht = 0.5 * (Ht + Ht.T)
    if np.linalg.cond(Ht) > 1e12:
        raise DegeneracyError("rescaled Hessian is singular: the point is not a type-1 minimum")
    chi = np.linalg.inv(Ht) - np.linalg.inv(model.A)
    return 0.5 * (chi + chi.T)


@dataclass
class LimitLaw:
    """Limit law of the normalized sums over the coordinates ``coords``.

    ``quartic`` holds coefficients ``c`` with density proportional to
    ``exp(-sum c_ijkl x_i x_j x_k x_l)`` in the normalized coordinates.
    ``exponents`` are the per-coordinate gamma with sums scaled by
    ``N_l^(1 - gamma_l)``.
    """

    kind: str
    coords: tuple[int, ...]
    exponents: np.ndarray
    chi: np.ndarray | None = None
    quartic: np.ndarray | None = None
    factors: list[LimitLaw] = field(default_factory=list)
    alphas: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.coords)


def _gaussian(chi, coords) -> LimitLaw:
    return LimitLaw("gaussian", tuple(coords), np.full(len(coords), 0.5), chi=chi)


def _quartic(G4: np.ndarray, alphas: np.ndarray, coords) -> LimitLaw:
    s = alphas ** -0.25
    c = np.einsum("ijkl,i,j,k,l->ijkl", G4, s, s, s, s)
    return LimitLaw(
        "quartic", tuple(coords), np.full(len(coords), 0.25), quartic=c, alphas=alphas
    )


def build_limit_law(pt: CriticalPoint, model: ValidatedModel) -> LimitLaw:
    n = model.n
    a = model.alphas
    if pt.k == MinimumType.TYPE1:
        return _gaussian(susceptibility_chi(pt.mu, model), range(n))
    if pt.k == MinimumType.TYPE2:
        return _quartic(pt.quartic, a, range(n))
    if pt.k == MinimumType.SEPARABLE:
        block = list(pt.null_coords)
        rest = [i for i in range(n) if i not in block]
        gauss = _gaussian(susceptibility_chi(pt.mu, model, coords=rest), rest)
        quart = _quartic(pt.quartic[np.ix_(block, block, block, block)], a[block], block)
        exps = np.empty(n)
        exps[rest] = 0.5
        exps[block] = 0.25
        return LimitLaw("product", tuple(range(n)), exps, factors=[quart, gauss])
    raise ValueError(f"no limit law for a minimum of kind {pt.k.value}")


@dataclass
class MomentReport:
    """Moments of a normalized sum vector ``x``.

    ``fourth`` is ``E[x_l^4]``; ``kurtosis`` is the standardized fourth
    central moment; ``cross_fourth[l, m] = E[x_l^2 x_m^2]``.
    """

    mean: np.ndarray
    covariance: np.ndarray
    third: np.ndarray
    fourth: np.ndarray
    kurtosis: np.ndarray
    cross_fourth: np.ndarray
    exponents: np.ndarray
    center: np.ndarray | None = None
    log_norm: float | None = None
    stderr: dict | None = None


def _tail_bound(cmin: float) -> float:
    return (math.log(1.0 / TAIL_EPS) / cmin) ** 0.25 * 1.05


def _quad_1d(c: float):
    """Normalizer and raw moments 0..4 of density prop. to ``exp(-c x^4)``."""
    L = _tail_bound(c)
    out = []
    for p in range(5):
        # halves separately: odd moments have no relative scale over [-L, L]
        val = 0.0
        for lo, hi in ((-L, 0.0), (0.0, L)):
            part, err = integrate.quad(
                lambda x, p=p: x**p * math.exp(-c * x**4), lo, hi,
                epsabs=0.0, epsrel=1e-12, limit=200,
            )
            if not np.isfinite(part) or err > 1e-9 * abs(part):
                raise RuntimeError(f"quadrature failed for moment {p} (error estimate {err:.2e})")
            val += part
        out.append(val)
    Z = out[0]
    return math.log(Z), np.array(out) / Z


def _is_diagonal(c: np.ndarray) -> bool:
    d = c.shape[0]
    diag = np.zeros_like(c)
    for i in range(d):
        diag[i, i, i, i] = c[i, i, i, i]
    return np.allclose(c, diag, rtol=0.0, atol=1e-14 * float(np.max(np.abs(c))))


def _quartic_moments_tensor(c: np.ndarray, max_order: int = 512):
    """Moments of a non-separable quartic density on a tensor Gauss-Legendre grid."""
    d = c.shape[0]
    if d > 3:
        raise ValueError("tensor quadrature supports at most 3 coupled coordinates")
    cmin = float(np.min(quartic_form(c, _sphere_directions(d))))
    L = _tail_bound(cmin)
    prev = None
    order = 64
    while order <= max_order:
        nodes, weights = np.polynomial.legendre.leggauss(order)
        nodes, weights = nodes * L, weights * L
        grids = np.meshgrid(*([nodes] * d), indexing="ij")
        X = np.stack(grids, axis=-1).reshape(-1, d)
        W = np.prod(np.meshgrid(*([weights] * d), indexing="ij"), axis=0).reshape(-1)
        f = W * np.exp(-quartic_form(c, X))
        Z = f.sum()
        p = f / Z
        mom = (
            p @ X,
            np.einsum("k,ki,kj->ij", p, X, X),
            p @ X**3,
            p @ X**4,
            np.einsum("k,ki,kj->ij", p, X**2, X**2),
        )
        if prev is not None and all(
            np.allclose(a, b, rtol=1e-10, atol=1e-12) for a, b in zip(mom, prev[1])
        ):
            return math.log(Z), mom
        prev = (Z, mom)
        order *= 2
    raise RuntimeError("tensor quadrature did not converge")


def _moments_of_factor(law: LimitLaw):
    d = law.dim
    if law.kind == "gaussian":
        chi = law.chi
        var = np.diag(chi)
        return dict(
            mean=np.zeros(d),
            cov=chi.copy(),
            third=np.zeros(d),
            fourth=3.0 * var**2,
            cross=np.outer(var, var) + 2.0 * chi**2,
            log_norm=0.5 * (d * math.log(2 * math.pi) + np.linalg.slogdet(chi)[1]),
        )
    c = law.quartic
    if _is_diagonal(c):
        m = np.zeros((d, 5))
        log_norm = 0.0
        for i in range(d):
            lz, m[i] = _quad_1d(float(c[i, i, i, i]))
            log_norm += lz
        cov = np.diag(m[:, 2] - m[:, 1] ** 2)
        cross = np.outer(m[:, 2], m[:, 2])
        np.fill_diagonal(cross, m[:, 4])
        return dict(mean=m[:, 1], cov=cov, third=m[:, 3], fourth=m[:, 4], cross=cross, log_norm=log_norm)
    log_norm, (m1, m2, m3, m4, cross) = _quartic_moments_tensor(c)
    return dict(mean=m1, cov=m2 - np.outer(m1, m1), third=m3, fourth=m4, cross=cross, log_norm=log_norm)


def law_moments(law: LimitLaw) -> MomentReport:
    """Exact (Gaussian) or quadrature (quartic, product) moments of a law."""
    factors = law.factors if law.kind == "product" else [law]
    n = max(max(f.coords) for f in factors) + 1
    mean = np.zeros(n)
    cov = np.zeros((n, n))
    third = np.zeros(n)
    fourth = np.zeros(n)
    cross = np.zeros((n, n))
    second = np.zeros(n)
    log_norm = 0.0
    for f in factors:
        mf = _moments_of_factor(f)
        idx = list(f.coords)
        mean[idx] = mf["mean"]
        cov[np.ix_(idx, idx)] = mf["cov"]
        third[idx] = mf["third"]
        fourth[idx] = mf["fourth"]
        cross[np.ix_(idx, idx)] = mf["cross"]
        second[idx] = np.diag(mf["cov"]) + mf["mean"] ** 2
        log_norm += mf["log_norm"]
    for f in factors:
        for g in factors:
            if f is not g:
                cross[np.ix_(list(f.coords), list(g.coords))] = np.outer(
                    second[list(f.coords)], second[list(g.coords)]
                )
    var = np.diag(cov)
    central4 = fourth - 4 * third * mean + 6 * second * mean**2 - 3 * mean**4
    return MomentReport(
        mean=mean,
        covariance=cov,
        third=third,
        fourth=fourth,
        kurtosis=central4 / var**2,
        cross_fourth=cross,
        exponents=np.asarray(law.exponents, dtype=float),
        log_norm=log_norm,
    )


def law_log_density(law: LimitLaw, x) -> np.ndarray:
    """Normalized log density of the law at points ``x`` of shape ``(..., n)``."""
    x = np.asarray(x, dtype=float)
    factors = law.factors if law.kind == "product" else [law]
    out = 0.0
    for f in factors:
        xf = x[..., list(f.coords)]
        lz = _moments_of_factor(f)["log_norm"]
        if f.kind == "gaussian":
            prec = np.linalg.inv(f.chi)
            out = out - 0.5 * np.einsum("...i,ij,...j->...", xf, prec, xf) - lz
        else:
            out = out - quartic_form(f.quartic, xf) - lz
    return out


__all__ = [
    "DegeneracyError",
    "LimitLaw",
    "MomentReport",
    "susceptibility_chi",
    "chi_via_hessian",
    "build_limit_law",
    "law_moments",
    "law_log_density",
]
