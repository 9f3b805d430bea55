"""Model parameters for the multi-species Curie-Weiss system.

A model is a set of species with sizes ``N_1..N_n``, a symmetric reduced
coupling matrix ``J`` (one constant per pair of species) and a per-species
field ``h``. The inverse temperature is folded into ``J`` and ``h``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import gammaln

SYMMETRY_TOL = Decimal("1e-12")
PD_RTOL = 1e-10


class ModelError(ValueError):
    """Raised when model parameters violate a structural requirement."""


@dataclass(frozen=True)
class SpeciesPartition:
    """Per-species particle counts. Proportions are always derived from sizes."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(self.sizes)
        for s in sizes:
            if isinstance(s, bool) or int(s) != s:
                raise ModelError(f"species sizes must be integers, got {s!r}")
        sizes = tuple(int(s) for s in sizes)
        if not sizes:
            raise ModelError("partition needs at least one species")
        for l, s in enumerate(sizes):
            if s < 1:
                raise ModelError(f"species {l} has size {s}; sizes must be >= 1")
        object.__setattr__(self, "sizes", sizes)

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def N(self) -> int:
        return sum(self.sizes)

    @property
    def fractions(self) -> tuple[Fraction, ...]:
        """Exact proportions ``N_l / N``; they sum to one exactly."""
        N = self.N
        return tuple(Fraction(s, N) for s in self.sizes)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([float(a) for a in self.fractions])

    def labels(self) -> np.ndarray:
        """Species index of every site, in block order."""
        return np.repeat(np.arange(self.n), self.sizes)

    def scaled(self, factor: int) -> SpeciesPartition:
        return SpeciesPartition(tuple(s * factor for s in self.sizes))


@dataclass(frozen=True)
class ModelSpec:
    partition: SpeciesPartition
    J: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        h = np.array(self.h, dtype=float).reshape(-1)
        n = self.partition.n
        if J.shape != (n, n):
            raise ModelError(f"J has shape {J.shape}, expected ({n}, {n})")
        if h.shape != (n,):
            raise ModelError(f"h has length {h.size}, expected {n}")
        if not (np.all(np.isfinite(J)) and np.all(np.isfinite(h))):
            raise ModelError("J and h must be finite")
        J.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "h", h)

    @classmethod
    def from_sizes(cls, sizes, J, h=None) -> ModelSpec:
        part = SpeciesPartition(tuple(sizes))
        if h is None:
            h = np.zeros(part.n)
        return cls(part, J, h)

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.partition.sizes),
            "J": self.J.tolist(),
            "h": self.h.tolist(),
        }


@dataclass(frozen=True)
class ValidatedModel:
    """A model that passed validation, with its convexity verdict.

    ``A = D J D`` with ``D = diag(sqrt(alpha))``. ``A`` is positive definite
    exactly when ``J`` is.
    """

    spec: ModelSpec
    positive_definite: bool
    A: np.ndarray
    smallest_eigenvalue: float
    K: np.ndarray = field(repr=False)

    @property
    def partition(self) -> SpeciesPartition:
        return self.spec.partition

    @property
    def n(self) -> int:
        return self.spec.partition.n

    @property
    def J(self) -> np.ndarray:
        return self.spec.J

    @property
    def h(self) -> np.ndarray:
        return self.spec.h

    @property
    def alphas(self) -> np.ndarray:
        return self.spec.partition.alphas

    @property
    def scale(self) -> float:
        """Magnitude used to make tolerances unit-aware."""
        return max(1.0, float(np.max(np.abs(self.J))), float(np.max(np.abs(self.h))))

    def with_partition(self, partition: SpeciesPartition) -> ValidatedModel:
        return validate_model(ModelSpec(partition, self.J, self.h))


def validate_model(spec: ModelSpec) -> ValidatedModel:
    """Check symmetry and positive diagonal of ``J`` and decide convexity."""
    J = spec.J
    n = spec.partition.n
    for l in range(n):
        if not J[l, l] > 0:
            raise ModelError(f"J[{l},{l}] = {float(J[l, l])!r} must be positive")
        for s in range(l + 1, n):
            if J[l, s] != J[s, l]:
                raise ModelError(
                    f"J is not symmetric: J[{l},{s}] = {float(J[l, s])!r} != J[{s},{l}] = {float(J[s, l])!r}"
                )
    eig = np.linalg.eigvalsh(J)
    lam_min = float(eig[0])
    norm = float(np.max(np.abs(eig)))
    pd = lam_min > PD_RTOL * max(1.0, norm)
    alphas = spec.partition.alphas
    d = np.sqrt(alphas)
    A = d[:, None] * J * d[None, :]
    A = 0.5 * (A + A.T)
    K = J * alphas[None, :]
    for arr in (A, K):
        arr.setflags(write=False)
    return ValidatedModel(spec, pd, A, lam_min, K)


def _symmetrize_decimal(rows: list[list[Decimal]]) -> list[list[float]]:
    n = len(rows)
    out = [[float(v) for v in row] for row in rows]
    for l in range(n):
        for s in range(l + 1, n):
            a, b = rows[l][s], rows[s][l]
            diff = abs(a - b)
            if diff > SYMMETRY_TOL:
                raise ModelError(
                    f"J is not symmetric: J[{l},{s}] = {a} vs J[{s},{l}] = {b}"
                )
            if diff:
                avg = float((a + b) / 2)
                out[l][s] = out[s][l] = avg
    return out


def parse_model(doc: dict) -> ModelSpec:
    """Build a ModelSpec from a decoded model document.

    Numbers may be Decimal (exact parsing) or float. Asymmetry up to 1e-12 is
    averaged away; anything larger is an error.
    """
    try:
        sizes = doc["sizes"]
        J = doc["J"]
        h = doc.get("h")
    except (KeyError, TypeError) as exc:
        raise ModelError(f"model document needs 'sizes' and 'J': {exc}") from None
    if not isinstance(sizes, list) or not isinstance(J, list):
        raise ModelError("'sizes' and 'J' must be arrays")
    n = len(sizes)
    for v in sizes:
        if isinstance(v, bool) or Decimal(str(v)) != int(Decimal(str(v))):
            raise ModelError(f"sizes must be integers, got {v!r}")
    sizes = [int(Decimal(str(v))) for v in sizes]
    if len(J) != n or any(not isinstance(r, list) or len(r) != n for r in J):
        raise ModelError(f"J must be a {n}x{n} array")
    rows = [[Decimal(str(v)) for v in r] for r in J]
    if h is None:
        h = [0] * n
    if not isinstance(h, list) or len(h) != n:
        raise ModelError(f"h must be an array of length {n}")
    hv = [float(Decimal(str(v))) for v in h]
    return ModelSpec(SpeciesPartition(tuple(sizes)), _symmetrize_decimal(rows), hv)


def load_model(path: str | Path) -> ModelSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh, parse_float=Decimal, parse_int=Decimal)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: invalid JSON ({exc})") from None
    return parse_model(doc)


@dataclass(frozen=True)
class SpinConfig:
    """A +/-1 spin vector laid out in species blocks."""

    sigma: np.ndarray
    partition: SpeciesPartition

    def __post_init__(self):
        sigma = np.asarray(self.sigma)
        if sigma.ndim != 1 or sigma.size != self.partition.N:
            raise ModelError(
                f"configuration has {sigma.size} spins, partition expects {self.partition.N}"
            )
        if not np.all(np.abs(sigma) == 1):
            raise ModelError("spins must be exactly +1 or -1")
        object.__setattr__(self, "sigma", sigma.astype(np.int8))

    def magnetizations(self) -> np.ndarray:
        return magnetizations(self.sigma, self.partition)


def magnetizations(sigma, partition: SpeciesPartition) -> np.ndarray:
    """Per-species mean spin for configurations of shape ``(..., N)``."""
    sigma = np.asarray(sigma, dtype=float)
    edges = np.cumsum((0,) + partition.sizes)
    sums = np.stack(
        [sigma[..., edges[l] : edges[l + 1]].sum(axis=-1) for l in range(partition.n)],
        axis=-1,
    )
    return sums / np.array(partition.sizes, dtype=float)


def energy_quadratic(config, model: ValidatedModel) -> np.ndarray | float:
    """Site-level Hamiltonian ``-(1/2N) sum_ij J_ij s_i s_j - sum_i h_i s_i``.

    The double sum runs over all ordered pairs including ``i == j``. Accepts a
    SpinConfig or an array of shape ``(..., N)``.
    """
    part = model.partition
    if isinstance(config, SpinConfig):
        if config.partition.sizes != part.sizes:
            raise ModelError("configuration partition does not match model")
        sigma = config.sigma.astype(float)
    else:
        sigma = np.asarray(config, dtype=float)
    if sigma.shape[-1] != part.N:
        raise ModelError(f"configuration has {sigma.shape[-1]} spins, model expects {part.N}")
    lab = part.labels()
    Jfull = model.J[np.ix_(lab, lab)]
    hfull = model.h[lab]
    quad = np.einsum("...i,ij,...j->...", sigma, Jfull, sigma)
    out = -quad / (2 * part.N) - sigma @ hfull
    return float(out) if np.ndim(out) == 0 else out


def g_per_spin(m, model: ValidatedModel) -> np.ndarray | float:
    """Energy per spin as a function of species magnetizations, sign flipped."""
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) > 1 + 1e-12):
        raise ModelError("magnetizations must lie in [-1, 1]")
    a = model.alphas
    am = a * m
    out = 0.5 * np.einsum("...l,ls,...s->...", am, model.J, am) + am @ model.h
    return float(out) if np.ndim(out) == 0 else out


def log_binomial(n, k):
    """``ln C(n, k)`` via log-gamma; exact enough for n up to ~1e7."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


__all__ = [
    "ModelError",
    "SpeciesPartition",
    "ModelSpec",
    "ValidatedModel",
    "SpinConfig",
    "validate_model",
    "parse_model",
    "load_model",
    "magnetizations",
    "energy_quadratic",
    "g_per_spin",
    "log_binomial",
]
