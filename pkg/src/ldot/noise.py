"""Noise laws ``U^k`` for the particle endpoints ``z + U^k`` and their samplers.

Every sampler reads uniforms from a :class:`~ldot.rng.CounterStream` and
transforms them by inversion, one word per base draw, so the numbers used
by particle ``i`` depend only on ``(seed, tag, replicate, i)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln, ndtri
from scipy.stats import poisson

from .costs import CostSpec, CramerClosed, CramerFamily, PowerP, Quadratic, Contracted
from .rng import CounterStream


@dataclass(frozen=True)
class ScaledGaussian:
    """``U^k = Y / sqrt(k)`` with ``Y`` standard normal in ``R^dim``."""

    dim: int = 1


@dataclass(frozen=True)
class IIDSum:
    """``U^k = (Y_1 + ... + Y_k) / k`` for i.i.d. real ``Y`` from a Cramer family."""

    family: CramerFamily


@dataclass(frozen=True)
class PowerGaussian:
    """``U^k = (2k)**(-1/p) |Y|**(2/p - 1) Y`` with ``Y`` standard normal in ``R^dim``."""

    p: float
    dim: int = 1

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError("PowerGaussian needs p > 0")


@dataclass(frozen=True)
class GibbsOf:
    """Kernel-only law with row weights ``exp(-k c)``; cannot be sampled."""

    cost: CostSpec


NoiseSpec = Union[ScaledGaussian, IIDSum, PowerGaussian, GibbsOf]

# Poisson(1) inverse-CDF table; the tail beyond 40 has mass below 1e-48
_POISSON_CDF = poisson.cdf(np.arange(41), 1.0)


def noise_dim(spec: NoiseSpec) -> int:
    if isinstance(spec, (ScaledGaussian, PowerGaussian)):
        return spec.dim
    if isinstance(spec, IIDSum):
        return 1
    raise ValueError(f"{type(spec).__name__} has no sampling law")


def noise_for_cost(cost: CostSpec, dim: int = 1) -> NoiseSpec:
    """Noise whose k-LDP rate is ``cost`` (used to pick a density kernel)."""
    if isinstance(cost, Quadratic):
        return ScaledGaussian(dim)
    if isinstance(cost, PowerP):
        return PowerGaussian(cost.p, dim)
    if isinstance(cost, Contracted) and cost.p is not None and isinstance(cost.base, Quadratic):
        return PowerGaussian(cost.p, dim)
    if isinstance(cost, CramerClosed) and dim == 1:
        return IIDSum(cost.family)
    return GibbsOf(cost)


def draws_per_particle(spec: NoiseSpec, k: int) -> int:
    if isinstance(spec, (ScaledGaussian, PowerGaussian)):
        return spec.dim
    if isinstance(spec, IIDSum):
        return int(k)
    raise ValueError(f"{type(spec).__name__} is a kernel-only law and cannot be sampled")


def _base_draws(tag: str, u: np.ndarray) -> np.ndarray:
    if tag == "StandardGaussian":
        return ndtri(u)
    if tag == "BernoulliPM1":
        return np.where(u < 0.5, -1.0, 1.0)
    if tag == "ExponentialMean1":
        return -np.log(u)
    if tag == "PoissonMean1":
        return np.searchsorted(_POISSON_CDF, u, side="right").astype(float)
    raise ValueError(f"unknown family {tag!r}")


def transform(spec: NoiseSpec, k: int, u: np.ndarray) -> np.ndarray:
    """Map uniforms of shape ``(..., w)`` to noise values ``(..., dim)``."""
    if isinstance(spec, ScaledGaussian):
        return ndtri(u) / np.sqrt(k)
    if isinstance(spec, PowerGaussian):
        y = ndtri(u)
        r = np.linalg.norm(y, axis=-1, keepdims=True)
        return (2.0 * k) ** (-1.0 / spec.p) * r ** (2.0 / spec.p - 1.0) * y
    if isinstance(spec, IIDSum):
        fam = spec.family
        mean = _base_draws(fam.tag, u).mean(axis=-1, keepdims=True)
        return fam.a * mean + fam.b
    raise ValueError(f"{type(spec).__name__} is a kernel-only law and cannot be sampled")


def sample_block(spec: NoiseSpec, k: int, count: int, seed: int, replicates,
                 tag: int = 0) -> np.ndarray:
    """Noise for ``count`` particles in each listed replicate: ``(R, count, dim)``."""
    w = draws_per_particle(spec, k)
    stream = CounterStream(seed, tag)
    u = stream.uniforms(replicates, count * w)
    return transform(spec, k, u.reshape(u.shape[0], count, w))


def sample_noise(spec: NoiseSpec, k: int, count: int, seed: int, tag: int = 0,
                 replicate: int = 0) -> np.ndarray:
    """``count`` independent copies of ``U^k`` as a ``(count, dim)`` array."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if count < 0:
        raise ValueError("count must be nonnegative")
    return sample_block(spec, k, count, seed, [replicate], tag)[0]


def log_density(spec: NoiseSpec, k: int, u: np.ndarray) -> np.ndarray:
    """Unnormalized log density (or log mass for lattice laws) of ``U^k`` at ``u``.

    ``u`` has shape ``(..., d)``.  Lattice laws return ``-inf`` off their
    lattice.  Constants that do not depend on ``u`` are dropped.
    """
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if isinstance(spec, ScaledGaussian):
            return -0.5 * k * np.sum(u * u, axis=-1)
        if isinstance(spec, PowerGaussian):
            r = np.linalg.norm(u, axis=-1)
            expo = u.shape[-1] * (spec.p / 2.0 - 1.0)
            if expo < 0 and np.any(r == 0):
                raise ValueError("PowerGaussian density with p < 2 is singular at zero "
                                 "displacement; use Gibbs or Monte Carlo mode")
            out = -k * r ** spec.p
            if expo != 0:
                out = out + expo * np.log(r)
            return out
        if isinstance(spec, IIDSum):
            if u.shape[-1] != 1:
                raise ValueError("IIDSum noise is one-dimensional")
            fam = spec.family
            v = (u[..., 0] - fam.b) / fam.a
            if fam.tag == "StandardGaussian":
                return -0.5 * k * v * v
            if fam.tag == "ExponentialMean1":
                return np.where(v > 0, (k - 1) * np.log(v) - k * v, -np.inf)
            if fam.tag == "PoissonMean1":
                s = np.rint(v * k)
                on = (np.abs(v * k - s) <= 1e-9) & (s >= 0)
                return np.where(on, s * np.log(k) - gammaln(s + 1), -np.inf)
            if fam.tag == "BernoulliPM1":
                s2 = v * k + k
                s = np.rint(s2 / 2.0)
                on = (np.abs(s2 - 2 * s) <= 1e-9) & (s >= 0) & (s <= k)
                return np.where(on, gammaln(k + 1) - gammaln(s + 1) - gammaln(k - s + 1), -np.inf)
    raise ValueError(f"no closed-form density for {spec!r}")


def is_lattice(spec: NoiseSpec) -> bool:
    return isinstance(spec, IIDSum) and spec.family.tag in ("PoissonMean1", "BernoulliPM1")


def lattice_support(spec: IIDSum, k: int) -> np.ndarray:
    """Atoms of ``U^k`` for a lattice family (Poisson atoms truncated at mass < 1e-300)."""
    fam = spec.family
    if fam.tag == "BernoulliPM1":
        s = np.arange(k + 1)
        return fam.a * (2 * s - k) / k + fam.b
    if fam.tag == "PoissonMean1":
        top = int(poisson.isf(1e-300, k)) + 1 if k < 1e6 else int(k + 40 * np.sqrt(k))
        return fam.a * np.arange(top + 1) / k + fam.b
    raise ValueError("not a lattice family")
