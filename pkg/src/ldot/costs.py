"""Displacement costs ``c(x0, x1) = c(x1 - x0)`` and cost matrices.

Costs take values in ``[0, +inf]``; ``+inf`` is ``numpy.inf`` and is written
as the string ``"inf"`` in text formats.  When a cost is integrated against a
plan, cells of zero mass contribute zero even where the cost is infinite.

All ``eval`` functions are vectorized over displacements: ``u`` has shape
``(..., d)`` and the result has shape ``(...)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.special import xlogy

from .legendre import GridFunction1D, cramer_numeric
from .measures import as_points

INF = np.inf

FAMILIES = ("StandardGaussian", "BernoulliPM1", "ExponentialMean1", "PoissonMean1")
FAMILY_MEANS = {"StandardGaussian": 0.0, "BernoulliPM1": 0.0,
                "ExponentialMean1": 1.0, "PoissonMean1": 1.0}
_ALIASES = {"gaussian": "StandardGaussian", "normal": "StandardGaussian",
            "bernoulli": "BernoulliPM1", "exponential": "ExponentialMean1",
            "poisson": "PoissonMean1"}


def family_name(name: str) -> str:
    if name in FAMILIES:
        return name
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown Cramer family {name!r}; choose from {FAMILIES}") from None


@dataclass(frozen=True)
class CramerFamily:
    """Law of a real variable ``a*Y + b`` with ``Y`` from a named family."""

    tag: str
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tag", family_name(self.tag))
        if self.a == 0 or not np.isfinite(self.a) or not np.isfinite(self.b):
            raise ValueError("affine parameters need a != 0 and finite a, b")

    @property
    def mean(self) -> float:
        return self.a * FAMILY_MEANS[self.tag] + self.b

    def log_mgf(self, zeta) -> np.ndarray:
        """``log E exp(zeta (aY + b))``; ``+inf`` where the MGF diverges."""
        z = np.asarray(zeta, dtype=float) * self.a
        with np.errstate(all="ignore"):
            if self.tag == "StandardGaussian":
                base = 0.5 * z * z
            elif self.tag == "BernoulliPM1":
                base = np.logaddexp(z, -z) - np.log(2.0)
            elif self.tag == "ExponentialMean1":
                base = np.where(z < 1, -np.log1p(-np.minimum(z, 1 - 1e-300)), INF)
            else:
                base = np.expm1(z)
        return base + np.asarray(zeta, dtype=float) * self.b


def cramer_closed(family: CramerFamily, u) -> np.ndarray | float:
    """Closed-form Cramer transform of the family, elementwise in ``u``."""
    scalar = np.ndim(u) == 0
    v = (np.asarray(u, dtype=float) - family.b) / family.a
    out = _cramer_base(family.tag, v)
    return float(out) if scalar else out


def _cramer_base(tag: str, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.full(v.shape, INF)
    if tag == "StandardGaussian":
        return 0.5 * v * v
    if tag == "BernoulliPM1":
        inside = np.abs(v) < 1
        w = np.where(inside, v, 0.0)
        out[inside] = (0.5 * ((1 + w) * np.log1p(w) + (1 - w) * np.log1p(-w)))[inside]
        out[np.abs(v) == 1] = np.log(2.0)
        return out
    if tag == "ExponentialMean1":
        pos = v > 0
        w = np.where(pos, v, 1.0)
        # u - 1 - log u, with log1p near u = 1
        with np.errstate(divide="ignore"):
            out[pos] = ((w - 1) - np.where(w < 0.5, np.log(w), np.log1p(w - 1)))[pos]
        return out
    if tag == "PoissonMean1":
        nonneg = v >= 0
        w = np.where(nonneg, v, 0.0)
        out[nonneg] = (xlogy(w, w) - w + 1)[nonneg]
        return out
    raise ValueError(f"unknown family {tag!r}")


# --------------------------------------------------------------------------
# the power map and its inverse


def power_map(p: float, v) -> np.ndarray:
    """``2**(-1/p) |v|**(2/p - 1) v``, applied row-wise; the origin is fixed."""
    if p <= 0:
        raise ValueError("p must be positive")
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(r > 0, 2.0 ** (-1.0 / p) * r ** (2.0 / p - 1.0), 0.0)
    return scale * v


def power_map_inverse(p: float, u) -> np.ndarray:
    """Inverse of :func:`power_map`: same direction, ``|v| = sqrt(2) |u|**(p/2)``."""
    if p <= 0:
        raise ValueError("p must be positive")
    u = np.asarray(u, dtype=float)
    r = np.linalg.norm(u, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(r > 0, np.sqrt(2.0) * r ** (p / 2.0 - 1.0), 0.0)
    return scale * u


# --------------------------------------------------------------------------
# cost specifications


@dataclass(frozen=True)
class Quadratic:
    """``|u|^2 / 2``."""


@dataclass(frozen=True)
class PowerP:
    """``|u|^p``, ``p > 0``.  Not convex for ``p < 1``."""

    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError("PowerP needs p > 0")


@dataclass(frozen=True)
class CramerClosed:
    """Closed-form Cramer transform; in ``R^d`` the coordinates are independent copies."""

    family: CramerFamily


@dataclass(frozen=True, eq=False)
class CramerNumeric:
    """Cramer transform computed from sampled log-MGF values (1D)."""

    log_mgf: GridFunction1D
    u_grid: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Contracted:
    """``base(inverse(u))`` for an invertible continuous map with known inverse."""

    base: "CostSpec"
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    p: float | None = None  # set when the map is the power map

    @classmethod
    def power(cls, p: float, base: "CostSpec | None" = None) -> "Contracted":
        """Quadratic cost pushed through the power map; equals ``|u|^p``."""
        if p <= 0:
            raise ValueError("p must be positive")
        return cls(Quadratic() if base is None else base,
                   lambda v: power_map(p, v), lambda u: power_map_inverse(p, u), p=p)


CostSpec = Union[Quadratic, PowerP, CramerClosed, CramerNumeric, Contracted]


def eval_cost(spec: CostSpec, u) -> np.ndarray | float:
    """Cost of displacement(s) ``u``.

    ``u`` may be a scalar (1D), a single point ``(d,)`` or an array
    ``(..., d)``; a scalar/point input returns a float.
    """
    arr = np.asarray(u, dtype=float)
    single = arr.ndim <= 1
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    out = _eval(spec, arr)
    return float(out.reshape(-1)[0]) if single else out


def _eval(spec: CostSpec, u: np.ndarray) -> np.ndarray:
    if isinstance(spec, Quadratic):
        return 0.5 * np.sum(u * u, axis=-1)
    if isinstance(spec, PowerP):
        return np.linalg.norm(u, axis=-1) ** spec.p
    if isinstance(spec, CramerClosed):
        return np.sum(_cramer_base(spec.family.tag, (u - spec.family.b) / spec.family.a), axis=-1)
    if isinstance(spec, CramerNumeric):
        if u.shape[-1] != 1:
            raise ValueError("numeric Cramer transforms are one-dimensional")
        return _numeric_lookup(spec, u[..., 0])
    if isinstance(spec, Contracted):
        v = np.asarray(spec.inverse(u), dtype=float)
        back = np.asarray(spec.forward(v), dtype=float)
        if not np.allclose(back, u, rtol=1e-9, atol=1e-12):
            raise ValueError("contraction map is not invertible at the requested displacement")
        return _eval(spec.base, v)
    raise TypeError(f"not a cost specification: {spec!r}")


def _numeric_lookup(spec: CramerNumeric, u: np.ndarray) -> np.ndarray:
    if spec.u_grid is None:
        flat = np.unique(u.reshape(-1))
        vals = cramer_numeric(spec.log_mgf, flat).values
        return vals[np.searchsorted(flat, u)]
    table = cramer_numeric(spec.log_mgf, spec.u_grid)
    return table(u)


def is_convex_cost(spec: CostSpec) -> bool:
    """Whether the displacement cost is known to be convex."""
    if isinstance(spec, (Quadratic, CramerClosed, CramerNumeric)):
        return True
    if isinstance(spec, PowerP):
        return spec.p >= 1
    if isinstance(spec, Contracted):
        return spec.p is not None and spec.p >= 1 and isinstance(spec.base, Quadratic)
    return False


def mean_displacement(spec: CostSpec) -> float | None:
    """The displacement where a Cramer cost vanishes, if known."""
    if isinstance(spec, CramerClosed):
        return spec.family.mean
    if isinstance(spec, (Quadratic, PowerP, Contracted)):
        return 0.0
    return None


@dataclass(frozen=True, eq=False)
class CostMatrix:
    source_support: np.ndarray
    target_support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(np.isnan(v)) or np.any(v < 0):
            raise ValueError("costs must lie in [0, +inf]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    def integrate(self, plan) -> float:
        """``sum C * plan`` with ``0 * inf = 0``; ``inf`` if a charged cell is infinite."""
        w = np.asarray(getattr(plan, "weights", plan), dtype=float)
        charged = w > 0
        if np.any(charged & ~self.finite):
            return INF
        return float(np.sum(np.where(charged, self.values, 0.0) * w))


def cost_matrix(spec: CostSpec, source, target) -> CostMatrix:
    """``C[i, j] = c(target[j] - source[i])``."""
    src = as_points(getattr(source, "support", source))
    tgt = as_points(getattr(target, "support", target))
    if src.shape[1] != tgt.shape[1]:
        raise ValueError(f"dimension mismatch: R^{src.shape[1]} vs R^{tgt.shape[1]}")
    disp = tgt[None, :, :] - src[:, None, :]
    return CostMatrix(src, tgt, _eval(spec, disp))


# --------------------------------------------------------------------------
# config form: {kind = "power", p = 2.0} and friends


def cost_from_dict(d: dict) -> CostSpec:
    kind = str(d.get("kind", "")).lower()
    if kind == "quadratic":
        return Quadratic()
    if kind == "power":
        return PowerP(float(d["p"]))
    if kind in ("power_map", "contracted_power"):
        return Contracted.power(float(d["p"]))
    if kind == "cramer":
        return CramerClosed(CramerFamily(d["family"], float(d.get("a", 1.0)), float(d.get("b", 0.0))))
    raise ValueError(f"unknown cost kind {kind!r}")


def cost_to_dict(spec: CostSpec) -> dict:
    if isinstance(spec, Quadratic):
        return {"kind": "quadratic"}
    if isinstance(spec, PowerP):
        return {"kind": "power", "p": spec.p}
    if isinstance(spec, CramerClosed):
        f = spec.family
        return {"kind": "cramer", "family": f.tag, "a": f.a, "b": f.b}
    if isinstance(spec, Contracted) and spec.p is not None and isinstance(spec.base, Quadratic):
        return {"kind": "power_map", "p": spec.p}
    raise ValueError(f"cost {spec!r} has no config form")


def parse_cost(text: str) -> CostSpec:
    """Parse ``quadratic``, ``power:p=3``, ``cramer:family=poisson`` or a TOML inline table."""
    text = text.strip()
    if text.startswith("{"):
        from ._toml import loads
        return cost_from_dict(loads("cost = " + text)["cost"])
    kind, _, rest = text.partition(":")
    d: dict = {"kind": kind}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        d[key.strip()] = val.strip()
    return cost_from_dict(d)
