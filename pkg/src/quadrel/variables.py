"""Scalar probability primitives.

Standard normal pdf/cdf/inverse, probabilists' Hermite polynomials,
per-variable marginal pdf/cdf and the Rackwitz-Fiessler equivalent
normalization used to map arbitrary marginals onto normal ones at a
given expansion point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DegenerateTailError, DomainError

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# CDF values this close to 0/1 are clamped before inversion so that
# equivalent normalization stays finite far from the mean.
_CDF_FLOOR = 1e-300
_CDF_CEIL = 1.0 - 1e-16


class Kind(str, Enum):
    NORMAL = "normal"
    LOGNORMAL = "lognormal"
    DETERMINISTIC = "deterministic"


class Role(str, Enum):
    DESIGN_VARIABLE = "design-variable"
    PARAMETER = "parameter"
    DETERMINISTIC_DESIGN = "deterministic-design"


def std_normal(x):
    """Return (pdf, cdf) of the standard normal at x."""
    x = np.asarray(x, dtype=float)
    pdf = np.exp(-0.5 * x * x) / _SQRT_2PI
    cdf = ndtr(x)
    if pdf.ndim == 0:
        return float(pdf), float(cdf)
    return pdf, cdf


def std_normal_pdf(x):
    return std_normal(x)[0]


def std_normal_cdf(x):
    return std_normal(x)[1]


def std_normal_inv(p):
    """Inverse standard normal CDF for p strictly inside (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise DomainError(f"std_normal_inv requires 0 < p < 1, got {p}")
    out = ndtri(arr)
    return float(out) if out.ndim == 0 else out


def hermite_prob(i: int, x):
    """Probabilists' Hermite polynomial H_i for i in {1, 2, 3}."""
    if i == 1:
        return x
    if i == 2:
        return x * x - 1.0
    if i == 3:
        return x * x * x - 3.0 * x
    raise DomainError(f"hermite_prob supports i in {{1, 2, 3}}, got {i}")


@dataclass(frozen=True)
class RandomVariable:
    """One component of the stacked variable vector.

    ``mean``/``std`` always describe the variable itself (for a lognormal
    the arithmetic mean and standard deviation, converted internally to
    log-scale parameters).  ``lower``/``upper`` bound the mean for design
    roles only.
    """

    name: str
    kind: Kind
    role: Role
    mean: float
    std: float = 0.0
    lower: float = field(default=-math.inf)
    upper: float = field(default=math.inf)

    def __post_init__(self):
        if self.std < 0.0:
            raise DomainError(f"{self.name}: std must be >= 0, got {self.std}")
        if (self.kind is Kind.DETERMINISTIC or self.role is Role.DETERMINISTIC_DESIGN) and self.std != 0.0:
            raise DomainError(f"{self.name}: deterministic variables must have std = 0")
        if self.kind is Kind.LOGNORMAL and self.mean <= 0.0:
            raise DomainError(f"{self.name}: lognormal mean must be > 0, got {self.mean}")
        if not (self.lower <= self.mean <= self.upper):
            raise DomainError(
                f"{self.name}: mean {self.mean} outside bounds [{self.lower}, {self.upper}]"
            )

    @property
    def is_deterministic(self) -> bool:
        return self.kind is Kind.DETERMINISTIC or self.role is Role.DETERMINISTIC_DESIGN

    @property
    def is_design(self) -> bool:
        return self.role in (Role.DESIGN_VARIABLE, Role.DETERMINISTIC_DESIGN)

    def with_mean(self, mean: float, std: float | None = None) -> "RandomVariable":
        """Copy with a new mean (and optionally std).

        Bounds are dropped: trial points during optimization may sit a
        finite-difference step outside the design box.
        """
        if std is None:
            std = self.std
        return replace(
            self, mean=float(mean), std=float(std), lower=-math.inf, upper=math.inf
        )

    def log_params(self):
        """(lambda, zeta) of the underlying normal for a lognormal variable."""
        if self.kind is not Kind.LOGNORMAL:
            raise DomainError(f"{self.name}: log_params only defined for lognormal")
        zeta2 = math.log1p((self.std / self.mean) ** 2)
        lam = math.log(self.mean) - 0.5 * zeta2
        return lam, math.sqrt(zeta2)


@dataclass(frozen=True)
class EquivalentNormal:
    """Matched-normal (mu_eq, sigma_eq) at one expansion point."""

    mu_eq: float
    sigma_eq: float

    def __post_init__(self):
        if self.sigma_eq < 0.0:
            raise DomainError(f"sigma_eq must be >= 0, got {self.sigma_eq}")


def variable_pdf_cdf(v: RandomVariable, x: float):
    """Marginal (pdf, cdf) of ``v`` at ``x``."""
    if v.kind is Kind.NORMAL:
        u = (x - v.mean) / v.std
        pdf, cdf = std_normal(u)
        return pdf / v.std, cdf
    if v.kind is Kind.LOGNORMAL:
        if x <= 0.0:
            raise DomainError(f"{v.name}: lognormal pdf/cdf requires x > 0, got {x}")
        lam, zeta = v.log_params()
        u = (math.log(x) - lam) / zeta
        pdf, cdf = std_normal(u)
        return pdf / (x * zeta), cdf
    raise DomainError(f"{v.name}: pdf/cdf undefined for deterministic variables")


def variable_inv_cdf(v: RandomVariable, p):
    """Marginal inverse CDF; accepts scalars or arrays of probabilities."""
    if v.kind is Kind.NORMAL:
        return v.mean + v.std * std_normal_inv(p)
    if v.kind is Kind.LOGNORMAL:
        lam, zeta = v.log_params()
        return np.exp(lam + zeta * std_normal_inv(p))
    raise DomainError(f"{v.name}: inverse CDF undefined for deterministic variables")


def equivalent_normal(v: RandomVariable, x: float) -> EquivalentNormal:
    """Equivalent normal parameters of ``v`` at the point ``x``.

    Normal variables map to themselves; deterministic ones to (value, 0).
    For other marginals, sigma_eq and mu_eq are chosen so that the normal
    pdf and cdf match those of ``v`` at ``x``.
    """
    if v.is_deterministic:
        return EquivalentNormal(mu_eq=v.mean, sigma_eq=0.0)
    if v.kind is Kind.NORMAL:
        return EquivalentNormal(mu_eq=v.mean, sigma_eq=v.std)
    pdf, cdf = variable_pdf_cdf(v, x)
    if cdf <= 0.0 or cdf >= 1.0:
        raise DegenerateTailError(
            f"{v.name}: CDF saturated at x={x} (F={cdf}); cannot equivalently normalize"
        )
    u = ndtri(np.clip(cdf, _CDF_FLOOR, _CDF_CEIL))
    sigma_eq = std_normal_pdf(u) / pdf
    mu_eq = x - u * sigma_eq
    return EquivalentNormal(mu_eq=float(mu_eq), sigma_eq=float(sigma_eq))
