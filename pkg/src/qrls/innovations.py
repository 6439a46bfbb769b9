"""
Innovation distributions.

Two families are supported, both with mean zero and variance ``omega``:

* ``normal``: ``u = sqrt(omega) * Z`` with ``Z ~ N(0, 1)``.
* ``skewed_t``: the Fernandez-Steel skewed Student t with ``nu`` degrees of
  freedom and skew ``gamma_s``,

  .. math::

     f(x) = \\frac{2}{\\gamma_s + 1/\\gamma_s}
            \\left[t_\\nu(x/\\gamma_s) 1\\{x \\ge 0\\}
                   + t_\\nu(\\gamma_s x) 1\\{x < 0\\}\\right],

  shifted and scaled to mean 0 and variance 1, then multiplied by
  ``sqrt(omega)``.  ``gamma_s < 1`` gives a left-skewed law.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np
from scipy import integrate, stats

from .errors import DegenerateDensityError, DomainError

FAMILIES = ("normal", "skewed_t")


@lru_cache(maxsize=64)
def _skewed_t_moments(nu: float, skew: float) -> tuple[float, float]:
    """Mean and standard deviation of the raw skewed t, by adaptive quadrature."""
    c = 2.0 / (skew + 1.0 / skew)

    def raw(x: float) -> float:
        if x >= 0:
            return c * stats.t.pdf(x / skew, nu)
        return c * stats.t.pdf(skew * x, nu)

    def moment(k: int) -> float:
        lo = integrate.quad(lambda x: x**k * raw(x), -np.inf, 0.0, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
        hi = integrate.quad(lambda x: x**k * raw(x), 0.0, np.inf, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
        return lo + hi

    m1 = moment(1)
    m2 = moment(2)
    return m1, float(np.sqrt(m2 - m1 * m1))


@dataclass(frozen=True)
class InnovationSpec:
    """
    Law of the i.i.d. innovations ``u_t``.

    Parameters
    ----------
    family : {"normal", "skewed_t"}
    nu : float, optional
        Degrees of freedom of the skewed t; must exceed 2.
    skew : float, optional
        Fernandez-Steel skew parameter, positive; 1 is symmetric.
    omega : float
        Variance of ``u_t``.
    """

    family: str = "normal"
    nu: float | None = None
    skew: float | None = None
    omega: float = 1.0
    _loc: float = field(default=0.0, init=False, repr=False, compare=False)
    _scale: float = field(default=1.0, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise DomainError(f"unknown innovation family {self.family!r}")
        if not (self.omega > 0 and np.isfinite(self.omega)):
            raise DomainError("omega must be positive")
        if self.family == "skewed_t":
            if self.nu is None or not self.nu > 2:
                raise DomainError("skewed_t requires nu > 2")
            if self.skew is None or not self.skew > 0:
                raise DomainError("skewed_t requires skew > 0")
            loc, scale = _skewed_t_moments(float(self.nu), float(self.skew))
            object.__setattr__(self, "_loc", loc)
            object.__setattr__(self, "_scale", scale)
        elif self.nu is not None or self.skew is not None:
            raise DomainError("nu and skew apply to skewed_t only")

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family}
        if self.family == "skewed_t":
            out["nu"] = self.nu
            out["skew"] = self.skew
        out["omega"] = self.omega
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "InnovationSpec":
        known = {k: d[k] for k in ("family", "nu", "skew", "omega") if k in d}
        return cls(**known)

    def with_omega(self, omega: float) -> "InnovationSpec":
        d = self.to_dict()
        d["omega"] = omega
        return InnovationSpec.from_dict(d)

    # -- standardized (unit variance) law ------------------------------
    @property
    def _sd(self) -> float:
        return float(np.sqrt(self.omega))

    def _raw_cdf(self, x: np.ndarray) -> np.ndarray:
        g = self.skew
        c = 2.0 / (g + 1.0 / g)
        neg = (c / g) * stats.t.cdf(g * x, self.nu)
        pos = c / (2.0 * g) + c * g * (stats.t.cdf(x / g, self.nu) - 0.5)
        return np.where(x < 0, neg, pos)

    def _raw_pdf(self, x: np.ndarray) -> np.ndarray:
        g = self.skew
        c = 2.0 / (g + 1.0 / g)
        return c * np.where(x >= 0, stats.t.pdf(x / g, self.nu), stats.t.pdf(g * x, self.nu))

    def _raw_ppf(self, tau: np.ndarray) -> np.ndarray:
        g = self.skew
        c = 2.0 / (g + 1.0 / g)
        p0 = 1.0 / (1.0 + g * g)
        lower = stats.t.ppf(np.minimum(tau, p0) * g / c, self.nu) / g
        upper = g * stats.t.ppf(0.5 + np.maximum(tau - p0, 0.0) / (c * g), self.nu)
        return np.where(tau < p0, lower, upper)

    # -- public distribution functions of u ----------------------------
    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = x / self._sd
        if self.family == "normal":
            out = stats.norm.cdf(z)
        else:
            out = self._raw_cdf(self._loc + self._scale * z)
        return out[()] if out.ndim == 0 else out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = x / self._sd
        if self.family == "normal":
            out = stats.norm.pdf(z) / self._sd
        else:
            out = self._raw_pdf(self._loc + self._scale * z) * self._scale / self._sd
        return out[()] if out.ndim == 0 else out

    def ppf(self, tau):
        tau = np.asarray(tau, dtype=float)
        if np.any(~((tau > 0) & (tau < 1))):
            raise DomainError(f"probability level must lie in (0, 1), got {tau}")
        if self.family == "normal":
            z = stats.norm.ppf(tau)
        else:
            z = (self._raw_ppf(tau) - self._loc) / self._scale
        out = self._sd * z
        return out[()] if out.ndim == 0 else out

    def rvs(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` innovations from the caller-owned generator ``rng``."""
        if self.family == "normal":
            return self._sd * rng.standard_normal(n)
        g = self.skew
        right = rng.random(n) < g * g / (1.0 + g * g)
        mag = np.abs(rng.standard_t(self.nu, n))
        x = np.where(right, g * mag, -mag / g)
        return self._sd * (x - self._loc) / self._scale

    def moment(self, func, lower: float = -np.inf, upper: float = np.inf) -> float:
        """E[func(u)] restricted to ``lower < u < upper`` by adaptive quadrature."""
        pieces = [(lower, min(0.0, upper)), (max(0.0, lower), upper)]
        total = 0.0
        for a, b in pieces:
            if a < b:
                total += integrate.quad(lambda v: func(v) * self.pdf(v), a, b, limit=200, epsabs=1e-13, epsrel=1e-11)[0]
        return total


@lru_cache(maxsize=64)
def split_second_moments(spec: InnovationSpec) -> tuple[float, float]:
    """``(E (u^+)^2, E (u^-)^2)``."""
    if spec.family == "normal":
        return spec.omega / 2.0, spec.omega / 2.0
    return spec.moment(lambda v: v * v, 0.0, np.inf), spec.moment(lambda v: v * v, -np.inf, 0.0)


def quantile(spec: InnovationSpec, tau: float) -> float:
    """The innovation quantile ``xi(tau) = F_u^{-1}(tau)``."""
    return float(spec.ppf(tau))


def density_at_quantile(spec: InnovationSpec, tau: float) -> float:
    """``f_u(F_u^{-1}(tau))``, the density entering the asymptotic covariance."""
    value = float(spec.pdf(spec.ppf(tau)))
    if not value > 0:
        raise DegenerateDensityError(f"density underflows to 0 at tau={tau}")
    return value


def sample(spec: InnovationSpec, n: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return spec.rvs(n, rng)


def standardized_skewed_t(nu: float = 4.0, skew: float = 0.71, omega: float = 1.0) -> InnovationSpec:
    return InnovationSpec("skewed_t", nu=nu, skew=skew, omega=omega)


__all__ = [
    "FAMILIES",
    "InnovationSpec",
    "density_at_quantile",
    "quantile",
    "sample",
    "split_second_moments",
    "standardized_skewed_t",
]
