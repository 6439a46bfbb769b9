"""
Parameter containers and model bookkeeping for ARMA(P,Q)-AGARCH(p,q).

The model is written in the scale-normalized form

    Y_t = phi_0 + sum_j phi_j Y_{t-j} + sum_i psi_i eps_{t-i} + eps_t,
    eps_t = h_t u_t,
    h_t^2 = 1 + sum_i gamma_1i (eps_{t-i}^+)^2 + sum_i gamma_2i (eps_{t-i}^-)^2
              + sum_j beta_j h_{t-j}^2,

so that the innovation variance ``omega`` lives in the law of ``u_t`` and
the tau-th conditional quantile is ``Y_t - eps_t + xi(tau) h_t``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple

import numpy as np

from .errors import DimensionError, NonstationaryScaleError, UnsupportedOrdersError
from .innovations import InnovationSpec

ROOT_TOL = 1e-8


@dataclass(frozen=True)
class ModelOrders:
    """Orders ``(P, Q, p, q)``: AR, MA, GARCH-lag and ARCH-lag."""

    P: int = 0
    Q: int = 0
    p: int = 0
    q: int = 0

    def __post_init__(self) -> None:
        for name in ("P", "Q", "p", "q"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise DimensionError(f"order {name} must be a non-negative integer, got {v!r}")

    @classmethod
    def parse(cls, text: str) -> "ModelOrders":
        """Parse ``"P,Q,p,q"``."""
        parts = [s.strip() for s in str(text).split(",")]
        if len(parts) != 4 or not all(s.isdigit() for s in parts):
            raise DimensionError(f"orders must look like 'P,Q,p,q', got {text!r}")
        return cls(*map(int, parts))

    def __str__(self) -> str:
        return f"{self.P},{self.Q},{self.p},{self.q}"

    @property
    def has_scale(self) -> bool:
        return self.p + self.q > 0

    @property
    def n_arma(self) -> int:
        return 1 + self.P + self.Q

    @property
    def n_model(self) -> int:
        return self.n_arma + 2 * self.q + self.p

    @property
    def dim(self) -> int:
        """Length of the quantile parameter vector (xi included)."""
        return 1 + self.n_model

    def names(self, with_xi: bool = True) -> list[str]:
        out = ["xi"] if with_xi else []
        out += [f"phi{j}" for j in range(self.P + 1)]
        out += [f"psi{i}" for i in range(1, self.Q + 1)]
        out += [f"gamma1{i}" for i in range(1, self.q + 1)]
        out += [f"gamma2{i}" for i in range(1, self.q + 1)]
        out += [f"beta{j}" for j in range(1, self.p + 1)]
        return out

    def slices(self) -> dict[str, slice]:
        """Positions of each block inside the full parameter vector."""
        i = 1
        out = {"xi": slice(0, 1)}
        for key, size in (("phi", self.P + 1), ("psi", self.Q), ("gamma1", self.q), ("gamma2", self.q), ("beta", self.p)):
            out[key] = slice(i, i + size)
            i += size
        return out


def _tup(values: Iterable[float] | float) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    return tuple(float(v) for v in arr.ravel())


@dataclass(frozen=True)
class QuantileParams:
    """
    Quantile regression parameter ``theta = (xi, phi, psi, gamma1, gamma2, beta)``.

    ``phi`` holds ``phi_0..phi_P`` (intercept first).  ``gamma1`` and
    ``gamma2`` weigh positive and negative past shocks.
    """

    xi: float = 0.0
    phi: tuple[float, ...] = (0.0,)
    psi: tuple[float, ...] = ()
    gamma1: tuple[float, ...] = ()
    gamma2: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "xi", float(self.xi))
        for name in ("phi", "psi", "gamma1", "gamma2", "beta"):
            v = getattr(self, name)
            object.__setattr__(self, name, () if v is None else _tup(v) if np.size(v) else ())
        if len(self.phi) < 1:
            raise DimensionError("phi must contain at least the intercept phi0")
        if len(self.gamma1) != len(self.gamma2):
            raise DimensionError("gamma1 and gamma2 must have equal length")

    @property
    def orders(self) -> ModelOrders:
        return ModelOrders(len(self.phi) - 1, len(self.psi), len(self.beta), len(self.gamma1))

    def to_vector(self) -> np.ndarray:
        return np.array((self.xi, *self.phi, *self.psi, *self.gamma1, *self.gamma2, *self.beta), dtype=float)

    @classmethod
    def from_vector(cls, vec: Iterable[float], orders: ModelOrders) -> "QuantileParams":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (orders.dim,):
            raise DimensionError(f"expected a vector of length {orders.dim} for orders {orders}, got shape {vec.shape}")
        sl = orders.slices()
        return cls(float(vec[0]), vec[sl["phi"]], vec[sl["psi"]], vec[sl["gamma1"]], vec[sl["gamma2"]], vec[sl["beta"]])

    def with_xi(self, xi: float) -> "QuantileParams":
        return QuantileParams(xi, self.phi, self.psi, self.gamma1, self.gamma2, self.beta)

    def to_dict(self, omega: float | None = None) -> dict[str, float]:
        """Flat dict in canonical key order; ``omega`` appended when given."""
        out = dict(zip(self.orders.names(), map(float, self.to_vector())))
        if omega is not None:
            out["omega"] = float(omega)
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "QuantileParams":
        """Inverse of :meth:`to_dict`; orders are inferred from the keys."""
        orders = orders_from_keys(d)
        vec = [float(d.get("xi", 0.0))] + [float(d[k]) for k in orders.names(with_xi=False)]
        return cls.from_vector(vec, orders)


_KEY_RE = re.compile(r"^(phi|psi|gamma1|gamma2|beta)(\d+)$")


def orders_from_keys(d: dict[str, Any]) -> ModelOrders:
    seen: dict[str, set[int]] = {k: set() for k in ("phi", "psi", "gamma1", "gamma2", "beta")}
    for key in d:
        m = _KEY_RE.match(key)
        if m:
            seen[m.group(1)].add(int(m.group(2)))
        elif key not in ("xi", "omega"):
            raise DimensionError(f"unknown parameter key {key!r}")
    expect = {
        "phi": set(range(len(seen["phi"]))),
        "psi": set(range(1, len(seen["psi"]) + 1)),
        "gamma1": set(range(1, len(seen["gamma1"]) + 1)),
        "gamma2": set(range(1, len(seen["gamma2"]) + 1)),
        "beta": set(range(1, len(seen["beta"]) + 1)),
    }
    for k in seen:
        if seen[k] != expect[k]:
            raise DimensionError(f"{k} indices must be contiguous, got {sorted(seen[k])}")
    if not seen["phi"]:
        raise DimensionError("phi0 is required")
    if len(seen["gamma1"]) != len(seen["gamma2"]):
        raise DimensionError("gamma1 and gamma2 must have the same order q")
    return ModelOrders(len(seen["phi"]) - 1, len(seen["psi"]), len(seen["beta"]), len(seen["gamma1"]))


@dataclass(frozen=True)
class GenerativeParams:
    """
    The data-generating process: model coefficients plus innovation law.

    ``model.xi`` is ignored and stored as 0; the innovation quantile follows
    from :attr:`innovation` at each level.  ``omega`` is the innovation
    variance and is carried by the innovation spec.
    """

    model: QuantileParams
    innovation: InnovationSpec = field(default_factory=InnovationSpec)

    def __post_init__(self) -> None:
        if self.model.xi != 0.0:
            object.__setattr__(self, "model", self.model.with_xi(0.0))

    @property
    def omega(self) -> float:
        return self.innovation.omega

    @property
    def orders(self) -> ModelOrders:
        return self.model.orders

    def quantile_params(self, tau: float) -> QuantileParams:
        """The true ``theta(tau)``, with ``xi = F_u^{-1}(tau)``."""
        return self.model.with_xi(float(self.innovation.ppf(tau)))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {k: v for k, v in self.model.to_dict(self.omega).items() if k != "xi"}
        out["innovation"] = self.innovation.to_dict()
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any], innovation: InnovationSpec | None = None) -> "GenerativeParams":
        d = dict(d)
        inn = d.pop("innovation", None)
        if innovation is None:
            innovation = InnovationSpec.from_dict(inn) if inn else InnovationSpec()
        omega = d.pop("omega", None)
        if omega is not None:
            innovation = innovation.with_omega(float(omega))
        d.pop("xi", None)
        return cls(QuantileParams.from_dict(d), innovation)


def simulation_design(innovation: str = "normal") -> GenerativeParams:
    """The ARMA(1,1)-AGARCH(1,1) Monte-Carlo design with omega = 0.2.

    ``innovation`` is ``"normal"`` (design a) or ``"skewed_t"`` (design b,
    4 degrees of freedom, skew 0.71).
    """
    model = QuantileParams(0.0, (0.04, 0.2), (0.1,), (0.5,), (1.25,), (0.7,))
    if innovation in ("normal", "a"):
        spec = InnovationSpec("normal", omega=0.2)
    elif innovation in ("skewed_t", "b"):
        spec = InnovationSpec("skewed_t", nu=4.0, skew=0.71, omega=0.2)
    else:
        raise ValueError(f"unknown design {innovation!r}")
    return GenerativeParams(model, spec)


class ValidityReport(NamedTuple):
    ok: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def _reciprocal_root_radius(coefs: Iterable[float]) -> float:
    """Largest ``1/|z|`` over the roots of ``1 + sum_i c_i z^i``."""
    c = np.asarray(tuple(coefs), dtype=float)
    # trailing zeros drop the degree
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return 0.0
    c = c[: nz[-1] + 1]
    k = c.size
    comp = np.zeros((k, k))
    comp[0, :] = -c
    if k > 1:
        comp[1:, :-1] = np.eye(k - 1)
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def psi_radius(psi: Iterable[float]) -> float:
    return _reciprocal_root_radius(psi)


def validate(theta: QuantileParams, orders: ModelOrders | None = None) -> ValidityReport:
    """
    Check ``theta`` against the parameter-space constraints.

    Raises
    ------
    DimensionError
        If the array lengths do not match ``orders``.

    Returns
    -------
    ValidityReport
        ``ok`` is False with ``reason`` naming the first violated
        constraint: ``"finite"``, ``"gamma nonneg"``, ``"beta nonneg"``,
        ``"beta sum"``, ``"psi roots"`` or ``"phi(1) nonzero"``.
    """
    if orders is not None and theta.orders != orders:
        raise DimensionError(f"parameter orders {theta.orders} do not match declared orders {orders}")
    vec = theta.to_vector()
    if not np.all(np.isfinite(vec)):
        return ValidityReport(False, "finite")
    if any(g < 0 for g in theta.gamma1 + theta.gamma2):
        return ValidityReport(False, "gamma nonneg")
    if any(b < 0 for b in theta.beta):
        return ValidityReport(False, "beta nonneg")
    if sum(theta.beta) >= 1.0:
        return ValidityReport(False, "beta sum")
    if theta.psi and psi_radius(theta.psi) >= 1.0 - ROOT_TOL:
        return ValidityReport(False, "psi roots")
    if abs(1.0 - sum(theta.phi[1:])) < 1e-10:
        return ValidityReport(False, "phi(1) nonzero")
    return ValidityReport(True)


def default_truncation(rate: float, floor: int = 1) -> int:
    """Smallest K with ``rate**K < 1e-12``, capped at 10**4."""
    if rate <= 0:
        return max(floor, 1)
    if rate >= 1:
        return 10_000
    k = int(np.ceil(np.log(1e-12) / np.log(rate)))
    while rate**k >= 1e-12:
        k += 1
    return int(min(max(k, floor, 1), 10_000))


@dataclass(frozen=True)
class FilterCoeffs:
    """Power-series coefficients of the infinite-order representations.

    ``c1[k-1]``, ``c2[k-1]`` multiply ``(eps_{t-k}^{+/-})^2`` in the
    ARCH(inf) form of ``h_t^2``; ``d[k-1]`` multiplies ``-Y_{t-k}`` in the
    AR(inf) form of ``Y_t``.
    """

    c0: float
    c1: np.ndarray
    c2: np.ndarray
    d: np.ndarray
    K: int


def arch_infty_coeffs(theta: QuantileParams, orders: ModelOrders | None = None, K: int | None = None):
    """
    Coefficients of ``gamma_l(z) / beta(z)`` with ``beta(z) = 1 - sum beta_j z^j``.

    Returns
    -------
    c0, c1, c2 : float, ndarray, ndarray
        ``c0 = 1 / beta(1)`` and the first ``K`` coefficients for l = 1, 2.
    """
    orders = orders or theta.orders
    if theta.orders != orders:
        raise DimensionError(f"parameter orders {theta.orders} do not match declared orders {orders}")
    bsum = sum(theta.beta)
    if bsum >= 1.0:
        raise NonstationaryScaleError(f"sum of beta is {bsum} >= 1")
    if K is None:
        K = default_truncation(bsum, floor=max(orders.q, 1))
    if K < 1:
        raise ValueError("K must be >= 1")
    beta = np.asarray(theta.beta)
    out = []
    for gam in (theta.gamma1, theta.gamma2):
        c = np.zeros(K)
        for k in range(1, K + 1):
            v = gam[k - 1] if k <= len(gam) else 0.0
            for j in range(1, min(k - 1, len(beta)) + 1):
                v += beta[j - 1] * c[k - j - 1]
            c[k - 1] = v
        out.append(c)
    return 1.0 / (1.0 - bsum), out[0], out[1]


def ar_infty_coeffs(theta: QuantileParams, orders: ModelOrders | None = None, K: int | None = None) -> np.ndarray:
    """Coefficients ``d_k`` with ``1 + sum d_k z^k = phi(z) / psi(z)``."""
    orders = orders or theta.orders
    if theta.orders != orders:
        raise DimensionError(f"parameter orders {theta.orders} do not match declared orders {orders}")
    if K is None:
        K = default_truncation(psi_radius(theta.psi), floor=max(orders.P, 1))
    phi = theta.phi[1:]
    psi = theta.psi
    a = np.zeros(K + 1)
    a[0] = 1.0
    for k in range(1, K + 1):
        v = -phi[k - 1] if k <= len(phi) else 0.0
        for i in range(1, min(k, len(psi)) + 1):
            v -= psi[i - 1] * a[k - i]
        a[k] = v
    return a[1:]


def filter_coeffs(theta: QuantileParams, K: int | None = None) -> FilterCoeffs:
    orders = theta.orders
    if K is None:
        K = max(
            default_truncation(sum(theta.beta), floor=max(orders.q, 1)),
            default_truncation(psi_radius(theta.psi), floor=max(orders.P, 1)),
        )
    c0, c1, c2 = arch_infty_coeffs(theta, orders, K)
    return FilterCoeffs(c0, c1, c2, ar_infty_coeffs(theta, orders, K), K)


class MomentEstimate(NamedTuple):
    mean: float
    se: float


def moment_condition(gen: GenerativeParams, m: float = 2.0, mc_reps: int = 10**6, seed: int | None = 0) -> MomentEstimate:
    """
    Monte-Carlo estimate of ``E(beta_1 + gamma_11 (u^+)^2 + gamma_21 (u^-)^2)^m``.

    The AGARCH(1,1) process has a stationary solution with finite
    ``E|eps_t|^{2m}`` iff this quantity is below one.
    """
    orders = gen.orders
    if orders.p != 1 or orders.q != 1:
        raise UnsupportedOrdersError(f"moment_condition needs AGARCH(1,1) orders, got {orders}")
    if mc_reps < 10:
        raise ValueError("mc_reps must be at least 10")
    b, g1, g2 = gen.model.beta[0], gen.model.gamma1[0], gen.model.gamma2[0]
    if g1 == 0.0 and g2 == 0.0:
        return MomentEstimate(float(b**m), 0.0)
    u = gen.innovation.rvs(mc_reps, np.random.default_rng(seed))
    x = b + g1 * np.maximum(u, 0.0) ** 2 + g2 * np.maximum(-u, 0.0) ** 2
    xm = x**m
    return MomentEstimate(float(xm.mean()), float(xm.std(ddof=1) / np.sqrt(mc_reps)))


__all__ = [
    "FilterCoeffs",
    "GenerativeParams",
    "ModelOrders",
    "MomentEstimate",
    "QuantileParams",
    "ValidityReport",
    "ar_infty_coeffs",
    "arch_infty_coeffs",
    "default_truncation",
    "filter_coeffs",
    "moment_condition",
    "orders_from_keys",
    "simulation_design",
    "psi_radius",
    "validate",
]
