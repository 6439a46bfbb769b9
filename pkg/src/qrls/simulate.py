"""Sample paths of the ARMA-AGARCH process."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConstraintError, DimensionError, ExplosivePathError
from ._rng import seed_sequence
from .innovations import split_second_moments
from .kernels import backend
from .model import GenerativeParams, ModelOrders, validate
from .quantile_filter import split_vector


@dataclass(frozen=True)
class SimConfig:
    gen: GenerativeParams
    n: int
    burnin: int = 1000
    seed: int | tuple[int, ...] = 0
    orders: ModelOrders | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.burnin < 0:
            raise ValueError("burnin must be >= 0")
        if self.orders is not None and self.orders != self.gen.orders:
            raise DimensionError(f"orders {self.orders} do not match parameters {self.gen.orders}")


class SimPath(NamedTuple):
    Y: np.ndarray
    eps: np.ndarray
    h2: np.ndarray


def scale_moment_sum(gen: GenerativeParams) -> float:
    """``E(u^+)^2 sum gamma_1 + E(u^-)^2 sum gamma_2 + sum beta``; below 1 gives finite ``E eps^2``."""
    ep, em = split_second_moments(gen.innovation)
    m = gen.model
    return ep * sum(m.gamma1) + em * sum(m.gamma2) + sum(m.beta)


def simulate_path(cfg: SimConfig, u: np.ndarray | None = None) -> SimPath:
    """
    Simulate ``burnin + n`` steps and return the last ``n``.

    Presample values are ``eps_t = 0``, ``h_t^2 = 1/(1 - sum beta)`` and
    ``Y_t = phi_0 / phi(1)``, the same ones the filter uses.

    Parameters
    ----------
    cfg : SimConfig
    u : ndarray, optional
        Innovations of length ``burnin + n`` to use instead of drawing them
        from ``cfg.gen.innovation`` with ``cfg.seed``.

    Raises
    ------
    ExplosivePathError
        If ``h_t^2`` exceeds 1e30; ``t`` counts from the first burn-in step.
    """
    gen = cfg.gen
    orders = gen.orders
    report = validate(gen.model, orders)
    if not report:
        raise ConstraintError(f"invalid parameter: {report.reason}")
    if orders.has_scale and scale_moment_sum(gen) >= 1.0:
        warnings.warn("second-moment condition fails; paths may be heavy-tailed or explosive", RuntimeWarning, stacklevel=2)
    total = cfg.burnin + cfg.n
    if u is None:
        u = gen.innovation.rvs(total, np.random.default_rng(seed_sequence(cfg.seed)))
    u = np.ascontiguousarray(u, dtype=float)
    if u.shape != (total,):
        raise DimensionError(f"innovations must have length {total}")
    y, eps, h2 = np.empty(total), np.empty(total), np.empty(total)
    _, phi, psi, g1, g2, beta = split_vector(gen.model.to_vector(), orders)
    status = backend.simulate(u, phi, psi, g1, g2, beta, y, eps, h2)
    if status >= 0:
        raise ExplosivePathError(int(status))
    b = cfg.burnin
    return SimPath(y[b:].copy(), eps[b:].copy(), h2[b:].copy())


__all__ = ["SimConfig", "SimPath", "scale_moment_sum", "simulate_path"]
