"""
Truncated conditional-quantile filter.

For ``t >= 1``

    eps_t   = Y_t - phi_0 - sum_j phi_j Y_{t-j} - sum_i psi_i eps_{t-i}
    h_t^2   = 1 + sum_i gamma_1i (eps_{t-i}^+)^2 + gamma_2i (eps_{t-i}^-)^2
                + sum_j beta_j h_{t-j}^2
    q_t     = Y_t - eps_t + xi h_t

started from ``eps_t = 0``, ``Y_t = phi_0 / phi(1)`` and
``h_t^2 = 1 / (1 - sum beta_j)`` for ``t <= 0``.  The gradient is obtained by
differentiating these recursions forward, including the dependence of the
presample values on ``phi`` and ``beta``, so it is the exact derivative of
the computed ``q_t``.  The squared hinges ``(eps^+)^2`` and ``(eps^-)^2`` are
continuously differentiable, so no tie-break is needed at ``eps = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError, InputError
from .kernels import backend
from .model import ModelOrders, QuantileParams, validate


@dataclass(frozen=True)
class FilterState:
    """
    Output of the filter.

    ``grad_q`` has shape ``(n, dim)`` with columns ordered as
    :meth:`ModelOrders.names`; ``grad_eps`` (shape ``(n, 1+P+Q)``) and
    ``grad_h2`` (shape ``(n, dim-1)``, xi excluded) are the derivatives of the
    intermediate recursions.
    """

    eps_tilde: np.ndarray
    h2_tilde: np.ndarray
    q_tilde: np.ndarray
    grad_q: np.ndarray | None = None
    grad_eps: np.ndarray | None = None
    grad_h2: np.ndarray | None = None

    @property
    def h_tilde(self) -> np.ndarray:
        return np.sqrt(self.h2_tilde)

    @property
    def std_resid(self) -> np.ndarray:
        """``eps_t / h_t``: estimates of ``u_t``."""
        return self.eps_tilde / np.sqrt(self.h2_tilde)


def split_vector(vec: np.ndarray, orders: ModelOrders):
    """Contiguous float64 blocks ``(xi, phi, psi, gamma1, gamma2, beta)``."""
    vec = np.ascontiguousarray(vec, dtype=float)
    P, Q, p, q = orders.P, orders.Q, orders.p, orders.q
    i = 1
    phi = vec[i : i + P + 1]
    i += P + 1
    psi = vec[i : i + Q]
    i += Q
    g1 = vec[i : i + q]
    i += q
    g2 = vec[i : i + q]
    i += q
    beta = vec[i : i + p]
    return float(vec[0]), phi, psi, g1, g2, beta


def as_series(Y) -> np.ndarray:
    y = np.ascontiguousarray(np.asarray(Y, dtype=float).ravel())
    if y.size < 1:
        raise InputError("series must contain at least one observation")
    if not np.all(np.isfinite(y)):
        raise InputError("series contains NaN or infinite values")
    return y


def _checked(theta: QuantileParams, orders: ModelOrders | None) -> ModelOrders:
    orders = orders or theta.orders
    report = validate(theta, orders)
    if not report:
        raise ConstraintError(f"invalid parameter: {report.reason}")
    return orders


def filter_quantiles(Y, theta: QuantileParams, orders: ModelOrders | None = None) -> FilterState:
    """Run the filter and return ``eps``, ``h^2`` and ``q`` (no derivatives)."""
    orders = _checked(theta, orders)
    y = as_series(Y)
    n = y.size
    eps, h2, q = np.empty(n), np.empty(n), np.empty(n)
    backend.filter_values(y, *split_vector(theta.to_vector(), orders), eps, h2, q)
    return FilterState(eps, h2, q)


def filter_with_gradient(Y, theta: QuantileParams, orders: ModelOrders | None = None) -> FilterState:
    """Filter values together with ``dq_t/dtheta``, ``deps_t/dphi`` and ``dh_t^2/dtheta``."""
    orders = _checked(theta, orders)
    y = as_series(Y)
    n = y.size
    eps, h2, q = np.empty(n), np.empty(n), np.empty(n)
    deps = np.empty((n, orders.n_arma))
    dh2 = np.empty((n, orders.n_model))
    dq = np.empty((n, orders.dim))
    backend.filter_gradient(y, *split_vector(theta.to_vector(), orders), eps, h2, q, deps, dh2, dq)
    return FilterState(eps, h2, q, dq, deps, dh2)


def oracle_q_exact(Y_extended, theta: QuantileParams, M: int, orders: ModelOrders | None = None, gradient: bool = False) -> FilterState:
    """
    Approximate the untruncated filter by running on ``M`` presample points.

    ``Y_extended`` holds the presample followed by the ``n`` observations;
    outputs for the last ``n`` points are returned.  For AR(P)-ARCH(q)
    models (``Q = p = 0``) any ``M >= P + q`` makes the result exact.
    """
    if M < 0:
        raise ValueError("M must be non-negative")
    run = filter_with_gradient if gradient else filter_quantiles
    st = run(Y_extended, theta, orders)
    cut = lambda a: None if a is None else a[M:]  # noqa: E731
    return FilterState(*(cut(getattr(st, f)) for f in ("eps_tilde", "h2_tilde", "q_tilde", "grad_q", "grad_eps", "grad_h2")))


__all__ = ["FilterState", "as_series", "filter_quantiles", "filter_with_gradient", "oracle_q_exact", "split_vector"]
