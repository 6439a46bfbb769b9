"""
Asymptotic covariance of the quantile regression estimator.

With ``g_t = dq_t/dtheta`` the estimator satisfies

    sqrt(n) (theta_hat - theta) -> N(0, tau (1 - tau) / f_u(xi)^2 J^-1 V J^-1),

``J = E[g_t g_t' / h_t]`` and ``V = E[g_t g_t']``.  :func:`sandwich_cov`
estimates it from data with a uniform-kernel estimate of
``H = f_u(xi) J``; :func:`theoretical_asd` evaluates it at known parameter
values by averaging over one long simulated path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy import stats

from .errors import DimensionError, DomainError, SingularHessianError
from .innovations import density_at_quantile
from .model import GenerativeParams, ModelOrders, QuantileParams
from .quantile_filter import as_series, filter_with_gradient
from .simulate import SimConfig, simulate_path

COND_MAX = 1e12
EIG_FLOOR = 1e-12


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _check_free(orders: ModelOrders, free: Sequence[str] | None) -> np.ndarray:
    names = orders.names()
    if free is None:
        return np.ones(len(names), dtype=bool)
    unknown = set(free) - set(names)
    if unknown:
        raise DimensionError(f"unknown parameters {sorted(unknown)}")
    return np.array([n in set(free) for n in names])


def psd_inverse(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    """
    Inverse of a symmetric PSD matrix by eigendecomposition.

    Eigenvalues are floored at ``1e-12 * trace``.  A condition number above
    1e12 raises :class:`SingularHessianError`.
    """
    w, U = np.linalg.eigh(_sym(a))
    top = w.max() if w.size else 0.0
    if not top > 0 or w.min() <= 0 or top / w.min() > COND_MAX:
        cond = np.inf if not w.min() > 0 else top / w.min()
        raise SingularHessianError(f"{what} is numerically singular (condition {cond:.3g}); try a larger bandwidth")
    w = np.maximum(w, EIG_FLOOR * w.sum())
    return _sym((U / w) @ U.T)


@dataclass(frozen=True)
class CovarianceEstimate:
    """
    Sandwich covariance ``tau (1 - tau) H^-1 V H^-1`` of ``sqrt(n) theta_hat``.

    Matrices cover the parameters in :attr:`names` only (held-fixed
    parameters are dropped).
    """

    V_hat: np.ndarray
    H_hat: np.ndarray
    sandwich: np.ndarray
    bandwidth: float
    bin_fraction: float
    n: int
    names: tuple[str, ...]

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.sandwich), 0.0, None) / self.n)

    def full_se(self, orders: ModelOrders) -> np.ndarray:
        out = np.full(orders.dim, np.nan)
        idx = [orders.names().index(k) for k in self.names]
        out[idx] = self.se
        return out

    def full_cov(self, orders: ModelOrders) -> np.ndarray:
        """Covariance of ``theta_hat`` (already divided by ``n``), NaN on fixed rows."""
        out = np.full((orders.dim, orders.dim), np.nan)
        idx = np.array([orders.names().index(k) for k in self.names])
        out[np.ix_(idx, idx)] = self.sandwich / self.n
        return out


def default_bandwidth(resid: np.ndarray, scale: float = 1.0) -> float:
    """``scale * sd(resid) * n^(-1/3)``."""
    return float(scale * np.std(resid, ddof=1) * resid.size ** (-1.0 / 3.0))


def sandwich_cov(
    Y,
    theta_hat: QuantileParams,
    tau: float,
    orders: ModelOrders | None = None,
    c_n: float | None = None,
    bandwidth_scale: float = 1.0,
    free: Sequence[str] | None = None,
) -> CovarianceEstimate:
    """
    Sandwich covariance estimate at ``theta_hat``.

    Parameters
    ----------
    Y : array_like
    theta_hat : QuantileParams
    tau : float
    orders : ModelOrders, optional
    c_n : float, optional
        Bandwidth; default :func:`default_bandwidth` times ``bandwidth_scale``.
    free : sequence of str, optional
        Restrict to these parameters (the rest are treated as known).

    Raises
    ------
    SingularHessianError
        If ``H_hat`` has condition number above 1e12, typically because too
        few residuals fall inside the bandwidth.
    """
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    orders = orders or theta_hat.orders
    y = as_series(Y)
    mask = _check_free(orders, free)
    d = int(mask.sum())
    if y.size <= 10 * d:
        raise DomainError(f"need more than {10 * d} observations, got {y.size}")
    st = filter_with_gradient(y, theta_hat, orders)
    g = st.grad_q[:, mask]
    r = y - st.q_tilde
    c = default_bandwidth(r, bandwidth_scale) if c_n is None else float(c_n)
    if not c > 0:
        raise DomainError("bandwidth must be positive")
    n = y.size
    V = _sym(g.T @ g / n)
    inside = np.abs(r) < c
    gi = g[inside]
    H = _sym(gi.T @ gi / (2.0 * c * n))
    Hinv = psd_inverse(H, "H_hat")
    S = _sym(tau * (1.0 - tau) * Hinv @ V @ Hinv)
    names = tuple(np.array(orders.names())[mask])
    return CovarianceEstimate(V, H, S, c, float(inside.mean()), n, names)


@dataclass(frozen=True)
class AsymptoticCov:
    """Asymptotic covariance at known parameters; ``asd = sqrt(diag(cov) / n)``."""

    J: np.ndarray
    V: np.ndarray
    cov: np.ndarray
    asd: np.ndarray
    mc_se: np.ndarray
    n: int
    tau: float
    names: tuple[str, ...]
    density: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": 1,
            "kind": "asd",
            "tau": self.tau,
            "n": self.n,
            "names": list(self.names),
            "density": self.density,
            "J": self.J.tolist(),
            "V": self.V.tolist(),
            "cov": self.cov.tolist(),
            "asd": self.asd.tolist(),
            "mc_se": self.mc_se.tolist(),
        }


def _assemble(g: np.ndarray, w: np.ndarray, pref: float, n: int):
    m = g.shape[0]
    J = _sym((g * w[:, None]).T @ g / m)
    V = _sym(g.T @ g / m)
    Jinv = psd_inverse(J, "J")
    cov = _sym(pref * Jinv @ V @ Jinv)
    return J, V, cov, np.sqrt(np.clip(np.diag(cov), 0.0, None) / n)


def theoretical_asd(
    gen: GenerativeParams,
    tau: float,
    theta_star: QuantileParams | None = None,
    mc_path_len: int = 10**5,
    seed: int | tuple[int, ...] = 0,
    n: int = 2000,
    burnin: int = 1000,
    discard: int = 1000,
    batches: int = 20,
    free: Sequence[str] | None = None,
) -> AsymptoticCov:
    """
    Asymptotic standard deviations for sample size ``n`` at the true ``theta(tau)``.

    ``J`` and ``V`` are averages over ``mc_path_len`` points of one simulated
    path, after dropping the first ``discard`` filter outputs so the
    truncated filter has forgotten its starting values.  ``mc_se`` is the
    batch-means standard error of each ASD entry.
    """
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    theta = theta_star if theta_star is not None else gen.quantile_params(tau)
    orders = gen.orders
    mask = _check_free(orders, free)
    path = simulate_path(SimConfig(gen, mc_path_len + discard, burnin=burnin, seed=seed))
    st = filter_with_gradient(path.Y, theta, orders)
    g = st.grad_q[discard:, mask]
    w = 1.0 / np.sqrt(st.h2_tilde[discard:])
    f = density_at_quantile(gen.innovation, tau)
    pref = tau * (1.0 - tau) / (f * f)
    J, V, cov, asd = _assemble(g, w, pref, n)
    reps = []
    for idx in np.array_split(np.arange(g.shape[0]), batches):
        try:
            reps.append(_assemble(g[idx], w[idx], pref, n)[3])
        except SingularHessianError:
            continue
    mc_se = np.std(reps, axis=0, ddof=1) / np.sqrt(len(reps)) if len(reps) > 1 else np.full(asd.size, np.nan)
    names = tuple(np.array(orders.names())[mask])
    return AsymptoticCov(J, V, cov, asd, mc_se, n, float(tau), names, f)


@dataclass(frozen=True)
class Interval:
    name: str
    estimate: float
    se: float
    lo: float
    hi: float


def confidence_intervals(fit, cov: CovarianceEstimate | None = None, level: float = 0.9) -> list[Interval]:
    """Normal intervals ``theta_i +- z_{(1+level)/2} se_i`` for every parameter of ``fit``."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    orders = fit.orders
    if cov is not None:
        se = cov.full_se(orders)
    elif fit.se is not None:
        se = np.asarray(fit.se, dtype=float)
    else:
        raise DomainError("fit carries no standard errors; pass a covariance estimate")
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    est = fit.theta_hat.to_vector()
    return [Interval(k, float(e), float(s), float(e - z * s), float(e + z * s)) for k, e, s in zip(orders.names(), est, se)]


__all__ = [
    "AsymptoticCov",
    "CovarianceEstimate",
    "Interval",
    "confidence_intervals",
    "default_bandwidth",
    "psd_inverse",
    "sandwich_cov",
    "theoretical_asd",
]
