"""
Quantile regression and Gaussian QML estimation.

Both estimators minimize with a derivative-free Nelder-Mead simplex in an
unconstrained coordinate system: ``gamma = exp(s)`` and
``beta_j = B exp(b_j) / (1 + sum_k exp(b_k))`` with ``B`` the bound on
``sum beta``.  Points outside the remaining box constraints or with MA roots
on or inside the unit circle evaluate to ``+inf``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConstraintError, DimensionError, DomainError, OptimizationInitError
from .innovations import InnovationSpec
from .kernels import backend
from .model import GenerativeParams, ModelOrders, QuantileParams, psi_radius, validate
from .quantile_filter import as_series, split_vector

log = logging.getLogger(__name__)

SNAP_ZERO = 1e-8
R_RELTOL = float(np.sqrt(np.finfo(float).eps))
R_BIG = 1.0e35


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    return tau


def check_loss(u, tau: float):
    """Check (pinball) loss ``rho_tau(u) = u (tau - 1{u < 0})``."""
    tau = _check_tau(tau)
    u = np.asarray(u, dtype=float)
    out = np.where(u < 0, u * (tau - 1.0), u * tau)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class Bounds:
    """Box part of the parameter space (the simplex part is built into the transform)."""

    xi_max: float = 50.0
    coef_max: float = 10.0
    gamma_max: float = 10.0
    beta_sum_max: float = 0.999

    def contains(self, vec: np.ndarray, orders: ModelOrders, with_xi: bool = True) -> bool:
        off = 0 if with_xi else 1
        if with_xi and abs(vec[0]) > self.xi_max:
            return False
        P, Q, q, p = orders.P, orders.Q, orders.q, orders.p
        a = 1 - off
        arma = vec[a : a + 1 + P + Q]
        if np.any(np.abs(arma) > self.coef_max):
            return False
        gam = vec[a + 1 + P + Q : a + 1 + P + Q + 2 * q]
        if np.any(gam < 0) or np.any(gam > self.gamma_max):
            return False
        beta = vec[a + 1 + P + Q + 2 * q :]
        if np.any(beta < 0) or beta.sum() >= min(self.beta_sum_max, 1.0) + 1e-15:
            return False
        if Q == 1:
            if abs(arma[1 + P]) >= 1.0 - 1e-8:
                return False
        elif Q > 1 and psi_radius(arma[1 + P :]) >= 1.0 - 1e-8:
            return False
        if abs(1.0 - arma[1 : 1 + P].sum()) < 1e-10:
            return False
        return True


class ParamTransform:
    """Map between the parameter vector and unconstrained optimizer coordinates."""

    def __init__(self, orders: ModelOrders, bounds: Bounds = Bounds(), with_xi: bool = True, floor: float = 1e-6):
        self.orders = orders
        self.bounds = bounds
        self.with_xi = with_xi
        self.floor = floor
        a = int(with_xi) + orders.n_arma
        self._g = slice(a, a + 2 * orders.q)
        self._b = slice(a + 2 * orders.q, a + 2 * orders.q + orders.p)
        self.size = a + 2 * orders.q + orders.p

    def to_free(self, vec: np.ndarray) -> np.ndarray:
        z = np.array(vec, dtype=float)
        z[self._g] = np.log(np.maximum(z[self._g], self.floor))
        if self.orders.p:
            r = np.maximum(z[self._b], self.floor) / self.bounds.beta_sum_max
            slack = 1.0 - r.sum()
            if slack <= 0:
                r = r / (r.sum() + self.floor)
                slack = 1.0 - r.sum()
            z[self._b] = np.log(r / slack)
        return z

    def from_free(self, z: np.ndarray) -> np.ndarray:
        vec = np.array(z, dtype=float)
        with np.errstate(over="ignore"):
            vec[self._g] = np.exp(vec[self._g])
            if self.orders.p:
                e = np.exp(vec[self._b])
                vec[self._b] = self.bounds.beta_sum_max * e / (1.0 + e.sum())
                if not np.all(np.isfinite(vec[self._b])):
                    vec[self._b] = np.nan
        return vec


@dataclass
class Objective:
    """
    Quantile regression objective ``n^-1 sum rho_tau(Y_t - q_t(theta))``.

    Calling the object with a full parameter vector returns the objective,
    or ``+inf`` (and increments :attr:`n_invalid`) outside the parameter
    space.
    """

    tau: float
    Y: np.ndarray
    orders: ModelOrders
    bounds: Bounds = field(default_factory=Bounds)
    n_invalid: int = 0

    def __post_init__(self) -> None:
        self.tau = _check_tau(self.tau)
        self.Y = as_series(self.Y)
        self._eps = np.empty(self.Y.size)
        self._h2 = np.empty(self.Y.size)

    def __call__(self, vec: np.ndarray) -> float:
        if not (np.all(np.isfinite(vec)) and self.bounds.contains(vec, self.orders)):
            self.n_invalid += 1
            return np.inf
        xi, phi, psi, g1, g2, beta = split_vector(vec, self.orders)
        return backend.qr_loss(self.Y, xi, phi, psi, g1, g2, beta, self.tau, self._eps, self._h2)


def objective_value(obj: Objective, theta: QuantileParams) -> float:
    if theta.orders != obj.orders:
        raise DimensionError(f"parameter orders {theta.orders} do not match objective orders {obj.orders}")
    return obj(theta.to_vector())


@dataclass(frozen=True)
class NMOptions:
    """
    Nelder-Mead settings.

    ``method="scipy"`` runs :func:`minimize_nm` (scipy's simplex with
    restarts); ``maxiter`` defaults to ``5000 * dim`` and ``maxfev``
    (objective evaluations per run) to ``2 * maxiter``.  ``method="nmmin"``
    runs :func:`nmmin`, the simplex variant of R's ``optim``, with ``ftol``
    as its relative tolerance and ``maxfev`` (default 500) as its budget.
    ``space`` selects the coordinates the simplex moves in: ``"transformed"``
    (log gamma, logistic beta) or ``"raw"`` parameters.
    """

    ftol: float = 1e-10
    xtol: float = 1e-8
    maxiter: int | None = None
    maxfev: int | None = None
    restarts: int = 3
    init_step: float = 0.1
    inflate: float = 2.0
    fixed: tuple[tuple[str, float], ...] = ()
    method: str = "scipy"
    space: str = "transformed"

    def __post_init__(self) -> None:
        if self.method not in ("scipy", "nmmin"):
            raise DomainError(f"unknown optimizer method {self.method!r}")
        if self.space not in ("transformed", "raw"):
            raise DomainError(f"unknown optimizer space {self.space!r}")

    @classmethod
    def r_optim(cls) -> "NMOptions":
        """Defaults of R's ``optim(method = "Nelder-Mead")`` on the raw parameters."""
        return cls(ftol=R_RELTOL, maxfev=500, restarts=0, method="nmmin", space="raw")

    def to_dict(self) -> dict[str, Any]:
        d = {k: getattr(self, k) for k in ("method", "space", "ftol", "xtol", "maxiter", "maxfev", "restarts", "init_step", "inflate")}
        d["fixed"] = dict(self.fixed)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "NMOptions":
        d = dict(d)
        fixed = tuple(sorted(dict(d.pop("fixed", {})).items()))
        return cls(fixed=fixed, **d)

    def fixed_dict(self) -> dict[str, float]:
        return dict(self.fixed)


@dataclass(frozen=True)
class NMResult:
    x: np.ndarray
    fun: float
    nit: int
    nfev: int
    converged: bool
    restarts_used: int


def nmmin(
    fun: Callable[[np.ndarray], float],
    x0: Sequence[float],
    maxfev: int = 500,
    reltol: float = R_RELTOL,
    abstol: float = -np.inf,
    alpha: float = 1.0,
    beta: float = 0.5,
    gamma: float = 2.0,
) -> NMResult:
    """
    Nelder-Mead as implemented by R's ``optim``.

    The initial simplex steps every coordinate by ``0.1 * max|x0_i|``.  The
    search stops when the spread of function values is at most
    ``reltol * (|f(x0)| + reltol)``, after a shrink that fails to reduce the
    simplex, or once more than ``maxfev`` evaluations have been spent.
    Non-finite values are replaced by 1e35.  ``converged`` is False only
    when the budget ran out.
    """
    x0 = np.array(x0, dtype=float)
    n = x0.size

    def f(x: np.ndarray) -> float:
        v = float(fun(x))
        return v if np.isfinite(v) else R_BIG

    f0 = float(fun(x0))
    if not np.isfinite(f0):
        raise OptimizationInitError("objective is not finite at the initial value")
    if maxfev <= 0:
        return NMResult(x0, f0, 0, 0, True, 0)
    convtol = reltol * (abs(f0) + reltol)
    step = max(0.1 * float(np.max(np.abs(x0))), 0.0) or 0.1
    P = np.tile(x0, (n + 1, 1))
    fv = np.empty(n + 1)
    fv[0] = f0
    size = 0.0
    for j in range(1, n + 1):
        trystep = step
        while P[j, j - 1] == x0[j - 1]:
            P[j, j - 1] = x0[j - 1] + trystep
            trystep *= 10.0
        size += trystep
    oldsize = size
    calcvert = True
    funcount = 1
    L = 0
    nit = 0
    while True:
        if calcvert:
            for j in range(n + 1):
                if j != L:
                    fv[j] = f(P[j])
                    funcount += 1
            calcvert = False
        VL = VH = fv[L]
        H = L
        for j in range(n + 1):
            if j != L:
                if fv[j] < VL:
                    L, VL = j, fv[j]
                if fv[j] > VH:
                    H, VH = j, fv[j]
        if VH <= VL + convtol or VL <= abstol:
            break
        nit += 1
        centroid = (P.sum(axis=0) - P[H]) / n
        xr = (1.0 + alpha) * centroid - alpha * P[H]
        VR = f(xr)
        funcount += 1
        if VR < VL:
            xe = gamma * xr + (1.0 - gamma) * centroid
            fe = f(xe)
            funcount += 1
            if fe < VR:
                P[H], fv[H] = xe, fe
            else:
                P[H], fv[H] = xr, VR
        else:
            if VR < VH:
                P[H], fv[H] = xr, VR
            xc = (1.0 - beta) * P[H] + beta * centroid
            fc = f(xc)
            funcount += 1
            if fc < fv[H]:
                P[H], fv[H] = xc, fc
            elif VR >= VH:
                calcvert = True
                P = beta * (P - P[L]) + P[L]
                size = float(np.abs(P - P[L]).sum())
                if size < oldsize:
                    oldsize = size
                else:
                    break
        if funcount > maxfev:
            break
    return NMResult(P[L].copy(), float(fv[L]), nit, funcount, funcount <= maxfev, 0)


def minimize_nm(fun: Callable[[np.ndarray], float], x0: Sequence[float], opts: NMOptions = NMOptions()) -> NMResult:
    """
    Minimize ``fun`` from ``x0`` with restarted Nelder-Mead.

    A run stops when the simplex spread in x is below ``xtol`` and in f is
    below ``ftol``.  Each restart rebuilds the simplex around the incumbent
    with ``inflate`` times the initial step.  Restarts stop early once one
    fails to improve by more than ``ftol``.
    """
    x0 = np.asarray(x0, dtype=float)
    d = x0.size
    maxiter = opts.maxiter or 5000 * d
    maxfev = opts.maxfev or 2 * maxiter

    def simplex(center: np.ndarray, step: float) -> np.ndarray:
        return np.vstack([center, center + step * np.eye(d)])

    best_x, best_f = x0, float(fun(x0))
    sim = simplex(x0, opts.init_step)
    fvals = [best_f] + [float(fun(v)) for v in sim[1:]]
    if not np.any(np.isfinite(fvals)):
        raise OptimizationInitError("all vertices of the initial simplex are outside the parameter space")
    nit = nfev = 0
    converged = False
    restarts_used = 0
    step = opts.init_step
    for attempt in range(opts.restarts + 1):
        if attempt:
            step *= opts.inflate
            sim = simplex(best_x, step)
            restarts_used += 1
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(
                fun,
                best_x,
                method="Nelder-Mead",
                options={"initial_simplex": sim, "xatol": opts.xtol, "fatol": opts.ftol, "maxiter": maxiter, "maxfev": maxfev},
            )
        nit += int(res.nit)
        nfev += int(res.nfev)
        converged = bool(res.status == 0)
        improved = best_f - float(res.fun)
        if float(res.fun) < best_f:
            best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
        if attempt and improved <= opts.ftol:
            break
    return NMResult(best_x, best_f, nit, nfev, converged, restarts_used)


@dataclass(frozen=True)
class FitResult:
    """Quantile regression fit at one level ``tau``."""

    theta_hat: QuantileParams
    objective_value: float
    iterations: int
    converged: bool
    restarts_used: int
    xi_near_zero_warning: bool
    tau: float
    init_objective: float = np.nan
    nfev: int = 0
    se: np.ndarray | None = None
    cov: np.ndarray | None = None
    bandwidth: float | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def orders(self) -> ModelOrders:
        return self.theta_hat.orders

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "schema": 1,
            "kind": "qr_fit",
            "tau": self.tau,
            "orders": str(self.orders),
            "theta_hat": self.theta_hat.to_dict(),
            "objective_value": self.objective_value,
            "init_objective": self.init_objective,
            "iterations": self.iterations,
            "nfev": self.nfev,
            "converged": self.converged,
            "restarts_used": self.restarts_used,
            "xi_near_zero_warning": self.xi_near_zero_warning,
        }
        if self.se is not None:
            out["se"] = dict(zip(self.orders.names(), map(float, self.se)))
            out["bandwidth"] = self.bandwidth
        if self.cov is not None:
            out["cov"] = np.asarray(self.cov).tolist()
        if self.extra:
            out["extra"] = self.extra
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FitResult":
        theta = QuantileParams.from_dict(d["theta_hat"])
        if "orders" in d and ModelOrders.parse(d["orders"]) != theta.orders:
            raise DimensionError("orders field disagrees with theta_hat keys")
        se = d.get("se")
        names = theta.orders.names()
        return cls(
            theta_hat=theta,
            objective_value=float(d["objective_value"]),
            iterations=int(d.get("iterations", 0)),
            converged=bool(d.get("converged", False)),
            restarts_used=int(d.get("restarts_used", 0)),
            xi_near_zero_warning=bool(d.get("xi_near_zero_warning", False)),
            tau=float(d["tau"]),
            init_objective=float(d.get("init_objective", np.nan)),
            nfev=int(d.get("nfev", 0)),
            se=None if se is None else np.array([se[k] for k in names]),
            cov=None if d.get("cov") is None else np.array(d["cov"]),
            bandwidth=d.get("bandwidth"),
            extra=dict(d.get("extra", {})),
        )


def _run_optimizer(fun, x0, opts: NMOptions) -> NMResult:
    if opts.method == "nmmin":
        return nmmin(fun, x0, maxfev=opts.maxfev or 500, reltol=opts.ftol)
    return minimize_nm(fun, x0, opts)


def _free_mask(orders: ModelOrders, fixed: dict[str, float]) -> np.ndarray:
    names = orders.names()
    unknown = set(fixed) - set(names)
    if unknown:
        raise DimensionError(f"cannot fix unknown parameters {sorted(unknown)}")
    return np.array([n not in fixed for n in names])


def _snap_boundary(vec: np.ndarray, orders: ModelOrders) -> np.ndarray:
    out = vec.copy()
    sl = orders.slices()
    for key in ("gamma1", "gamma2", "beta"):
        block = out[sl[key]]
        block[block < SNAP_ZERO] = 0.0
        out[sl[key]] = block
    return out


def _constant_quantile(Y: np.ndarray, tau: float) -> float:
    """Exact minimizer of ``sum rho_tau(Y_t - c)``: the inverted-CDF order statistic."""
    return float(np.quantile(Y, tau, method="inverted_cdf"))


def nelder_mead(obj: Objective, init: QuantileParams, opts: NMOptions = NMOptions()) -> FitResult:
    """
    Minimize the quantile regression objective starting from ``init``.

    Parameters listed in ``opts.fixed`` are held at the given values.  With
    all orders zero the conditional quantile is the constant
    ``phi_0 + xi`` and the fit is completed exactly: the free one of the two
    is set so the constant equals the inverted-CDF empirical quantile
    ``Y_(ceil(n tau))``.
    """
    orders = obj.orders
    if init.orders != orders:
        raise DimensionError(f"initial value orders {init.orders} do not match objective orders {orders}")
    fixed = opts.fixed_dict()
    free = _free_mask(orders, fixed)
    base = init.to_vector()
    names = orders.names()
    for k, v in fixed.items():
        base[names.index(k)] = v
    f_init = obj(base)
    if not np.isfinite(f_init):
        report = validate(QuantileParams.from_vector(base, orders))
        raise ConstraintError(f"initial value is outside the parameter space: {report.reason or 'bounds'}")
    tr = ParamTransform(orders, obj.bounds)
    raw = opts.space == "raw"
    z_full = base.copy() if raw else tr.to_free(base)

    def assemble(zf: np.ndarray) -> np.ndarray:
        z = z_full.copy()
        z[free] = zf
        return z if raw else tr.from_free(z)

    def fun(zf: np.ndarray) -> float:
        return obj(assemble(zf))

    if free.any():
        nm = _run_optimizer(fun, z_full[free], opts)
        vec = assemble(nm.x)
        # to_free clips gamma/beta at the floor; never return worse than init
        if obj(vec) > f_init:
            vec = base
    else:
        nm = NMResult(z_full[free], f_init, 0, 0, True, 0)
        vec = base
    if orders.dim == 2 and free.any():
        c = _constant_quantile(obj.Y, obj.tau)
        if free[0]:
            vec[0] = c - vec[1]
        else:
            vec[1] = c - vec[0]
    f_hat = obj(vec)
    snapped = _snap_boundary(vec, orders)
    f_snap = obj(snapped)
    if f_snap <= f_hat + 1e-12 and f_snap <= f_init + 1e-12:
        vec, f_hat = snapped, f_snap
    return FitResult(
        theta_hat=QuantileParams.from_vector(vec, orders),
        objective_value=float(f_hat),
        iterations=nm.nit,
        converged=nm.converged,
        restarts_used=nm.restarts_used,
        xi_near_zero_warning=False,
        tau=obj.tau,
        init_objective=float(f_init),
        nfev=nm.nfev,
    )


# -- Gaussian QML ---------------------------------------------------------


@dataclass(frozen=True)
class QMLEResult:
    """
    Gaussian quasi-maximum likelihood fit of the scale-normalized model.

    ``se`` is ordered as ``orders.names(with_xi=False) + ["omega"]``.
    """

    gen: GenerativeParams
    se: np.ndarray
    cov: np.ndarray
    nll: float
    converged: bool
    iterations: int
    std_resid: np.ndarray

    @property
    def orders(self) -> ModelOrders:
        return self.gen.orders

    @property
    def omega(self) -> float:
        return self.gen.omega

    def names(self) -> list[str]:
        return self.orders.names(with_xi=False) + ["omega"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": 1,
            "kind": "qmle_fit",
            "orders": str(self.orders),
            "params": self.gen.model.to_dict(self.omega) | {},
            "se": dict(zip(self.names(), map(float, self.se))),
            "nll": self.nll,
            "converged": self.converged,
            "iterations": self.iterations,
        }


class _QMLEObjective:
    """Profile Gaussian negative log-likelihood over the model block."""

    def __init__(self, Y: np.ndarray, orders: ModelOrders, bounds: Bounds):
        self.Y = Y
        self.orders = orders
        self.bounds = bounds
        self._eps = np.empty(Y.size)
        self._h2 = np.empty(Y.size)

    def __call__(self, mvec: np.ndarray) -> float:
        if not (np.all(np.isfinite(mvec)) and self.bounds.contains(mvec, self.orders, with_xi=False)):
            return np.inf
        _, phi, psi, g1, g2, beta = split_vector(np.concatenate(([0.0], mvec)), self.orders)
        slog, ssq = backend.qmle_terms(self.Y, phi, psi, g1, g2, beta, self._eps, self._h2)
        n = self.Y.size
        if not ssq > 0:
            return np.inf
        return float(np.log(ssq / n) + slog / n + 1.0)


def _raw_gradient(y: np.ndarray, vec: np.ndarray, orders: ModelOrders):
    n = y.size
    eps, h2, q = np.empty(n), np.empty(n), np.empty(n)
    deps = np.empty((n, orders.n_arma))
    dh2 = np.empty((n, orders.n_model))
    dq = np.empty((n, orders.dim))
    backend.filter_gradient(y, *split_vector(vec, orders), eps, h2, q, deps, dh2, dq)
    return eps, h2, deps, dh2, dq


def qmle_scores(y: np.ndarray, mvec: np.ndarray, omega: float, orders: ModelOrders) -> np.ndarray:
    """Per-observation scores of the Gaussian log-likelihood in ``(model, omega)``."""
    eps, h2, deps, dh2, _ = _raw_gradient(y, np.concatenate(([0.0], mvec)), orders)
    na = orders.n_arma
    r = eps * eps / (omega * h2)
    s = np.empty((y.size, orders.n_model + 1))
    s[:, : orders.n_model] = -0.5 * (dh2 / h2[:, None]) * (1.0 - r)[:, None]
    s[:, :na] -= (eps / (omega * h2))[:, None] * deps
    s[:, -1] = -0.5 * (1.0 - r) / omega
    return s


def _qmle_sandwich(y: np.ndarray, mvec: np.ndarray, omega: float, orders: ModelOrders) -> np.ndarray:
    params = np.concatenate((mvec, [omega]))
    k = params.size
    n = y.size

    def mean_score(pv: np.ndarray) -> np.ndarray:
        return qmle_scores(y, pv[:-1], pv[-1], orders).mean(axis=0)

    A = np.empty((k, k))
    for i in range(k):
        h = 1e-5 * (1.0 + abs(params[i]))
        up, dn = params.copy(), params.copy()
        up[i] += h
        dn[i] -= h
        A[:, i] = (mean_score(up) - mean_score(dn)) / (2.0 * h)
    A = 0.5 * (A + A.T)
    s = qmle_scores(y, mvec, omega, orders)
    B = s.T @ s / n
    Ainv = np.linalg.pinv(A)
    return Ainv @ B @ Ainv / n


def _qmle_starts(y: np.ndarray, orders: ModelOrders) -> list[np.ndarray]:
    P, Q, p, q = orders.P, orders.Q, orders.p, orders.q
    phi = np.zeros(P)
    if P:
        X = np.column_stack([np.ones(y.size - P)] + [y[P - j : y.size - j] for j in range(1, P + 1)])
        coef = np.linalg.lstsq(X, y[P:], rcond=None)[0]
        phi = coef[1:]
        if abs(1 - phi.sum()) < 1e-3 or np.any(np.abs(phi) >= 1):
            phi = np.zeros(P)
    phi0 = y.mean() * (1.0 - phi.sum())
    arma = np.concatenate(([phi0], phi, np.zeros(Q)))
    if not orders.has_scale:
        return [arma]
    s2 = y.var()
    starts = []
    for btot in ((0.5, 0.75, 0.9) if p else (0.0,)):
        alpha = 0.1 if p else 0.5
        omega0 = s2 * max(1.0 - alpha - btot, 0.05)
        g = np.full(2 * q, alpha / (max(q, 1) * omega0))
        starts.append(np.concatenate((arma, g, np.full(p, btot / max(p, 1)))))
    return starts


def qmle_fit(Y, orders: ModelOrders, opts: NMOptions = NMOptions(), bounds: Bounds = Bounds(), init: np.ndarray | None = None) -> QMLEResult:
    """
    Gaussian QMLE of ``(phi, psi, gamma1, gamma2, beta, omega)``.

    ``omega`` is profiled out as ``mean(eps_t^2 / h_t^2)``.  Standard
    errors come from the sandwich ``A^-1 B A^-1 / n`` with ``B`` the outer
    product of analytic scores and ``A`` a central-difference Jacobian of
    the mean score.
    """
    y = as_series(Y)
    k = orders.n_model + 1
    if y.size <= 10 * k:
        raise DomainError(f"need more than {10 * k} observations for {k} parameters, got {y.size}")
    obj = _QMLEObjective(y, orders, bounds)
    starts = [np.asarray(init, dtype=float)] if init is not None else _qmle_starts(y, orders)
    vals = [obj(s) for s in starts]
    if not np.any(np.isfinite(vals)):
        raise OptimizationInitError("no QML starting value is inside the parameter space")
    start = starts[int(np.argmin(vals))]
    tr = ParamTransform(orders, bounds, with_xi=False)
    nm = minimize_nm(lambda z: obj(tr.from_free(z)), tr.to_free(start), opts)
    mvec = tr.from_free(nm.x)
    if obj(mvec) > min(vals):
        mvec = start
    snapped = _snap_boundary(np.concatenate(([0.0], mvec)), orders)[1:]
    if obj(snapped) <= obj(mvec) + 1e-12:
        mvec = snapped
    nll = obj(mvec)
    eps, h2 = obj._eps.copy(), obj._h2.copy()
    omega = float(np.mean(eps * eps / h2))
    cov = _qmle_sandwich(y, mvec, omega, orders)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    model = QuantileParams.from_vector(np.concatenate(([0.0], mvec)), orders)
    gen = GenerativeParams(model, InnovationSpec("normal", omega=omega))
    return QMLEResult(gen, se, cov, nll, nm.converged, nm.nit, eps / np.sqrt(h2))


# -- quantile regression entry point --------------------------------------


def qr_fit(
    Y,
    tau: float,
    orders: ModelOrders,
    init: QuantileParams | None = None,
    opts: NMOptions = NMOptions(),
    bounds: Bounds = Bounds(),
    qmle: QMLEResult | None = None,
    with_se: bool = True,
    bandwidth_scale: float = 1.0,
) -> FitResult:
    """
    Quantile regression estimate of ``theta(tau)``.

    Without ``init`` the Gaussian QML fit (``qmle``, computed when not
    supplied) seeds the model block and ``xi`` starts at the tau-quantile of
    the standardized QML residuals.  The warning flag is raised when
    ``|xi_hat|`` is below twice its sandwich standard error, where the scale
    parameters are not identified.
    """
    from .inference import sandwich_cov  # deferred: inference imports this module

    tau = _check_tau(tau)
    y = as_series(Y)
    extra: dict[str, Any] = {}
    if init is None:
        if qmle is None:
            qmle = qmle_fit(y, orders, opts, bounds)
        xi0 = float(np.quantile(qmle.std_resid, tau))
        init = qmle.gen.model.with_xi(xi0)
        extra["qmle_omega"] = qmle.omega
    obj = Objective(tau, y, orders, bounds)
    fit = nelder_mead(obj, init, opts)
    if not with_se:
        return replace(fit, extra=extra)
    free = tuple(n for n in orders.names() if n not in opts.fixed_dict())
    warn = True
    se = cov = None
    bw = None
    try:
        ce = sandwich_cov(y, fit.theta_hat, tau, orders, bandwidth_scale=bandwidth_scale, free=free)
    except Exception as exc:  # noqa: BLE001 - singular H etc.; the fit itself stands
        log.info("sandwich covariance unavailable: %s", exc)
        extra["se_error"] = str(exc)
    else:
        se, cov, bw = ce.full_se(orders), ce.full_cov(orders), ce.bandwidth
        if np.isfinite(se[0]):
            warn = bool(abs(fit.theta_hat.xi) < 2.0 * se[0])
        else:
            warn = False
    return replace(fit, xi_near_zero_warning=warn, se=se, cov=cov, bandwidth=bw, extra=extra)


__all__ = [
    "Bounds",
    "FitResult",
    "NMOptions",
    "NMResult",
    "Objective",
    "ParamTransform",
    "QMLEResult",
    "check_loss",
    "minimize_nm",
    "nelder_mead",
    "objective_value",
    "qmle_fit",
    "qmle_scores",
    "qr_fit",
]
