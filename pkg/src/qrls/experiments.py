"""
Monte-Carlo studies and quantile-grid fits.

Replication ``r`` draws its path from ``SeedSequence(seed, spawn_key=(r, a))``
where ``a`` counts resampling attempts after an explosive path, so results
do not depend on the number of worker processes or the order they finish.
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import DomainError, ExplosivePathError, InputError, QRLSError
from .estimation import FitResult, NMOptions, qmle_fit, qr_fit
from .inference import confidence_intervals, theoretical_asd
from .model import GenerativeParams, ModelOrders, simulation_design
from .simulate import SimConfig, simulate_path

log = logging.getLogger(__name__)

STATS = ("mean", "bias", "sd", "asd", "median_se", "coverage90", "rmse_qr", "rmse_qmle", "ratio")
MAX_ATTEMPTS = 10
FAILURE_WARN = 0.05


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: the argument, else ``QRLS_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("QRLS_THREADS", "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise InputError(f"QRLS_THREADS must be an integer, got {env!r}") from exc
        else:
            threads = 1
    if threads < 1:
        raise InputError("thread count must be >= 1")
    return threads


@dataclass(frozen=True)
class McStudyConfig:
    """Settings of a Monte-Carlo study."""

    design: GenerativeParams = field(default_factory=simulation_design)
    taus: tuple[float, ...] = (0.05, 0.95)
    n: int = 2000
    reps: int = 200
    seed: int = 0
    compare_qmle: bool = True
    burnin: int = 1000
    with_se: bool = True
    asd_path_len: int = 10**5
    optimizer: NMOptions = field(default_factory=NMOptions)
    exclude_nonconverged: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        if isinstance(self.optimizer, dict):
            object.__setattr__(self, "optimizer", NMOptions.from_dict(self.optimizer))
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if not all(0.0 < t < 1.0 for t in self.taus):
            raise DomainError(f"levels must lie in (0, 1), got {self.taus}")
        if self.n < 50:
            raise DomainError("n must be at least 50")

    @property
    def orders(self) -> ModelOrders:
        return self.design.orders

    def to_dict(self) -> dict[str, Any]:
        return {
            "design": self.design.to_dict(),
            "orders": str(self.orders),
            "taus": list(self.taus),
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "compare_qmle": self.compare_qmle,
            "burnin": self.burnin,
            "with_se": self.with_se,
            "asd_path_len": self.asd_path_len,
            "optimizer": self.optimizer.to_dict(),
            "exclude_nonconverged": self.exclude_nonconverged,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "McStudyConfig":
        d = dict(d)
        design = d.pop("design", "a")
        gen = simulation_design(design) if isinstance(design, str) else GenerativeParams.from_dict(design)
        orders = d.pop("orders", None)
        if orders is not None and ModelOrders.parse(str(orders)) != gen.orders:
            raise InputError(f"orders {orders} do not match the design parameters {gen.orders}")
        known = {"taus", "n", "reps", "seed", "compare_qmle", "burnin", "with_se", "asd_path_len", "optimizer", "exclude_nonconverged"}
        extra = set(d) - known
        if extra:
            raise InputError(f"unknown config keys {sorted(extra)}")
        return cls(design=gen, **d)


@dataclass
class McTable:
    """Long-format table of ``(tau, param, stat) -> value``; ``None`` marks undefined cells."""

    rows: list[tuple[float, str, str, float | None]]
    metadata: dict[str, Any]

    def get(self, tau: float, param: str, stat: str) -> float | None:
        for t, p, s, v in self.rows:
            if abs(t - tau) < 1e-12 and p == param and s == stat:
                return v
        raise KeyError((tau, param, stat))

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau", "param", "stat", "value"])
            for t, p, s, v in self.rows:
                w.writerow([repr(t), p, s, "" if v is None else repr(float(v))])


@dataclass(frozen=True)
class _RepOutcome:
    rep: int
    attempts: int
    qr: dict[float, np.ndarray | None]
    se: dict[float, np.ndarray | None]
    qmle: np.ndarray | None
    errors: tuple[str, ...]


def _one_rep(args: tuple[McStudyConfig, int]) -> _RepOutcome:
    cfg, rep = args
    orders = cfg.orders
    path = None
    attempt = 0
    for attempt in range(MAX_ATTEMPTS):
        try:
            path = simulate_path(SimConfig(cfg.design, cfg.n, cfg.burnin, seed=(cfg.seed, rep, attempt)))
            break
        except ExplosivePathError:
            continue
    errors: list[str] = []
    nan = {t: None for t in cfg.taus}
    if path is None:
        return _RepOutcome(rep, attempt + 1, nan, dict(nan), None, ("explosive path",))
    try:
        qm = qmle_fit(path.Y, orders)
    except QRLSError as exc:
        return _RepOutcome(rep, attempt + 1, nan, dict(nan), None, (f"qmle: {exc}",))
    qr: dict[float, np.ndarray | None] = {}
    se: dict[float, np.ndarray | None] = {}
    for tau in cfg.taus:
        try:
            fit = qr_fit(path.Y, tau, orders, qmle=qm, opts=cfg.optimizer, with_se=cfg.with_se)
        except QRLSError as exc:
            errors.append(f"tau={tau}: {exc}")
            qr[tau] = se[tau] = None
            continue
        if not fit.converged and cfg.exclude_nonconverged:
            errors.append(f"tau={tau}: not converged")
            qr[tau] = se[tau] = None
            continue
        qr[tau] = fit.theta_hat.to_vector()
        se[tau] = fit.se
    return _RepOutcome(rep, attempt + 1, qr, se, qm.gen.model.to_vector()[1:], tuple(errors))


def _map(func, items: list, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * threads))))


def run_mc_study(cfg: McStudyConfig, threads: int | None = None) -> McTable:
    """
    Simulate, fit and summarize ``cfg.reps`` replications.

    For each level the table holds ``mean``, ``bias`` (mean minus truth),
    ``sd`` (sample SD, ``None`` with fewer than two fits), ``asd`` (from
    :func:`theoretical_asd`, independent of the replications),
    ``median_se`` and ``coverage90`` of the sandwich intervals and, when
    ``compare_qmle``, ``rmse_qr``, ``rmse_qmle`` and their ``ratio``
    ``rmse_qmle / rmse_qr`` for the parameters both estimators share.
    """
    threads = resolve_threads(threads)
    orders = cfg.orders
    names = orders.names()
    outcomes = _map(_one_rep, [(cfg, r) for r in range(cfg.reps)], threads)
    outcomes.sort(key=lambda o: o.rep)
    qm = [o.qmle for o in outcomes if o.qmle is not None]
    qm_arr = np.array(qm) if qm else np.empty((0, orders.n_model))
    rows: list[tuple[float, str, str, float | None]] = []
    per_tau: dict[str, Any] = {}
    for ti, tau in enumerate(cfg.taus):
        truth = cfg.design.quantile_params(tau).to_vector()
        est = np.array([o.qr[tau] for o in outcomes if o.qr[tau] is not None]).reshape(-1, orders.dim)
        ses = [o.se[tau] for o in outcomes if o.qr[tau] is not None and o.se[tau] is not None]
        asd = theoretical_asd(cfg.design, tau, mc_path_len=cfg.asd_path_len, seed=(cfg.seed, 1_000_000 + ti), n=cfg.n).asd
        k = est.shape[0]
        per_tau[repr(tau)] = {"fits": k, "failures": cfg.reps - k}
        mean = est.mean(axis=0) if k else np.full(orders.dim, np.nan)
        sd = est.std(axis=0, ddof=1) if k > 1 else None
        rmse_qr = np.sqrt(np.mean((est - truth) ** 2, axis=0)) if k else None
        if ses:
            S = np.array(ses)
            E = np.array([o.qr[tau] for o in outcomes if o.qr[tau] is not None and o.se[tau] is not None])
            with np.errstate(invalid="ignore"):
                cover = np.mean(np.abs(E - truth) <= 1.6448536269514722 * S, axis=0)
            med_se = np.nanmedian(S, axis=0)
        else:
            cover = med_se = None
        rmse_qm = np.sqrt(np.mean((qm_arr - truth[1:]) ** 2, axis=0)) if len(qm) else None
        for j, name in enumerate(names):
            cell = {
                "mean": float(mean[j]) if k else None,
                "bias": float(mean[j] - truth[j]) if k else None,
                "sd": None if sd is None else float(sd[j]),
                "asd": float(asd[j]),
                "median_se": None if med_se is None or not np.isfinite(med_se[j]) else float(med_se[j]),
                "coverage90": None if cover is None else float(cover[j]),
            }
            if cfg.compare_qmle:
                cell["rmse_qr"] = None if rmse_qr is None else float(rmse_qr[j])
                if j == 0 or rmse_qm is None:
                    cell["rmse_qmle"] = cell["ratio"] = None
                else:
                    cell["rmse_qmle"] = float(rmse_qm[j - 1])
                    cell["ratio"] = float(rmse_qm[j - 1] / rmse_qr[j]) if rmse_qr is not None and rmse_qr[j] > 0 else None
            for s in STATS:
                if s in cell:
                    rows.append((tau, name, s, cell[s]))
    total = cfg.reps * len(cfg.taus)
    failures = sum(v["failures"] for v in per_tau.values())
    meta = {
        "schema": 1,
        "kind": "mc_study",
        "config": cfg.to_dict(),
        "reps": cfg.reps,
        "n": cfg.n,
        "seed": cfg.seed,
        "failures": failures,
        "failure_rate": failures / total,
        "failure_warning": failures / total > FAILURE_WARN,
        "resampled_paths": sum(o.attempts - 1 for o in outcomes),
        "per_tau": per_tau,
        "errors": [f"rep {o.rep}: {e}" for o in outcomes for e in o.errors],
    }
    return McTable(rows, meta)


# -- quantile grid ---------------------------------------------------------


@dataclass(frozen=True)
class Stationarity:
    """``n^-1 sum (beta_1 + gamma_11 (u^+)^2 + gamma_21 (u^-)^2)`` from the QML fit."""

    value: float
    se: float


def stationarity_diagnostic(qm) -> Stationarity:
    """
    Plug-in estimate of ``E(beta_1 + gamma_11 (u^+)^2 + gamma_21 (u^-)^2)``.

    The standard error combines the QML sampling covariance of
    ``(gamma_11, gamma_21, beta_1)`` by the delta method with the sampling
    variance of the residual average.
    """
    orders = qm.orders
    if orders.p != 1 or orders.q != 1:
        raise DomainError("the diagnostic needs AGARCH(1,1) orders")
    u = qm.std_resid
    up2, um2 = np.maximum(u, 0.0) ** 2, np.maximum(-u, 0.0) ** 2
    m = qm.gen.model
    x = m.beta[0] + m.gamma1[0] * up2 + m.gamma2[0] * um2
    names = qm.names()
    idx = [names.index(k) for k in ("gamma11", "gamma21", "beta1")]
    grad = np.array([up2.mean(), um2.mean(), 1.0])
    C = qm.cov[np.ix_(idx, idx)]
    var = float(grad @ C @ grad) + float(x.var(ddof=1) / x.size)
    return Stationarity(float(x.mean()), float(np.sqrt(max(var, 0.0))))


@dataclass(frozen=True)
class TauGridResult:
    taus: tuple[float, ...]
    fits: tuple[FitResult | None, ...]
    errors: tuple[str | None, ...]
    stationarity: Stationarity | None
    level: float = 0.9

    def rows(self) -> list[dict[str, Any]]:
        out = []
        for tau, fit, err in zip(self.taus, self.fits, self.errors):
            if fit is None:
                out.append({"tau": tau, "param": "", "estimate": None, "se": None, "lo90": None, "hi90": None, "warning": f"error: {err}"})
                continue
            if fit.se is not None:
                ivs = confidence_intervals(fit, level=self.level)
            else:
                ivs = None
            for j, name in enumerate(fit.orders.names()):
                est = float(fit.theta_hat.to_vector()[j])
                if ivs is None or not np.isfinite(ivs[j].se):
                    se = lo = hi = None
                else:
                    se, lo, hi = ivs[j].se, ivs[j].lo, ivs[j].hi
                out.append({"tau": tau, "param": name, "estimate": est, "se": se, "lo90": lo, "hi90": hi, "warning": int(fit.xi_near_zero_warning)})
        return out

    def write_csv(self, path: str) -> None:
        cols = ["tau", "param", "estimate", "se", "lo90", "hi90", "warning"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows():
                w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in cols])


def _grid_one(args):
    y, tau, orders, qm, opts, bandwidth_scale, with_se = args
    try:
        return qr_fit(y, tau, orders, qmle=qm, opts=opts, with_se=with_se, bandwidth_scale=bandwidth_scale), None
    except QRLSError as exc:
        return None, str(exc)


def tau_grid_fit(
    Y,
    taus: Sequence[float],
    orders: ModelOrders,
    with_se: bool = True,
    bandwidth_scale: float = 1.0,
    opts: NMOptions = NMOptions(),
    threads: int | None = None,
) -> TauGridResult:
    """
    Fit every level in ``taus`` from one shared Gaussian QML warm start.

    A level whose fit fails is reported in :attr:`TauGridResult.errors` and
    the grid continues.
    """
    taus = tuple(float(t) for t in taus)
    if list(taus) != sorted(taus):
        raise DomainError("levels must be sorted")
    if not all(0.0 < t < 1.0 for t in taus):
        raise DomainError("levels must lie in (0, 1)")
    y = np.asarray(Y, dtype=float)
    qm = qmle_fit(y, orders, opts)
    res = _map(_grid_one, [(y, t, orders, qm, opts, bandwidth_scale, with_se) for t in taus], resolve_threads(threads))
    stat = stationarity_diagnostic(qm) if orders.p == 1 and orders.q == 1 else None
    return TauGridResult(taus, tuple(r[0] for r in res), tuple(r[1] for r in res), stat)


__all__ = [
    "McStudyConfig",
    "McTable",
    "Stationarity",
    "TauGridResult",
    "resolve_threads",
    "run_mc_study",
    "stationarity_diagnostic",
    "tau_grid_fit",
]
