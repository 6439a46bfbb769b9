"""
Command line interface.

Subcommands: ``simulate``, ``fit``, ``qmle``, ``asd``, ``mc-study`` and
``tau-grid``.  Every run that writes a file also writes
``<output>.manifest.json`` recording the configuration, seed, version and
wall time.  Exit status is 0 on success, 1 for invalid input and 2 for a
numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .errors import InputError, QRLSError, UserError
from .estimation import FitResult, NMOptions, qmle_fit, qr_fit
from .experiments import McStudyConfig, resolve_threads, run_mc_study, tau_grid_fit
from .inference import theoretical_asd
from .innovations import InnovationSpec
from .kernels import BACKEND_NAME
from .model import GenerativeParams, ModelOrders, QuantileParams, simulation_design
from .simulate import SimConfig, simulate_path

log = logging.getLogger("qrls")

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise InputError(f"{self.prog}: {message}")


# -- io helpers ------------------------------------------------------------


def _load_json(path: str) -> dict[str, Any]:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load_config(path: str) -> dict[str, Any]:
    if path.endswith(".toml"):
        try:
            with open(path, "rb") as fh:
                return tomllib.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise InputError(f"{path} is not valid TOML: {exc}") from exc
    return _load_json(path)


def _dump_json(obj: Any, path: str | None) -> None:
    text = json.dumps(obj, indent=2, allow_nan=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def read_series(path: str, log_returns_x100: bool = False) -> np.ndarray:
    """
    Read a series from CSV: the ``Y`` column if present, else the only column.

    With ``log_returns_x100`` the values are prices and ``100 diff(log p)``
    is returned.
    """
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows:
        raise InputError(f"{path} is empty")
    header = [c.strip() for c in rows[0]]
    try:
        float(header[0])
        has_header = False
    except ValueError:
        has_header = True
    if has_header:
        if "Y" in header:
            col = header.index("Y")
        elif len(header) == 1:
            col = 0
        else:
            raise InputError(f"{path} has several columns and none is named 'Y'")
        body = rows[1:]
    else:
        if len(header) != 1:
            raise InputError(f"{path} has several columns and no header")
        col, body = 0, rows
    try:
        y = np.array([float(r[col]) for r in body])
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: non-numeric or missing value ({exc})") from exc
    if log_returns_x100:
        if np.any(y <= 0):
            raise InputError("prices must be positive for --log-returns-x100")
        y = 100.0 * np.diff(np.log(y))
    return y


def _read_params(path: str | None, design: str | None, innovation: str | None) -> GenerativeParams:
    inn = None
    if innovation:
        inn = InnovationSpec.from_dict(json.loads(innovation) if innovation.lstrip().startswith("{") else _load_json(innovation))
    if path:
        return GenerativeParams.from_dict(_load_json(path), innovation=inn)
    gen = simulation_design(design or "a")
    if inn is not None:
        gen = GenerativeParams(gen.model, inn)
    return gen


def _parse_taus(text: str) -> list[float]:
    try:
        if ":" in text:
            lo, hi, step = (float(x) for x in text.split(":"))
            k = int(round((hi - lo) / step))
            return [round(lo + i * step, 12) for i in range(k + 1)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse levels {text!r}") from exc


def _manifest(args: argparse.Namespace, outputs: list[str], seed: Any, started: float, extra: dict | None = None) -> None:
    target = args.manifest or (outputs[0] + ".manifest.json" if outputs else None)
    if target is None:
        return
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "manifest")}
    man = {
        "schema": 1,
        "kind": "run_manifest",
        "subcommand": args.command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "backend": BACKEND_NAME,
        "wall_time": time.perf_counter() - started,
        "outputs": outputs,
    }
    if extra:
        man.update(extra)
    _dump_json(man, target)


# -- subcommands -----------------------------------------------------------


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    gen = _read_params(args.params, args.design, args.innovation)
    path = simulate_path(SimConfig(gen, args.n, args.burnin, seed=args.seed))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "Y", "eps", "h2"])
        for t in range(args.n):
            w.writerow([t + 1, repr(float(path.Y[t])), repr(float(path.eps[t])), repr(float(path.h2[t]))])
    finally:
        if args.out:
            fh.close()
    _manifest(args, [args.out] if args.out else [], args.seed, t0, {"params": gen.to_dict()})
    return 0


def _opts(args) -> NMOptions:
    return NMOptions(restarts=args.restarts)


def cmd_fit(args) -> int:
    t0 = time.perf_counter()
    orders = ModelOrders.parse(args.orders)
    y = read_series(args.input, args.log_returns_x100)
    init = QuantileParams.from_dict(_load_json(args.init)) if args.init else None
    fit = qr_fit(y, args.tau, orders, init=init, opts=_opts(args), with_se=args.with_se, bandwidth_scale=args.bandwidth_scale)
    out = fit.to_dict()
    out["n"] = int(y.size)
    _dump_json(out, args.out)
    _manifest(args, [args.out] if args.out else [], args.seed, t0)
    return 0


def cmd_qmle(args) -> int:
    t0 = time.perf_counter()
    orders = ModelOrders.parse(args.orders)
    y = read_series(args.input, args.log_returns_x100)
    res = qmle_fit(y, orders, _opts(args))
    out = res.to_dict()
    out["n"] = int(y.size)
    _dump_json(out, args.out)
    _manifest(args, [args.out] if args.out else [], args.seed, t0)
    return 0


def cmd_asd(args) -> int:
    t0 = time.perf_counter()
    theta_star = None
    if args.fit:
        fit = FitResult.from_dict(_load_json(args.fit))
        tau = fit.tau
        theta_star = fit.theta_hat
        if args.innovation:
            inn = InnovationSpec.from_dict(json.loads(args.innovation) if args.innovation.lstrip().startswith("{") else _load_json(args.innovation))
        else:
            inn = InnovationSpec("normal", omega=float(fit.extra.get("qmle_omega", 1.0)))
        gen = GenerativeParams(fit.theta_hat, inn)
    else:
        if args.tau is None:
            raise InputError("asd needs --tau unless --fit is given")
        tau = args.tau
        gen = _read_params(args.params, args.design, args.innovation)
    res = theoretical_asd(gen, tau, theta_star=theta_star, mc_path_len=args.path_len, seed=args.seed, n=args.n)
    _dump_json(res.to_dict(), args.out)
    _manifest(args, [args.out] if args.out else [], args.seed, t0)
    return 0


def cmd_mc_study(args) -> int:
    t0 = time.perf_counter()
    meta_path = str(Path(args.out).with_suffix(".json"))
    if args.config and Path(args.config).resolve() == Path(meta_path).resolve():
        raise InputError(f"--config {args.config} would be overwritten by the metadata output; rename one of them")
    raw = _load_config(args.config) if args.config else {}
    for key in ("reps", "seed", "n"):
        if getattr(args, key) is not None:
            raw[key] = getattr(args, key)
    cfg = McStudyConfig.from_dict(raw)
    table = run_mc_study(cfg, threads=args.threads)
    table.write_csv(args.out)
    _dump_json(table.metadata, meta_path)
    _manifest(args, [args.out, meta_path], cfg.seed, t0)
    return 0


def cmd_tau_grid(args) -> int:
    t0 = time.perf_counter()
    orders = ModelOrders.parse(args.orders)
    y = read_series(args.input, args.log_returns_x100)
    res = tau_grid_fit(y, _parse_taus(args.taus), orders, with_se=True, bandwidth_scale=args.bandwidth_scale, opts=_opts(args), threads=args.threads)
    res.write_csv(args.out)
    st = None if res.stationarity is None else {"value": res.stationarity.value, "se": res.stationarity.se}
    summary = {"schema": 1, "kind": "tau_grid", "n": int(y.size), "orders": str(orders), "stationarity": st, "errors": [e for e in res.errors if e]}
    summary_path = str(Path(args.out).with_suffix(".json"))
    _dump_json(summary, summary_path)
    _manifest(args, [args.out, summary_path], None, t0)
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker processes (default: QRLS_THREADS or 1)")
    common.add_argument("--manifest", default=None, help="manifest path (default: <output>.manifest.json)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="qrls", description="Quantile regression for ARMA-AGARCH time series.")
    p.add_argument("--version", action="version", version=f"qrls {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model_source(sp):
        sp.add_argument("--params", help="flat parameter JSON (xi, phi0.., psi.., gamma1.., gamma2.., beta.., omega)")
        sp.add_argument("--design", choices=("a", "b", "normal", "skewed_t"), help="built-in simulation design")
        sp.add_argument("--innovation", help='innovation JSON or path, e.g. {"family":"skewed_t","nu":4,"skew":0.71,"omega":0.2}')

    def data_source(sp):
        sp.add_argument("--input", required=True, help="CSV with a Y column or a single column")
        sp.add_argument("--orders", required=True, help="P,Q,p,q")
        sp.add_argument("--log-returns-x100", action="store_true", help="treat input as prices; use 100 diff(log p)")
        sp.add_argument("--restarts", type=int, default=3)

    s = sub.add_parser("simulate", parents=[common], help="simulate a sample path")
    model_source(s)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--burnin", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit", parents=[common], help="quantile regression fit")
    data_source(s)
    s.add_argument("--tau", type=float, required=True)
    s.add_argument("--seed", type=int, default=0, help="recorded in the manifest; the fit itself is deterministic")
    s.add_argument("--init", help="starting parameter JSON (default: QML warm start)")
    s.add_argument("--with-se", action="store_true")
    s.add_argument("--bandwidth-scale", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("qmle", parents=[common], help="Gaussian QML fit")
    data_source(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_qmle)

    s = sub.add_parser("asd", parents=[common], help="theoretical asymptotic standard deviations")
    model_source(s)
    s.add_argument("--fit", help="FitResult JSON; its orders, level and estimate are used")
    s.add_argument("--tau", type=float)
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--path-len", type=int, default=10**5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_asd)

    s = sub.add_parser("mc-study", parents=[common], help="Monte-Carlo study")
    s.add_argument("--config", help="JSON or TOML study configuration")
    s.add_argument("--reps", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True, help="long-format CSV; metadata goes to the same stem with .json")
    s.set_defaults(func=cmd_mc_study)

    s = sub.add_parser("tau-grid", parents=[common], help="fits over a grid of levels")
    data_source(s)
    s.add_argument("--taus", default="0.025:0.975:0.025", help="comma list or lo:hi:step")
    s.add_argument("--bandwidth-scale", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_tau_grid)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return the exit status."""
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        args.threads = resolve_threads(args.threads)
        return int(args.func(args))
    except UserError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except QRLSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
