"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--n 2000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from qrls import _kernels_python
from qrls.model import simulation_design
from qrls.quantile_filter import split_vector
from qrls.simulate import SimConfig, simulate_path

try:
    from qrls import _kernels
except ImportError:
    _kernels = None


def cases(n):
    gen = simulation_design("a")
    y = simulate_path(SimConfig(gen, n, seed=1)).Y
    orders = gen.orders
    parts = split_vector(gen.quantile_params(0.05).to_vector(), orders)
    eps, h2, q = np.empty(n), np.empty(n), np.empty(n)
    deps = np.empty((n, orders.n_arma))
    dh2 = np.empty((n, orders.n_model))
    dq = np.empty((n, orders.dim))
    u = np.random.default_rng(0).standard_normal(n) * np.sqrt(gen.omega)
    ys = np.empty(n)
    return {
        "qr_loss": lambda k: k.qr_loss(y, *parts, 0.05, eps, h2),
        "filter_values": lambda k: k.filter_values(y, *parts, eps, h2, q),
        "filter_gradient": lambda k: k.filter_gradient(y, *parts, eps, h2, q, deps, dh2, dq),
        "simulate": lambda k: k.simulate(u, *parts[1:], ys, eps, h2),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _kernels_python)] + ([("compiled", _kernels)] if _kernels else [])
    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'kernel':<16}" + "".join(f"{b:>14}" for b, _ in backends) + ("     speedup" if _kernels else ""))
    for name, fn in cases(args.n).items():
        times = []
        for _, mod in backends:
            number = 20 if mod is _kernels else 2
            times.append(min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number)
        row = f"{name:<16}" + "".join(f"{t * 1e3:>11.3f} ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>11.0f}x"
        print(row)


if __name__ == "__main__":
    main()
