import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from qrls.model import ModelOrders, QuantileParams, simulation_design  # noqa: E402
from qrls.simulate import SimConfig, simulate_path  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def design_a():
    return simulation_design("a")


@pytest.fixture(scope="session")
def design_b():
    return simulation_design("b")


@pytest.fixture(scope="session")
def orders11():
    return ModelOrders(1, 1, 1, 1)


@pytest.fixture(scope="session")
def path_a(design_a):
    return simulate_path(SimConfig(design_a, 2000, seed=11))


@pytest.fixture(scope="session")
def path_b(design_b):
    return simulate_path(SimConfig(design_b, 2000, seed=12))


def random_theta(rng: np.random.Generator, orders: ModelOrders) -> QuantileParams:
    """Random point well inside the parameter space."""
    P, Q, p, q = orders.P, orders.Q, orders.p, orders.q
    phi = [rng.uniform(-0.2, 0.2)] + list(rng.uniform(-0.6, 0.6, P) / max(P, 1))
    psi = list(rng.uniform(-0.6, 0.6, Q) / max(Q, 1))
    g1 = list(rng.uniform(0.05, 1.0, q))
    g2 = list(rng.uniform(0.05, 1.5, q))
    beta = list(rng.uniform(0.05, 0.8, p) / max(p, 1))
    return QuantileParams(rng.uniform(-1.5, 1.5), phi, psi, g1, g2, beta)
