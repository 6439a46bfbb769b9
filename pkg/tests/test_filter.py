import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

import oracles
from conftest import random_theta
from qrls.errors import ConstraintError, DimensionError, InputError
from qrls.model import ModelOrders, QuantileParams
from qrls.quantile_filter import filter_quantiles, filter_with_gradient, oracle_q_exact, split_vector
from qrls.simulate import SimConfig, simulate_path

ORDERS = [ModelOrders(1, 1, 1, 1), ModelOrders(2, 1, 2, 1), ModelOrders(0, 2, 1, 2), ModelOrders(1, 0, 0, 1), ModelOrders(0, 0, 0, 0), ModelOrders(3, 0, 0, 0)]


def _draw(seed, orders, n=120):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) * rng.uniform(0.3, 3.0), random_theta(rng, orders)


KINK_GAP = 1e-2


def max_rel_error(a, b, floor=1e-3):
    """Componentwise relative error; entries below ``floor`` are compared on that absolute scale."""
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor)))


@pytest.mark.parametrize("orders", ORDERS, ids=str)
@given(seed=st.integers(0, 2**32 - 1))
def test_matches_loop_oracle(orders, seed):
    y, theta = _draw(seed, orders)
    st_ = filter_quantiles(y, theta)
    e, h, q = oracles.filter_loop(y, *split_vector(theta.to_vector(), orders))
    np.testing.assert_allclose(st_.eps_tilde, e, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(st_.h2_tilde, h, rtol=1e-12)
    np.testing.assert_allclose(st_.q_tilde, q, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("orders", ORDERS[:4], ids=str)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_h2_at_least_one(orders, seed, scale):
    y, theta = _draw(seed, orders)
    assert np.all(filter_quantiles(y * scale, theta).h2_tilde >= 1.0)


@pytest.mark.parametrize("orders", ORDERS, ids=str)
@given(seed=st.integers(0, 2**32 - 1))
def test_gradient_matches_finite_differences(orders, seed):
    y, theta = _draw(seed, orders, n=60)
    st_ = filter_with_gradient(y, theta)
    # the squared hinges have a second-derivative kink at eps = 0
    assume(np.min(np.abs(st_.eps_tilde)) > KINK_GAP)
    g = st_.grad_q
    fd = oracles.fd_gradient(lambda v: filter_quantiles(y, QuantileParams.from_vector(v, orders)).q_tilde, theta.to_vector())
    assert max_rel_error(g, fd) < 1e-5


def test_gradient_columns(path_a, design_a):
    theta = design_a.quantile_params(0.05)
    st_ = filter_with_gradient(path_a.Y, theta)
    np.testing.assert_array_equal(st_.grad_q[:, 0], np.sqrt(st_.h2_tilde))
    assert st_.grad_q.shape == (2000, 7)
    assert st_.grad_eps.shape == (2000, 3)
    assert st_.grad_h2.shape == (2000, 6)
    # eps does not depend on the scale block; h2 not on xi
    fd = oracles.fd_gradient(lambda v: filter_quantiles(path_a.Y[:80], QuantileParams.from_vector(v, theta.orders)).h2_tilde, theta.to_vector())
    np.testing.assert_allclose(st_.grad_h2[:80], fd[:, 1:], rtol=1e-5, atol=1e-7)
    np.testing.assert_allclose(fd[:, 0], 0.0, atol=1e-9)


def test_values_agree_with_gradient_run(path_b, design_b):
    theta = design_b.quantile_params(0.75)
    a, b = filter_quantiles(path_b.Y, theta), filter_with_gradient(path_b.Y, theta)
    for f in ("eps_tilde", "h2_tilde", "q_tilde"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))


def test_std_resid():
    y = np.array([0.3, -1.0, 2.0])
    st_ = filter_quantiles(y, QuantileParams(0.0, (0.0,), (), (0.5,), (0.5,), ()))
    np.testing.assert_allclose(st_.std_resid, y / np.sqrt([1.0, 1.045, 1.5]))


@pytest.mark.parametrize("M", [2, 3, 10])
def test_oracle_exact_for_ar_arch(M):
    orders = ModelOrders(1, 0, 0, 2)
    if M < orders.P + orders.q:
        pytest.skip("presample too short")
    theta = QuantileParams(-0.8, (0.1, 0.4), (), (0.3, 0.2), (0.6, 0.1), ())
    rng = np.random.default_rng(0)
    y = rng.standard_normal(M + 50)
    st_ = oracle_q_exact(y, theta, M)
    # direct formula on actual lags
    e = y[1:] - 0.1 - 0.4 * y[:-1]  # eps for t >= 1
    t = np.arange(M, M + 50)
    e_t, e1, e2 = e[t - 1], e[t - 2], e[t - 3]
    h2 = 1 + 0.3 * np.maximum(e1, 0) ** 2 + 0.6 * np.minimum(e1, 0) ** 2 + 0.2 * np.maximum(e2, 0) ** 2 + 0.1 * np.minimum(e2, 0) ** 2
    np.testing.assert_allclose(st_.eps_tilde, e_t, rtol=1e-13)
    np.testing.assert_allclose(st_.h2_tilde, h2, rtol=1e-13)
    np.testing.assert_allclose(st_.q_tilde, y[t] - e_t - 0.8 * np.sqrt(h2), rtol=1e-13)


def test_truncation_effect_decays(design_a):
    theta = design_a.quantile_params(0.05)
    path = simulate_path(SimConfig(design_a, 1300, seed=3))
    M = 1000
    approx = filter_quantiles(path.Y[M:], theta).q_tilde
    exact = oracle_q_exact(path.Y, theta, M).q_tilde
    d = np.abs(approx - exact)
    keep = d > 1e-14
    t = np.arange(d.size)[keep]
    slope = np.polyfit(t, np.log(d[keep]), 1)[0]
    assert slope < -0.01
    assert d[-1] < 1e-8


@pytest.mark.parametrize("bad", [[1.0, np.nan], [], [np.inf]])
def test_bad_series(bad):
    with pytest.raises(InputError):
        filter_quantiles(bad, QuantileParams())


def test_invalid_theta_raises():
    with pytest.raises(ConstraintError, match="beta sum"):
        filter_quantiles([1.0, 2.0], QuantileParams(0, (0.0,), (), (0.1,), (0.1,), (1.2,)))
    with pytest.raises(DimensionError):
        filter_quantiles([1.0, 2.0], QuantileParams(), ModelOrders(1, 0, 0, 0))
