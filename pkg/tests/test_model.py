import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.signal import lfilter

import oracles
from conftest import random_theta
from qrls.errors import DimensionError, NonstationaryScaleError, UnsupportedOrdersError
from qrls.innovations import InnovationSpec
from qrls.model import (
    GenerativeParams,
    ModelOrders,
    QuantileParams,
    ar_infty_coeffs,
    arch_infty_coeffs,
    default_truncation,
    filter_coeffs,
    moment_condition,
    orders_from_keys,
    simulation_design,
    validate,
)
from qrls.quantile_filter import filter_quantiles

orders_st = st.builds(ModelOrders, st.integers(0, 3), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))


class TestOrders:
    def test_parse_and_str(self):
        o = ModelOrders.parse("2, 1,1,3")
        assert (o.P, o.Q, o.p, o.q) == (2, 1, 1, 3)
        assert str(o) == "2,1,1,3"

    @pytest.mark.parametrize("text", ["1,1,1", "a,1,1,1", "1,-1,1,1", ""])
    def test_parse_rejects(self, text):
        with pytest.raises(DimensionError):
            ModelOrders.parse(text)

    def test_canonical_names(self):
        assert ModelOrders(1, 1, 1, 1).names() == ["xi", "phi0", "phi1", "psi1", "gamma11", "gamma21", "beta1"]
        assert ModelOrders(0, 0, 2, 2).names(with_xi=False) == ["phi0", "gamma11", "gamma12", "gamma21", "gamma22", "beta1", "beta2"]

    @given(orders_st)
    def test_dims(self, o):
        assert o.dim == len(o.names()) == 2 + o.P + o.Q + 2 * o.q + o.p
        total = sum(s.stop - s.start for s in o.slices().values())
        assert total == o.dim


class TestParams:
    @given(orders_st, st.integers(0, 10**6))
    def test_vector_round_trip(self, o, seed):
        theta = random_theta(np.random.default_rng(seed), o)
        assert QuantileParams.from_vector(theta.to_vector(), o) == theta

    @given(orders_st, st.integers(0, 10**6))
    def test_dict_round_trip_through_json(self, o, seed):
        theta = random_theta(np.random.default_rng(seed), o)
        d = json.loads(json.dumps(theta.to_dict(omega=0.3)))
        assert list(d) == o.names() + ["omega"]
        assert QuantileParams.from_dict(d) == theta
        assert orders_from_keys(d) == o

    def test_from_vector_wrong_length(self):
        with pytest.raises(DimensionError):
            QuantileParams.from_vector(np.zeros(5), ModelOrders(1, 1, 1, 1))

    @pytest.mark.parametrize("d", [{"xi": 0}, {"phi0": 0, "phi2": 1}, {"phi0": 0, "gamma11": 1}, {"phi0": 0, "alpha": 1}])
    def test_bad_keys(self, d):
        with pytest.raises(DimensionError):
            QuantileParams.from_dict(d)

    def test_generative_round_trip(self, design_b):
        d = json.loads(json.dumps(design_b.to_dict()))
        assert "xi" not in d and d["omega"] == 0.2
        assert GenerativeParams.from_dict(d) == design_b

    def test_generative_forces_xi_zero(self):
        g = GenerativeParams(QuantileParams(1.7, (0.0,)))
        assert g.model.xi == 0.0

    def test_quantile_params_uses_innovation_quantile(self, design_a):
        th = design_a.quantile_params(0.05)
        assert th.xi == pytest.approx(-1.6448536269514722 * np.sqrt(0.2), rel=1e-12)
        assert th.phi == (0.04, 0.2)

    @pytest.mark.parametrize("name", ["a", "b"])
    def test_simulation_design_values(self, name):
        g = simulation_design(name)
        d = g.model.to_dict(g.omega)
        assert [d[k] for k in ("phi0", "phi1", "psi1", "gamma11", "gamma21", "beta1", "omega")] == [0.04, 0.2, 0.1, 0.5, 1.25, 0.7, 0.2]


class TestValidate:
    @pytest.mark.parametrize(
        "theta,reason",
        [
            (QuantileParams(np.nan, (0.0,)), "finite"),
            (QuantileParams(0, (0.0,), (), (-0.1,), (0.1,), (0.5,)), "gamma nonneg"),
            (QuantileParams(0, (0.0,), (), (0.1,), (0.1,), (-0.5,)), "beta nonneg"),
            (QuantileParams(0, (0.0,), (), (0.1,), (0.1,), (0.5, 0.5)), "beta sum"),
            (QuantileParams(0, (0.0,), (1.0,)), "psi roots"),
            (QuantileParams(0, (0.0,), (0.5, -0.6)), "psi roots"),
            (QuantileParams(0, (0.1, 1.0)), "phi(1) nonzero"),
        ],
    )
    def test_reasons(self, theta, reason):
        rep = validate(theta)
        assert not rep and rep.reason == reason

    def test_design_is_valid(self, design_a):
        assert validate(design_a.model)

    def test_explosive_ar_part_is_allowed(self):
        # only MA invertibility is required of the location part
        assert validate(QuantileParams(0, (0.0, 1.3)))

    def test_order_mismatch(self, design_a):
        with pytest.raises(DimensionError):
            validate(design_a.model, ModelOrders(1, 0, 1, 1))


class TestInfiniteOrder:
    @given(st.integers(0, 10**6), st.sampled_from([ModelOrders(1, 1, 1, 1), ModelOrders(0, 2, 2, 2), ModelOrders(2, 1, 2, 1)]))
    def test_arch_coeffs_match_impulse_response(self, seed, o):
        theta = random_theta(np.random.default_rng(seed), o)
        c0, c1, c2 = arch_infty_coeffs(theta, K=60)
        imp = np.zeros(61)
        imp[0] = 1.0
        a = np.r_[1.0, -np.array(theta.beta)]
        np.testing.assert_allclose(c1, lfilter(np.r_[0.0, theta.gamma1], a, imp)[1:], rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(c2, lfilter(np.r_[0.0, theta.gamma2], a, imp)[1:], rtol=1e-12, atol=1e-15)
        assert c0 == pytest.approx(1.0 / (1.0 - sum(theta.beta)))

    @given(st.integers(0, 10**6))
    def test_ar_coeffs_match_impulse_response(self, seed):
        theta = random_theta(np.random.default_rng(seed), ModelOrders(2, 2, 0, 0))
        d = ar_infty_coeffs(theta, K=50)
        imp = np.zeros(51)
        imp[0] = 1.0
        ref = lfilter(np.r_[1.0, -np.array(theta.phi[1:])], np.r_[1.0, theta.psi], imp)[1:]
        np.testing.assert_allclose(d, ref, rtol=1e-10, atol=1e-14)

    def test_series_form_reproduces_filter(self, path_a, design_a):
        theta = design_a.quantile_params(0.5)
        fc = filter_coeffs(theta)
        st_ = filter_quantiles(path_a.Y, theta)
        e = st_.eps_tilde
        t = 1999
        lags = e[t - 1 :: -1][: fc.K]
        h2 = fc.c0 + np.sum(fc.c1[: lags.size] * np.maximum(lags, 0) ** 2 + fc.c2[: lags.size] * np.minimum(lags, 0) ** 2)
        assert h2 == pytest.approx(st_.h2_tilde[t], rel=1e-10)

    def test_nonstationary_scale(self):
        with pytest.raises(NonstationaryScaleError):
            arch_infty_coeffs(QuantileParams(0, (0.0,), (), (0.1,), (0.1,), (1.0,)))

    @pytest.mark.parametrize("rate,expected", [(0.5, 40), (0.7, 78), (0.0, 1), (1.0, 10_000)])
    def test_default_truncation(self, rate, expected):
        k = default_truncation(rate)
        assert k == expected
        if 0 < rate < 1:
            assert rate**k < 1e-12 <= rate ** (k - 1)


class TestMomentCondition:
    def test_normal_matches_closed_form(self, design_a):
        est = moment_condition(design_a, m=2, mc_reps=10**6, seed=1)
        exact = oracles.normal_moment_m2(0.7, 0.5, 1.25, 0.2)
        assert exact == pytest.approx(0.84375)
        assert abs(est.mean - exact) < 4 * est.se

    def test_m1_is_linear(self, design_b):
        est = moment_condition(design_b, m=1, mc_reps=10**5, seed=2)
        from qrls.innovations import split_second_moments

        ep, em = split_second_moments(design_b.innovation)
        assert abs(est.mean - (0.7 + 0.5 * ep + 1.25 * em)) < 4 * est.se

    def test_degenerate_gamma_exact(self):
        g = GenerativeParams(QuantileParams(0, (0.0,), (), (0.0,), (0.0,), (0.6,)), InnovationSpec())
        assert moment_condition(g, m=3) == (pytest.approx(0.216), 0.0)

    def test_orders_guard(self):
        g = GenerativeParams(QuantileParams(0, (0.0,), (), (0.1, 0.1), (0.1, 0.1), (0.6,)))
        with pytest.raises(UnsupportedOrdersError):
            moment_condition(g)

    def test_seeded(self, design_b):
        assert moment_condition(design_b, mc_reps=1000, seed=4) == moment_condition(design_b, mc_reps=1000, seed=4)
