import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procnet import (
    DelayLaw,
    Method,
    ScalarSystem,
    joint_optimize,
    optimal_sensor_count,
    optimal_tau,
    optimal_tau_exponential,
    optimal_tau_inverse_linear,
    optimal_tau_power,
    optimal_tau_with_compression,
    steady_state_error_variance,
    tau_opt_sensitivity,
    tau_upper_bound,
)
from procnet.optimize import exponential_threshold, quintic, variance_crossing

import oracles
from helpers import FIG5, make_config


def brute(fun, lo, hi, n=200_001):
    x, _, step = oracles.grid_argmin(fun, lo, hi, n)
    return x, step


class TestInverseLinear:
    def test_integrator(self):
        opt = optimal_tau_inverse_linear(ScalarSystem(0.0, 1.0), 1.0)
        assert opt.tau_opt == pytest.approx(4 ** (-1 / 3), rel=1e-14)
        assert opt.method is Method.CUBIC_ROOT

    def test_unstable_matches_grid(self):
        opt = optimal_tau_inverse_linear(ScalarSystem(1.0, 1.0), 1.0)
        x, step = brute(lambda t: oracles.variance(t, 1.0, 1.0, 1.0), 1e-6, 0.5)
        assert abs(opt.tau_opt - x) <= 2 * step
        assert opt.tau_opt == pytest.approx(0.4196433776, abs=1e-9)

    def test_high_noise_ratio(self):
        opt = optimal_tau_inverse_linear(ScalarSystem(1.0, 100.0), 1.0)
        assert opt.tau_opt < (1 / 400) ** (1 / 3)
        assert opt.tau_opt < optimal_tau_inverse_linear(ScalarSystem(1.0, 1.0), 1.0).tau_opt

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-3, 3), st.floats(0.01, 10), st.floats(0.01, 10))
    def test_cubic_root_below_bound(self, a, q, b):
        opt = optimal_tau_inverse_linear(ScalarSystem(a, q), b)
        assert 0 < opt.tau_opt <= tau_upper_bound(a, q / b)
        assert opt.residual <= 1e-12


class TestSensitivity:
    def test_integrator(self):
        ds, _ = tau_opt_sensitivity(ScalarSystem(0.0, 1.0), 1.0)
        assert ds == pytest.approx(-(4 ** (-1 / 3)) / 3, rel=1e-12)

        def tau_of_s(s):
            return optimal_tau_inverse_linear(ScalarSystem(0.0, s), 1.0).tau_opt

        assert ds == pytest.approx(oracles.central_difference(tau_of_s, 1.0), rel=1e-4)

    def test_both_negative(self):
        ds, da2 = tau_opt_sensitivity(ScalarSystem(1.0, 1.0), 1.0)
        assert ds < 0 and da2 < 0

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3, 3), st.floats(0.05, 10), st.floats(0.05, 10))
    def test_ratio(self, a, q, b):
        ds, da2 = tau_opt_sensitivity(ScalarSystem(a, q), b)
        tau = optimal_tau_inverse_linear(ScalarSystem(a, q), b).tau_opt
        assert da2 / ds == pytest.approx(1 / tau, rel=1e-12)


class TestPower:
    def test_gamma_one_is_inverse_linear(self):
        for a, q, b in [(0.0, 1.0, 1.0), (1.0, 1.0, 1.0), (-2.0, 0.3, 4.0), (0.4, 7.0, 0.2)]:
            p = optimal_tau_power(ScalarSystem(a, q), b, 1.0)
            c = optimal_tau_inverse_linear(ScalarSystem(a, q), b)
            assert p.tau_opt == pytest.approx(c.tau_opt, abs=1e-8)

    def test_gamma_two_integrator(self):
        # P = 1/tau + tau here; the grid oracle agrees with the exact tau = 1
        opt = optimal_tau_power(ScalarSystem(0.0, 1.0), 1.0, 2.0)
        x, step = brute(lambda t: oracles.variance_general(t, 0.0, 1.0, 1.0 / t**2, t), 1e-5, 5.0, 500_000)
        assert abs(opt.tau_opt - x) <= 2 * step
        assert opt.tau_opt == pytest.approx(1.0, abs=1e-8)

    def test_sublinear_stable(self):
        opt = optimal_tau_power(ScalarSystem(-0.5, 1.0), 1.0, 0.5)
        assert opt.tau_opt > 0 and opt.value < 1.0
        x, step = brute(lambda t: oracles.variance_general(t, -0.5, 1.0, 1.0 / np.sqrt(t), t), 1e-5, 10.0)
        assert abs(opt.tau_opt - x) <= 2 * step


class TestExponential:
    def test_raw_below_threshold(self):
        opt = optimal_tau_exponential(ScalarSystem(0.0, 1.0), 1.0, 1.0)
        assert opt.method is Method.RAW_TRANSMISSION and opt.tau_opt == 0.0
        assert opt.value == pytest.approx(1.0, rel=1e-14)

    def test_interior_above_threshold(self):
        opt = optimal_tau_exponential(ScalarSystem(0.0, 1.0), 1.0, 3.0)
        # a = 0: minimize exp(-3t/2) + t, stationary at t = (2/3) ln(3/2)
        assert opt.tau_opt == pytest.approx(2 / 3 * math.log(1.5), rel=1e-10)

    def test_near_threshold(self):
        sys = ScalarSystem(0.0, 1.0)
        assert optimal_tau_exponential(sys, 1.0, 1.999).method is Method.RAW_TRANSMISSION
        opt = optimal_tau_exponential(sys, 1.0, 2.001)
        assert opt.method is Method.GOLDEN_SECTION and opt.tau_opt > 0
        grid = np.linspace(0, 0.01, 100_001)
        vals = oracles.variance_general(grid, 0.0, 1.0, np.exp(-2.001 * grid), grid)
        assert vals.min() < vals[0]
        assert opt.value <= vals.min() + 1e-15

    @pytest.mark.parametrize("a", [-1.0, 0.0, 1.0])
    def test_threshold_is_where_slope_at_zero_flips(self, a):
        sys = ScalarSystem(a, 2.0)
        g = exponential_threshold(sys, 0.5)
        for gamma, sign in ((g * 0.99, 1), (g * 1.01, -1)):
            cfg = make_config(a=a, sigma2_w=2.0, b=0.5, kind="exponential", gamma=gamma)
            h = 1e-7
            d = (steady_state_error_variance(cfg, h).total - steady_state_error_variance(cfg, 0.0).total) / h
            assert np.sign(d) == sign


class TestCompression:
    @pytest.mark.parametrize("a", [0.1, -0.1])
    def test_fig4_grid(self, a):
        opt = optimal_tau_with_compression(ScalarSystem(a, 1.0), 1.0, 1.0)
        x, step = brute(lambda t: oracles.variance(t, a, 1.0, 1.0, delay=t + 1.0 / t), 1e-4, 20.0)
        assert abs(opt.tau_opt - x) <= 2 * step
        assert len(opt.roots) == 2
        assert opt.roots[0] < 1.0 < opt.roots[1]

    def test_vanishing_compression(self):
        opt = optimal_tau_with_compression(ScalarSystem(0.0, 1.0), 1.0, 1e-12)
        assert opt.tau_opt == pytest.approx(4 ** (-1 / 3), abs=1e-3)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-2, 2).filter(lambda a: abs(a) > 1e-3), st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.01, 4))
    def test_two_roots_and_residual(self, a, q, b, c):
        opt = optimal_tau_with_compression(ScalarSystem(a, q), b, c)
        assert len(opt.roots) == 2
        assert opt.roots[0] < math.sqrt(c) < opt.roots[1]
        assert opt.residual < 1e-12
        assert quintic(math.sqrt(c), a, q / b, c) < 0


class TestDispatch:
    def test_constant_delay_keeps_argmin(self):
        base = optimal_tau(make_config(a=0.1))
        withc = optimal_tau(make_config(a=0.1, comm=DelayLaw.constant(1.0)))
        assert withc.tau_opt == base.tau_opt
        assert withc.value > base.value

    def test_sensors_scale_b(self):
        opt = optimal_tau(make_config(a=0.0, sensors=4), 4)
        assert opt.tau_opt == pytest.approx((1 / 16) ** (1 / 3), rel=1e-13)

    def test_exponential_below_threshold(self):
        opt = optimal_tau(make_config(a=0.0, kind="exponential", gamma=1.0))
        assert opt.method is Method.RAW_TRANSMISSION

    def test_compressing_fusion_scales_with_count(self):
        cfg = make_config(a=-0.5, comm=DelayLaw.compressing(0.2), fusion=DelayLaw.compressing(0.1), sensors=3)
        opt = optimal_tau(cfg, 3)
        direct = optimal_tau_with_compression(ScalarSystem(-0.5, 1.0), 1 / 3, 0.5)
        assert opt.tau_opt == direct.tau_opt
        x, step = brute(lambda t: oracles.variance(t, -0.5, 1.0, 1.0, delay=t + 0.5 / t, sensors=3), 1e-3, 10.0)
        assert abs(opt.tau_opt - x) <= 2 * step

    def test_generic_path(self):
        cfg = make_config(a=0.3, kind="inverse_power", gamma=1.5, comm=DelayLaw.compressing(0.5))
        opt = optimal_tau(cfg)
        assert opt.method is Method.GOLDEN_SECTION
        x, step = brute(lambda t: oracles.variance_general(t, 0.3, 1.0, t**-1.5, t + 0.5 / t), 1e-3, 10.0)
        assert abs(opt.tau_opt - x) <= 2 * step

    def test_bad_sensor_count(self):
        with pytest.raises(ValueError):
            optimal_tau(make_config(sensors=2), 3)


class TestSensorCount:
    def test_fig5(self, fig5_config):
        res = optimal_sensor_count(fig5_config, 0.1)
        assert res.s_opt == 4
        assert res.value == pytest.approx(2.9155, abs=5e-5)
        assert len(res.table) == 10 and res.tie_with is None

    def test_without_fusion_delay(self):
        cfg = make_config(**{**FIG5, "fusion": DelayLaw.constant(0.0)})
        res = optimal_sensor_count(cfg, 0.1)
        assert res.s_opt == 10
        values = [p for _, p in res.table]
        assert all(x > y for x, y in zip(values, values[1:]))

    def test_single_sensor(self):
        assert optimal_sensor_count(make_config(sensors=1), 0.5).s_opt == 1


class TestJoint:
    def test_single_sensor(self):
        cfg = make_config(a=0.3)
        s, opt = joint_optimize(cfg)
        assert s == 1 and opt == optimal_tau(cfg, 1)

    def test_fig6_beats_fixed_delays(self):
        cfg = make_config(**FIG5)
        res = joint_optimize(cfg)
        fixed = min(optimal_sensor_count(cfg, t).value for t in (0.05, 0.1, 0.15, 0.2))
        assert res.optimum.value <= fixed
        assert res.s_opt == 4

    def test_free_fusion_uses_all(self):
        cfg = make_config(a=0.0, sigma2_w=2.0, b=0.5, sensors=5)
        s, opt = joint_optimize(cfg)
        assert s == 5
        assert opt.tau_opt == pytest.approx((0.5 / (4 * 5 * 2.0)) ** (1 / 3), rel=1e-13)

    def test_workers_agree(self):
        cfg = make_config(**FIG5)
        assert joint_optimize(cfg, workers=3) == joint_optimize(cfg)


class TestCrossing:
    @pytest.mark.parametrize("a", [0.1, -0.1])
    def test_fig4(self, a):
        const = make_config(a=a, comm=DelayLaw.constant(1.0))
        comp = make_config(a=a, comm=DelayLaw.compressing(1.0))
        t = variance_crossing(const, comp, 0.05, 6.0)
        assert t == pytest.approx(1.0, abs=1e-8)

    def test_no_crossing(self):
        assert variance_crossing(make_config(), make_config(comm=DelayLaw.constant(1.0)), 0.1, 5.0) is None


class TestRoundedUp:
    def test_quantum(self):
        opt = optimal_tau_inverse_linear(ScalarSystem(0.0, 1.0), 1.0)
        assert opt.rounded_up(0.1) == pytest.approx(0.7)
        with pytest.raises(ValueError):
            opt.rounded_up(0.0)


class TestIntegratorBlowup:
    @pytest.mark.parametrize("u", [0.01, 0.0457, 1.0, 100.0])
    def test_ratio_at_tiny_delay(self, u):
        # with a = 0 and u = b / sigma2_w the minimum is 3 tau_opt, which gives
        # P(t) / P_opt = sqrt(u / t) / (3 (u/4)^(1/3)) + O(t)
        cfg = make_config(a=0.0, sigma2_w=1.0, b=u)
        opt = optimal_tau(cfg)
        assert opt.value == pytest.approx(3 * opt.tau_opt, rel=1e-12)
        ratio = steady_state_error_variance(cfg, 1e-7).total / opt.value
        assert ratio == pytest.approx(math.sqrt(u / 1e-7) / (3 * (u / 4) ** (1 / 3)), rel=1e-6)
