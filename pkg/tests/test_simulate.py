import math

import numpy as np
import pytest

from procnet import DelayLaw, HorizonTooShort, ScalarSystem, filter_steady_state_variance, optimal_tau
from procnet.simulate import SimPlan, discrete_riccati, discretize, monte_carlo_variance, run_trial, trial_rng

from helpers import make_config


class TestDiscretize:
    def test_integrator(self):
        a_d, q_d, r_d = discretize(ScalarSystem(0.0, 1.0), 3.0, 0.01)
        assert a_d == 1.0
        assert q_d == pytest.approx(0.01, rel=1e-15)
        assert r_d == pytest.approx(300.0, rel=1e-15)

    def test_stable(self):
        a_d, q_d, _ = discretize(ScalarSystem(-1.0, 2.0), 1.0, math.log(2.0))
        assert a_d == pytest.approx(0.5, rel=1e-15)
        assert q_d == pytest.approx(0.75, rel=1e-15)

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            discretize(ScalarSystem(0.0, 1.0), 1.0, 0.0)

    @pytest.mark.parametrize("a", [-1.0, 0.0, 0.7])
    def test_riccati_converges_linearly(self, a):
        sys = ScalarSystem(a, 1.0)
        p = filter_steady_state_variance(sys, 2.0)
        errs = []
        for h in (1e-2, 1e-3, 1e-4):
            _, post, _ = discrete_riccati(*discretize(sys, 2.0, h))
            errs.append(abs(post - p))
        # each tenfold refinement shrinks the gap about tenfold
        for coarse, fine in zip(errs, errs[1:]):
            assert 8 < coarse / fine < 12


class TestPlan:
    @pytest.mark.parametrize("kw", [{"step": 0}, {"burn_in_fraction": 1.0}, {"trials": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SimPlan(**kw)

    def test_horizon_too_short(self):
        with pytest.raises(HorizonTooShort):
            run_trial(make_config(a=-1.0), 0.5, 1, SimPlan(horizon=5.0), 0)

    def test_horizon_scales_with_delay(self):
        cfg = make_config(a=-1.0, comm=DelayLaw.constant(2.0))
        with pytest.raises(HorizonTooShort):
            run_trial(cfg, 0.5, 1, SimPlan(horizon=30.0), 0)


class TestTrials:
    plan = SimPlan(step=1e-3, horizon=30.0, trials=4, seed=11)

    def test_deterministic(self):
        cfg = make_config(a=-1.0)
        x = run_trial(cfg, 0.5, 1, self.plan, 2)
        y = run_trial(cfg, 0.5, 1, self.plan, 2)
        assert x.tobytes() == y.tobytes()

    def test_streams_differ(self):
        cfg = make_config(a=-1.0)
        x = run_trial(cfg, 0.5, 1, self.plan, 0)
        y = run_trial(cfg, 0.5, 1, self.plan, 1)
        assert not np.array_equal(x, y)
        assert trial_rng(1, 0).standard_normal() != trial_rng(2, 0).standard_normal()

    def test_noiseless_limit(self):
        cfg = make_config(a=-1.0, sigma2_w=1e-12, b=1.0)
        err = run_trial(cfg, 0.05, 1, self.plan, 0)
        assert err.max() < 1e-9

    @pytest.mark.parametrize("a", [-1.0, -0.3])
    def test_state_and_error_paths_agree(self, a):
        cfg = make_config(a=a, comm=DelayLaw.constant(0.2), sensors=2)
        plan = SimPlan(step=1e-3, horizon=80.0, seed=3)
        x = run_trial(cfg, 0.3, 2, plan, 0, mode="state")
        y = run_trial(cfg, 0.3, 2, plan, 0, mode="error")
        np.testing.assert_allclose(x, y, rtol=1e-8, atol=1e-12)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            run_trial(make_config(), 0.5, 1, SimPlan(horizon=30.0), 0, mode="fast")


class TestMonteCarlo:
    def test_benchmark(self):
        res = monte_carlo_variance(make_config(a=-1.0), 0.5, 1, SimPlan(step=1e-3, horizon=200.0, trials=64, seed=0))
        assert abs(res.z_score) <= 4
        assert abs(res.relative_error) <= 0.03
        assert res.delay_steps == 500 and res.delay_residual < 1e-12

    def test_bitwise_repeatable(self):
        plan = SimPlan(step=1e-3, horizon=30.0, trials=3, seed=5)
        cfg = make_config(a=-1.0)
        assert monte_carlo_variance(cfg, 0.5, 1, plan) == monte_carlo_variance(cfg, 0.5, 1, plan)
        assert monte_carlo_variance(cfg, 0.5, 1, plan, workers=2) == monte_carlo_variance(cfg, 0.5, 1, plan)

    def test_single_trial_batches(self):
        res = monte_carlo_variance(make_config(a=-1.0), 0.5, 1, SimPlan(horizon=50.0, trials=1))
        assert res.stderr > 0 and math.isfinite(res.z_score)

    def test_virtual_sensor(self):
        plan = SimPlan(step=1e-3, horizon=100.0, trials=32, seed=1)
        many = monte_carlo_variance(make_config(a=-1.0, sigma2_w=2.0, b=1.0, sensors=4), 0.3, 4, plan)
        one = monte_carlo_variance(make_config(a=-1.0, sigma2_w=2.0, b=0.25), 0.3, 1, plan)
        assert many.analytic_variance == pytest.approx(one.analytic_variance, rel=1e-14)
        joint = math.hypot(many.stderr, one.stderr)
        assert abs(many.empirical_variance - one.empirical_variance) <= 4 * joint

    def test_constant_communication_delay(self):
        cfg = make_config(a=-1.0, comm=DelayLaw.constant(0.1))
        res = monte_carlo_variance(cfg, 0.5, 1, SimPlan(step=1e-3, horizon=200.0, trials=32, seed=2))
        assert abs(res.relative_error) <= 0.03
        assert abs(res.z_score) <= 4

    def test_unstable_plant(self):
        cfg = make_config(a=0.5, sigma2_w=1.0, b=0.5, comm=DelayLaw.constant(0.2), sensors=4)
        res = monte_carlo_variance(cfg, 0.1, 4, SimPlan(step=1e-3, horizon=100.0, trials=32, seed=4))
        # heavy-tailed errors: only the z-score is a fair yardstick here
        assert abs(res.z_score) <= 4
        assert res.stderr < 0.05 * res.analytic_variance

    @pytest.mark.slow
    def test_compressing_channel_at_optimum(self):
        cfg = make_config(a=-0.1, comm=DelayLaw.compressing(1.0))
        tau = optimal_tau(cfg).tau_opt
        tau = round(tau, 2)  # delay lands on the 1e-2 grid
        res = monte_carlo_variance(cfg, tau, 1, SimPlan(step=1e-2, horizon=1000.0, trials=32, seed=6))
        assert abs(res.z_score) <= 4
        assert abs(res.relative_error) <= 0.05

    def test_finer_step_shrinks_bias(self):
        cfg = make_config(a=-1.0, sigma2_w=4.0, b=0.05)
        coarse = monte_carlo_variance(cfg, 0.04, 1, SimPlan(step=4e-3, horizon=100.0, trials=32, seed=9))
        fine = monte_carlo_variance(cfg, 0.04, 1, SimPlan(step=1e-3, horizon=100.0, trials=32, seed=9))
        assert abs(fine.relative_error) < abs(coarse.relative_error)
