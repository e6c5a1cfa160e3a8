"""Monte Carlo check of the closed-form variance.

The plant is discretized exactly with step ``h``; each of the ``S`` sensors
produces a sample per step whose noise variance is the continuous intensity
divided by ``h``.  A steady-state Kalman filter fuses the samples, and the
estimate built from data ``d = round(tau_tot / h)`` steps old is pushed
forward open-loop to the current step.  The recorded quantity is the
squared prediction error.

All linear recursions run through :func:`scipy.signal.lfilter`, so a trial
costs a handful of vectorized passes over the horizon.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .analytic import measurement_noise_variance, steady_state_error_variance, total_delay
from .errors import HorizonTooShort
from .model import NetworkConfig, ScalarSystem, validate

__all__ = [
    "SimPlan",
    "SimResult",
    "discretize",
    "discrete_riccati",
    "trial_rng",
    "run_trial",
    "monte_carlo_variance",
]

MIN_SAMPLES = 100
SINGLE_TRIAL_BATCHES = 10


@dataclass(frozen=True)
class SimPlan:
    step: float = 1e-3
    horizon: float = 100.0
    burn_in_fraction: float = 0.2
    trials: int = 64
    seed: int = 0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be > 0, got {self.step!r}")
        if not 0 < self.burn_in_fraction < 1:
            raise ValueError(f"burn_in_fraction must lie in (0, 1), got {self.burn_in_fraction!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials!r}")


@dataclass(frozen=True)
class SimResult:
    empirical_variance: float
    stderr: float
    samples: int
    analytic_variance: float
    z_score: float
    delay_steps: int
    delay_residual: float

    @property
    def relative_error(self) -> float:
        return (self.empirical_variance - self.analytic_variance) / self.analytic_variance


def discretize(system: ScalarSystem, meas_var: float, h: float) -> tuple[float, float, float]:
    """Exact zero-order sampling of the plant and white-noise measurement.

    Returns ``(a_d, q_d, r_d)``: state transition, process noise variance
    per step, and per-sample measurement variance ``meas_var / h``.
    """
    if not h > 0:
        raise ValueError(f"h must be > 0, got {h!r}")
    if not meas_var > 0:
        raise ValueError(f"meas_var must be > 0, got {meas_var!r}")
    a = system.a
    a_d = math.exp(a * h)
    x = 2.0 * a * h
    q_d = system.sigma2_w * h if abs(x) < 1e-12 else system.sigma2_w * math.expm1(x) / (2.0 * a)
    return a_d, q_d, meas_var / h


def discrete_riccati(a_d: float, q_d: float, r_d: float, tol: float = 1e-14, max_iter: int = 10_000_000):
    """Iterate the scalar filter Riccati recursion to its fixed point.

    Returns ``(prior, posterior, gain)`` steady-state values.
    """
    prior = q_d
    for _ in range(max_iter):
        post = prior * r_d / (prior + r_d)
        nxt = a_d * a_d * post + q_d
        if abs(nxt - prior) <= tol * nxt:
            prior = nxt
            break
        prior = nxt
    post = prior * r_d / (prior + r_d)
    return prior, post, prior / (prior + r_d)


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent counter-based stream for one trial."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial_index),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class _Setup:
    n: int
    d: int
    first: int
    a_d: float
    q_d: float
    r_d: float
    gain: float
    residual: float
    S: int


def _setup(config: NetworkConfig, tau: float, S: int, plan: SimPlan) -> _Setup:
    validate(config)
    system = config.system
    a = system.a
    h = plan.step
    tau_tot = total_delay(config, tau, S).tau_tot
    need = 20.0 * max(1.0 / abs(a) if a < 0 else 1.0, tau_tot)
    if plan.horizon < need:
        raise HorizonTooShort(f"horizon {plan.horizon!r} < required {need!r} (20 x max(time constant, delay))")
    n = int(round(plan.horizon / h))
    d = int(round(tau_tot / h))
    first = max(d, int(math.ceil(plan.burn_in_fraction * n)))
    if n - first < MIN_SAMPLES:
        raise HorizonTooShort(f"only {n - first} samples survive burn-in; need {MIN_SAMPLES}")
    meas_var = measurement_noise_variance(config.preprocessing, tau)
    a_d, q_d, r_d = discretize(system, meas_var, h)
    _, _, gain = discrete_riccati(a_d, q_d, r_d / S)
    return _Setup(n, d, first, a_d, q_d, r_d, gain, abs(tau_tot - d * h), S)


def _draw(rng: np.random.Generator, st: _Setup, p0: float):
    x0_dev = math.sqrt(p0) * rng.standard_normal() if p0 > 0 else 0.0
    w = math.sqrt(st.q_d) * rng.standard_normal(st.n - 1)
    # one noise stream per sensor; the fused sample is their mean
    v = math.sqrt(st.r_d) * rng.standard_normal((st.S, st.n)).mean(axis=0)
    return x0_dev, w, v


def _errors_from_state(system: ScalarSystem, st: _Setup, x0_dev, w, v) -> np.ndarray:
    a_d, K = st.a_d, st.gain
    x = np.empty(st.n)
    x[0] = system.mu0 + x0_dev
    x[1:] = signal.lfilter([1.0], [1.0, -a_d], w, zi=[a_d * x[0]])[0]
    z = x + v
    # x_post[k] = (1 - K) a_d x_post[k-1] + K z[k], seeded with prior mean mu0
    x_post = signal.lfilter([K], [1.0, -(1.0 - K) * a_d], z, zi=[(1.0 - K) * system.mu0])[0]
    k = np.arange(st.first, st.n)
    return x[k] - a_d**st.d * x_post[k - st.d]


def _errors_from_dynamics(system: ScalarSystem, st: _Setup, x0_dev, w, v) -> np.ndarray:
    a_d, K, d = st.a_d, st.gain, st.d
    # posterior filter error e[k] = (1-K)(a_d e[k-1] + w[k-1]) - K v[k]
    drive = np.empty(st.n)
    drive[0] = (1.0 - K) * x0_dev - K * v[0]
    drive[1:] = (1.0 - K) * w - K * v[1:]
    e_post = signal.lfilter([1.0], [1.0, -(1.0 - K) * a_d], drive)
    # noise accumulated over the last d steps: sum_j a_d^j w[k-1-j], j < d
    if d > 0:
        kernel = a_d ** np.arange(d)
        acc = np.concatenate(([0.0], signal.fftconvolve(w, kernel)[: st.n - 1]))
    else:
        acc = np.zeros(st.n)
    k = np.arange(st.first, st.n)
    return a_d**d * e_post[k - d] + acc[k]


def run_trial(
    config: NetworkConfig,
    tau: float,
    S: int,
    plan: SimPlan,
    trial_index: int,
    mode: str = "auto",
) -> np.ndarray:
    """Squared prediction errors of one trial after burn-in.

    ``mode='state'`` simulates the plant, the measurements and the filter;
    ``mode='error'`` propagates the error recursion directly, which stays
    bounded for unstable plants.  ``auto`` picks ``error`` iff ``a > 0``.
    Identical ``(plan.seed, trial_index)`` give identical output.
    """
    st = _setup(config, tau, S, plan)
    if mode == "auto":
        mode = "error" if config.system.a > 0 else "state"
    rng = trial_rng(plan.seed, trial_index)
    draws = _draw(rng, st, config.system.p0)
    if mode == "state":
        err = _errors_from_state(config.system, st, *draws)
    elif mode == "error":
        err = _errors_from_dynamics(config.system, st, *draws)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return err * err


def monte_carlo_variance(
    config: NetworkConfig,
    tau: float,
    S: int | None = None,
    plan: SimPlan | None = None,
    workers: int | None = None,
) -> SimResult:
    """Empirical steady-state prediction error variance with a batch-means stderr.

    Each trial is one batch.  A single-trial plan is split into contiguous
    batches instead.
    """
    S = config.sensors if S is None else S
    plan = plan or SimPlan()
    st = _setup(config, tau, S, plan)

    def one(i):
        sq = run_trial(config, tau, S, plan, i)
        return math.fsum(sq), sq.size, sq

    indices = range(plan.trials)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(one, indices))
    else:
        parts = [one(i) for i in indices]

    total = math.fsum(p[0] for p in parts)
    samples = sum(p[1] for p in parts)
    empirical = total / samples
    if plan.trials > 1:
        batch = np.array([p[0] / p[1] for p in parts])
    else:
        batch = np.array([b.mean() for b in np.array_split(parts[0][2], SINGLE_TRIAL_BATCHES)])
    stderr = float(np.std(batch, ddof=1) / math.sqrt(batch.size))
    analytic = steady_state_error_variance(config, tau, S).total
    z = (empirical - analytic) / stderr if stderr > 0 else math.inf
    return SimResult(empirical, stderr, samples, analytic, z, st.d, st.residual)
