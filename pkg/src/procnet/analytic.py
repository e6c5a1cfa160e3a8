"""Closed-form steady-state error variance of a delayed scalar Kalman predictor.

The fused estimate is a steady-state Kalman filter on measurements that are
``tau_tot`` time units old, pushed forward open-loop to the current time.
Its error variance is

    P = p_inf(r) * exp(2 a T) + sigma2_w * (exp(2 a T) - 1) / (2 a)

where ``r`` is the (virtual single-sensor) measurement noise intensity and
``T`` the total delay.  The first term is the projected filter error, the
second the process noise accumulated over the delay window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonPositiveNoise, NonPositiveTau
from .model import (
    DelayBreakdown,
    DelayKind,
    DelayLaw,
    NetworkConfig,
    PreprocessingKind,
    PreprocessingModel,
    ScalarSystem,
    VarianceBreakdown,
)

__all__ = [
    "LimitPair",
    "measurement_noise_variance",
    "measurement_noise_slope",
    "filter_steady_state_variance",
    "open_loop_projection",
    "accumulated_noise",
    "total_delay",
    "steady_state_error_variance",
    "variance_derivative",
    "variance_limits",
    "tau_upper_bound",
]

TAU_FLOOR = 1e-300
# below this |2 a d| the a -> 0 limit sigma2_w * d is used verbatim
_SMALL_EXPONENT = 1e-12


@dataclass(frozen=True)
class LimitPair:
    at_zero: float
    at_infinity: float


def _exp(x: float) -> float:
    # saturate instead of raising: unstable plants legitimately reach +inf
    return math.exp(x) if x < 709.0 else math.inf


def _require_tau(tau: float, what: str = "tau") -> None:
    if not tau > TAU_FLOOR:
        raise NonPositiveTau(f"{what} must be > 0 for this law, got {tau!r}")


def measurement_noise_variance(model: PreprocessingModel, tau: float) -> float:
    """Noise intensity after ``tau`` time units of preprocessing."""
    kind = model.kind
    if kind is PreprocessingKind.EXPONENTIAL:
        if tau < 0:
            raise NonPositiveTau(f"tau must be >= 0, got {tau!r}")
        return model.b * math.exp(-model.gamma * tau)
    _require_tau(tau)
    if kind is PreprocessingKind.INVERSE_LINEAR:
        return model.b / tau
    return model.b / tau**model.gamma


def measurement_noise_slope(model: PreprocessingModel, tau: float) -> float:
    """d sigma_v^2 / d tau."""
    kind = model.kind
    if kind is PreprocessingKind.EXPONENTIAL:
        return -model.gamma * model.b * math.exp(-model.gamma * tau)
    _require_tau(tau)
    if kind is PreprocessingKind.INVERSE_LINEAR:
        return -model.b / (tau * tau)
    return -model.gamma * model.b / tau ** (model.gamma + 1.0)


def _check_noise(system: ScalarSystem, r: float) -> None:
    if not system.sigma2_w > 0:
        raise NonPositiveNoise(f"sigma2_w must be > 0, got {system.sigma2_w!r}")
    if not r > 0:
        raise NonPositiveNoise(f"measurement noise intensity must be > 0, got {r!r}")


def filter_steady_state_variance(system: ScalarSystem, r: float) -> float:
    """Positive root of ``2 a p + sigma2_w - p**2 / r = 0``.

    Equals ``r * (a + sqrt(a**2 + sigma2_w / r))``; evaluated through the
    conjugate form so that stable plants (``a < 0``) do not cancel.
    """
    _check_noise(system, r)
    a, q = system.a, system.sigma2_w
    if math.isinf(r):
        # filter is blind: open-loop stationary variance (infinite unless a < 0)
        return q / (-2.0 * a) if a < 0 else math.inf
    root = math.sqrt(a * a + q / r)
    if a <= 0:
        return q / (root - a)
    return r * (a + root)


def _filter_slope(system: ScalarSystem, r: float) -> float:
    """d p_inf / d r = (a + R)**2 / (2 R) with R = sqrt(a**2 + sigma2_w / r)."""
    a, q = system.a, system.sigma2_w
    root = math.sqrt(a * a + q / r)
    a_plus = (q / r) / (root - a) if a <= 0 else a + root
    return a_plus * a_plus / (2.0 * root)


def accumulated_noise(system: ScalarSystem, d: float) -> float:
    """Variance of the process noise integrated over a window of length ``d``."""
    a, q = system.a, system.sigma2_w
    x = 2.0 * a * d
    if abs(x) < _SMALL_EXPONENT:
        return q * d
    return q * (math.expm1(x) if x < 709.0 else math.inf) / (2.0 * a)


def open_loop_projection(p: float, system: ScalarSystem, d: float) -> float:
    """Error variance after predicting open-loop for ``d`` time units from ``p``."""
    if d < 0:
        raise ValueError(f"projection horizon must be >= 0, got {d!r}")
    return p * _exp(2.0 * system.a * d) + accumulated_noise(system, d)


def _law_delay(law: DelayLaw, tau: float, name: str) -> float:
    if law.kind is DelayKind.NONE:
        return 0.0
    if law.kind is DelayKind.CONSTANT:
        return law.value
    _require_tau(tau, f"tau (compressing {name} delay)")
    return law.value / tau


def _law_slope(law: DelayLaw, tau: float) -> float:
    return -law.value / (tau * tau) if law.kind is DelayKind.COMPRESSING else 0.0


def _sensor_count(config: NetworkConfig, S: int | None) -> int:
    if S is None:
        return config.sensors
    if not 1 <= S <= config.sensors:
        raise ValueError(f"sensor count must lie in 1..{config.sensors}, got {S}")
    return int(S)


def total_delay(config: NetworkConfig, tau: float, S: int | None = None) -> DelayBreakdown:
    """Age of the freshest fused information when ``S`` sensors are fused."""
    S = _sensor_count(config, S)
    if tau < 0:
        raise NonPositiveTau(f"tau must be >= 0, got {tau!r}")
    tau_c = _law_delay(config.delays.comm, tau, "communication")
    tau_f = _law_delay(config.delays.fusion, tau, "fusion")
    tau_s = tau + tau_c
    tau_f_tot = S * tau_f
    return DelayBreakdown(tau, tau_c, tau_s, tau_f_tot, tau_s + tau_f_tot)


def steady_state_error_variance(
    config: NetworkConfig, tau: float, S: int | None = None
) -> VarianceBreakdown:
    """Steady-state variance of the current-time estimate for ``S`` fused sensors.

    ``S`` homogeneous sensors act as one virtual sensor whose noise intensity
    is divided by ``S``; fusion latency still grows linearly with ``S``.
    ``S`` defaults to every sensor in the network.
    """
    S = _sensor_count(config, S)
    system = config.system
    r = measurement_noise_variance(config.preprocessing, tau) / S
    p_inf = filter_steady_state_variance(system, r)
    delays = total_delay(config, tau, S)
    growth = _exp(2.0 * system.a * delays.tau_tot)
    f = p_inf * growth
    q = accumulated_noise(system, delays.tau_tot)
    return VarianceBreakdown(f, q, f + q, delays)


def variance_derivative(config: NetworkConfig, tau: float, S: int | None = None) -> float:
    """dP/dtau, used to polish numerical minimizers.

    With T the total delay, ``P' = exp(2 a T) * (T' * (2 a p + sigma2_w) + p')``.
    """
    S = _sensor_count(config, S)
    system = config.system
    a, q = system.a, system.sigma2_w
    model = config.preprocessing
    r = measurement_noise_variance(model, tau) / S
    dr = measurement_noise_slope(model, tau) / S
    p = filter_steady_state_variance(system, r)
    dp = _filter_slope(system, r) * dr
    T = total_delay(config, tau, S).tau_tot
    dT = 1.0 + _law_slope(config.delays.comm, tau) + S * _law_slope(config.delays.fusion, tau)
    return _exp(2.0 * a * T) * (dT * (2.0 * a * p + q) + dp)


def variance_limits(config: NetworkConfig, S: int | None = None) -> LimitPair:
    """Limits of P as tau -> 0+ and tau -> inf for the inverse noise laws."""
    _sensor_count(config, S)
    a = config.system.a
    if a >= 0:
        return LimitPair(math.inf, math.inf)
    v = config.system.sigma2_w / (2.0 * abs(a))
    return LimitPair(v, v)


def tau_upper_bound(a: float, s: float) -> float:
    """Upper bound on the optimal delay of the inverse-linear model.

    ``s`` is the ratio sigma2_w / b.
    """
    if not s > 0:
        raise ValueError(f"s must be > 0, got {s!r}")
    if abs(a) > (s / 2.0) ** (1.0 / 3.0):
        return 1.0 / (2.0 * abs(a))
    return (1.0 / (4.0 * s)) ** (1.0 / 3.0)
