"""Optimal preprocessing delay and optimal number of fused sensors.

Closed-form cases are solved as polynomial roots by bisection on an
analytically guaranteed sign change.  The remaining noise laws are
minimized by golden section on the (quasi-convex) variance curve and then
polished by bisection on the analytic derivative.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .analytic import steady_state_error_variance, tau_upper_bound, variance_derivative
from .errors import BracketFailure, NonPositiveNoise, RootScanFailure
from .model import (
    DelayLaw,
    DelayModel,
    NetworkConfig,
    PreprocessingKind,
    PreprocessingModel,
    ScalarSystem,
    validate,
)
from .search import bisect, golden_section

__all__ = [
    "Method",
    "Optimum",
    "SensorCountResult",
    "JointResult",
    "optimal_tau_inverse_linear",
    "optimal_tau_power",
    "optimal_tau_exponential",
    "optimal_tau_with_compression",
    "optimal_tau",
    "tau_opt_sensitivity",
    "optimal_sensor_count",
    "joint_optimize",
    "cubic_residual",
    "quintic",
    "variance_crossing",
    "exponential_threshold",
]

TAU_TOL = 1e-10
TIE_RTOL = 1e-12
GOLDEN_LO = 1e-9
MAX_DOUBLINGS = 60


class Method(str, Enum):
    CUBIC_ROOT = "CubicRoot"
    QUINTIC_ROOT = "QuinticRoot"
    CLOSED_FORM_EXP = "ClosedFormExp"
    GOLDEN_SECTION = "GoldenSection"
    RAW_TRANSMISSION = "RawTransmission"


@dataclass(frozen=True)
class Optimum:
    tau_opt: float
    value: float
    method: Method
    bracket: tuple[float, float]
    iterations: int
    residual: float = math.nan
    roots: tuple[float, ...] = ()

    def rounded_up(self, quantum: float) -> float:
        """Smallest multiple of ``quantum`` not below ``tau_opt``.

        The variance usually rises faster to the left of the optimum, so
        rounding a quantized delay upward is the safer direction.
        """
        if not quantum > 0:
            raise ValueError("quantum must be > 0")
        return math.ceil(self.tau_opt / quantum - 1e-12) * quantum


@dataclass(frozen=True)
class SensorCountResult:
    s_opt: int
    value: float
    tie_with: int | None
    table: list[tuple[int, float]] = field(default_factory=list)


@dataclass(frozen=True)
class JointResult:
    s_opt: int
    optimum: Optimum
    table: list[tuple[int, Optimum]] = field(default_factory=list)

    def __iter__(self):
        # unpacks as (S_opt, optimum)
        return iter((self.s_opt, self.optimum))


def _check(system: ScalarSystem, b: float) -> None:
    if not system.sigma2_w > 0:
        raise NonPositiveNoise(f"sigma2_w must be > 0, got {system.sigma2_w!r}")
    if not b > 0:
        raise NonPositiveNoise(f"b must be > 0, got {b!r}")


def _single_sensor(system, kind, b, gamma=1.0, delays=None) -> NetworkConfig:
    return NetworkConfig(system, PreprocessingModel(kind, b, gamma), delays or DelayModel(), 1)


def cubic_residual(tau: float, a: float, s: float) -> float:
    """Normalized residual of ``s tau^3 + a^2 tau^2 - 1/4``."""
    terms = (s * tau**3, a * a * tau**2, 0.25)
    return abs(terms[0] + terms[1] - terms[2]) / max(terms)


def optimal_tau_inverse_linear(system: ScalarSystem, b: float) -> Optimum:
    """Optimal delay for noise ``b / tau``: positive root of the stationarity cubic."""
    _check(system, b)
    a2, s = system.a**2, system.sigma2_w / b

    def F(t):
        return (s * t + a2) * t * t - 0.25

    bound = hi = tau_upper_bound(system.a, s)
    # the bound can coincide with the root; nudge until F(hi) >= 0 in floating point
    f_hi = F(hi)
    while f_hi < 0:
        hi *= 1.0 + 4 * np.finfo(float).eps
        f_hi = F(hi)
    tau, it = bisect(F, 0.0, hi, -0.25, f_hi)
    # the exact root never exceeds the bound; only rounding can push it past
    tau = min(tau, bound)
    value = steady_state_error_variance(_single_sensor(system, PreprocessingKind.INVERSE_LINEAR, b), tau).total
    return Optimum(tau, value, Method.CUBIC_ROOT, (0.0, hi), it, cubic_residual(tau, system.a, s))


def _grow_bracket(P, lo: float, h0: float) -> tuple[float, float]:
    """Double ``h`` from ``h0`` until P increases; return a bracket of the minimizer."""
    h, fh = h0, P(h0)
    prev = None
    for _ in range(MAX_DOUBLINGS):
        h2 = 2.0 * h
        f2 = P(h2)
        if f2 > fh:
            return (prev if prev is not None else lo), h2
        prev, h, fh = h, h2, f2
    raise BracketFailure(f"variance never increased on [{h0!r}, {h!r}]; is the model quasi-convex?")


def _minimize(P, dP, lo: float, hi: float) -> tuple[float, tuple[float, float], int]:
    x, _, bracket, it = golden_section(P, lo, hi, tol=TAU_TOL)
    # golden section stalls at ~sqrt(eps) relative resolution on flat minima;
    # finish on the derivative's sign change when one is available nearby
    w = max(1e-6 * x, TAU_TOL)
    for _ in range(12):
        a_, b_ = max(lo, x - w), min(hi, x + w)
        d_lo, d_hi = dP(a_), dP(b_)
        if d_lo < 0 < d_hi:
            x, it2 = bisect(dP, a_, b_, d_lo, d_hi)
            return x, bracket, it + it2
        w *= 4.0
    return x, bracket, it


def optimal_tau_power(system: ScalarSystem, b: float, gamma: float) -> Optimum:
    """Optimal delay for noise ``b / tau**gamma`` by bracketed golden section."""
    _check(system, b)
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    cfg = _single_sensor(system, PreprocessingKind.INVERSE_POWER, b, gamma)
    return _golden_optimum(cfg, 1, GOLDEN_LO, 4.0 * tau_upper_bound(system.a, system.sigma2_w / b))


def _golden_optimum(cfg: NetworkConfig, S: int, lo: float, h0: float) -> Optimum:
    def P(t):
        return steady_state_error_variance(cfg, t, S).total

    def dP(t):
        return variance_derivative(cfg, t, S)

    lo, hi = _grow_bracket(P, lo, h0)
    tau, bracket, it = _minimize(P, dP, lo, hi)
    return Optimum(tau, P(tau), Method.GOLDEN_SECTION, (lo, hi), it)


def exponential_threshold(system: ScalarSystem, b: float) -> float:
    """Smallest decay rate for which some preprocessing beats raw transmission."""
    return 2.0 * math.sqrt(system.sigma2_w / b + system.a**2)


def optimal_tau_exponential(system: ScalarSystem, b: float, gamma: float) -> Optimum:
    """Optimal delay for noise ``b * exp(-gamma * tau)``.

    Below the rate threshold the variance is nondecreasing from tau = 0 and
    raw transmission (tau = 0) is optimal; above it the interior minimizer is
    found numerically.
    """
    _check(system, b)
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma!r}")
    cfg = _single_sensor(system, PreprocessingKind.EXPONENTIAL, b, gamma)
    if gamma <= exponential_threshold(system, b):
        value = steady_state_error_variance(cfg, 0.0).total
        return Optimum(0.0, value, Method.RAW_TRANSMISSION, (0.0, 0.0), 0)
    opt = _golden_optimum(cfg, 1, 0.0, 1.0 / gamma)
    if not opt.tau_opt > 0:
        raise BracketFailure("interior optimum expected above the rate threshold but tau_opt = 0")
    return opt


def quintic(tau, a: float, s: float, c: float):
    """Stationarity polynomial of the compressing-channel model, in factored form.

    ``(a^2 + s tau)(tau^2 - c)^2 - tau^2 / 4`` expands to
    ``s t^5 + a^2 t^4 - 2cs t^3 - (2a^2 c + 1/4) t^2 + c^2 s t + a^2 c^2``.
    """
    return (a * a + s * tau) * (tau * tau - c) ** 2 - 0.25 * tau * tau


def _quintic_terms(tau, a, s, c):
    a2 = a * a
    return np.array([
        s * tau**5, a2 * tau**4, -2 * c * s * tau**3,
        -(2 * a2 * c + 0.25) * tau**2, c * c * s * tau, a2 * c * c,
    ])


def optimal_tau_with_compression(
    system: ScalarSystem, b: float, c: float, n_grid: int = 4000
) -> Optimum:
    """Optimal delay for noise ``b / tau`` with communication delay ``c / tau``.

    All positive roots of the quintic are located by a log-spaced sign-change
    scan plus bisection; the largest one is the minimizer.
    """
    _check(system, b)
    if not c > 0:
        raise ValueError(f"c must be > 0, got {c!r}")
    a, s = system.a, system.sigma2_w / b
    scale = max(math.sqrt(c), tau_upper_bound(a, s))
    grid = np.geomspace(1e-6, 1e3 * scale, n_grid)
    # sqrt(c) separates the spurious root (below) from the minimizer (above)
    grid = np.unique(np.append(grid, math.sqrt(c)))
    values = quintic(grid, a, s, c)
    while values[-1] <= 0:
        grid = np.append(grid, 2 * grid[-1])
        values = np.append(values, quintic(grid[-1], a, s, c))
        if len(grid) > n_grid + MAX_DOUBLINGS:
            raise RootScanFailure("quintic stays nonpositive on the scan range")

    def Q(t):
        return float(quintic(t, a, s, c))

    roots, cells, total_it = [], [], 0
    sign = np.sign(values)
    for i in range(len(grid) - 1):
        if sign[i] == 0:
            roots.append(float(grid[i]))
            cells.append((float(grid[i]), float(grid[i])))
        elif sign[i] * sign[i + 1] < 0:
            r, it = bisect(Q, float(grid[i]), float(grid[i + 1]), float(values[i]), float(values[i + 1]))
            roots.append(r)
            cells.append((float(grid[i]), float(grid[i + 1])))
            total_it += it
    if not roots:
        raise RootScanFailure(f"no positive root of the quintic on [{grid[0]!r}, {grid[-1]!r}]")

    tau = roots[-1]
    cfg = _single_sensor(system, PreprocessingKind.INVERSE_LINEAR, b, delays=DelayModel(comm=DelayLaw.compressing(c)))
    value = steady_state_error_variance(cfg, tau).total
    scanned = np.array([steady_state_error_variance(cfg, float(t)).total for t in grid])
    worst = np.nanmin(scanned)
    if value > worst + 1e-12 * max(abs(worst), 1.0):
        raise RootScanFailure(
            f"largest quintic root tau={tau!r} (P={value!r}) is not the scan minimum (P={worst!r})"
        )
    terms = _quintic_terms(tau, a, s, c)
    residual = abs(Q(tau)) / np.max(np.abs(terms))
    return Optimum(tau, value, Method.QUINTIC_ROOT, cells[-1], total_it, float(residual), tuple(roots))


def optimal_tau(config: NetworkConfig, S: int | None = None) -> Optimum:
    """Optimal preprocessing delay when ``S`` of the sensors are fused.

    Sensor count enters the noise law as ``b / S``; constant latencies shift
    the delay by a fixed amount and leave the minimizer unchanged; every
    compressing law ``k / tau`` adds up into one effective coefficient.
    ``value`` is always re-evaluated on the full configuration.
    """
    validate(config)
    S = config.sensors if S is None else S
    if not 1 <= S <= config.sensors:
        raise ValueError(f"sensor count must lie in 1..{config.sensors}, got {S}")
    system, pre, delays = config.system, config.preprocessing, config.delays
    b_eff = pre.b / S
    c_eff = delays.comm.compression() + S * delays.fusion.compression()

    if c_eff == 0 and pre.kind is PreprocessingKind.INVERSE_LINEAR:
        opt = optimal_tau_inverse_linear(system, b_eff)
    elif c_eff == 0 and pre.kind is PreprocessingKind.INVERSE_POWER:
        opt = optimal_tau_power(system, b_eff, pre.gamma)
    elif c_eff == 0 and pre.kind is PreprocessingKind.EXPONENTIAL:
        opt = optimal_tau_exponential(system, b_eff, pre.gamma)
    elif pre.kind is PreprocessingKind.INVERSE_LINEAR:
        opt = optimal_tau_with_compression(system, b_eff, c_eff)
    else:
        h0 = 4.0 * max(tau_upper_bound(system.a, system.sigma2_w / b_eff), math.sqrt(c_eff))
        opt = _golden_optimum(config, S, GOLDEN_LO, h0)
    return replace(opt, value=steady_state_error_variance(config, opt.tau_opt, S).total)


def tau_opt_sensitivity(system: ScalarSystem, b: float) -> tuple[float, float]:
    """Implicit-function derivatives of the inverse-linear optimum.

    Returns ``(d tau / d s, d tau / d a^2)`` with ``s = sigma2_w / b``,
    i.e. ``-tau^2 / (3 s tau + 2 a^2)`` and ``-tau / (3 s tau + 2 a^2)``.
    """
    tau = optimal_tau_inverse_linear(system, b).tau_opt
    s, a2 = system.sigma2_w / b, system.a**2
    denom = 3.0 * s * tau + 2.0 * a2
    return -tau * tau / denom, -tau / denom


def optimal_sensor_count(config: NetworkConfig, tau: float) -> SensorCountResult:
    """Exhaustive search of the fused-sensor count at a fixed delay."""
    validate(config)
    table = [(S, steady_state_error_variance(config, tau, S).total) for S in range(1, config.sensors + 1)]
    s_opt, best = min(table, key=lambda row: (row[1], row[0]))
    tie_with = None
    rest = [row for row in table if row[0] != s_opt]
    if rest:
        s_run, p_run = min(rest, key=lambda row: (row[1], row[0]))
        if abs(p_run - best) <= TIE_RTOL * abs(best):
            tie_with = s_run
    return SensorCountResult(s_opt, best, tie_with, table)


def joint_optimize(config: NetworkConfig, workers: int | None = None) -> JointResult:
    """Best (sensor count, delay) pair; ties go to the smaller count."""
    validate(config)
    counts = range(1, config.sensors + 1)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            optima = list(pool.map(lambda S: optimal_tau(config, S), counts))
    else:
        optima = [optimal_tau(config, S) for S in counts]
    table = list(zip(counts, optima))
    s_opt, best = min(table, key=lambda row: (row[1].value, row[0]))
    return JointResult(s_opt, best, table)



def variance_crossing(
    first: NetworkConfig,
    second: NetworkConfig,
    lo: float,
    hi: float,
    S: int = 1,
    n_grid: int = 2000,
) -> float | None:
    """Smallest tau in ``[lo, hi]`` where the two variance curves cross, or None."""

    def diff(t):
        return steady_state_error_variance(first, t, S).total - steady_state_error_variance(second, t, S).total

    grid = np.linspace(lo, hi, n_grid)
    values = [diff(float(t)) for t in grid]
    for i in range(n_grid - 1):
        if values[i] == 0:
            return float(grid[i])
        if (values[i] > 0) != (values[i + 1] > 0):
            root, _ = bisect(diff, float(grid[i]), float(grid[i + 1]), values[i], values[i + 1])
            return root
    return None
