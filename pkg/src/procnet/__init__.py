"""Optimal preprocessing in sensor processing networks with latency."""

from .analytic import (
    LimitPair,
    filter_steady_state_variance,
    measurement_noise_variance,
    open_loop_projection,
    steady_state_error_variance,
    tau_upper_bound,
    total_delay,
    variance_limits,
)
from .errors import (
    BracketFailure,
    ConfigError,
    HorizonTooShort,
    InvalidConfig,
    NegativeDelayParam,
    NonPositiveNoise,
    NonPositiveTau,
    ProcNetError,
    RootScanFailure,
    ZeroSensors,
)
from .model import (
    DelayBreakdown,
    DelayKind,
    DelayLaw,
    DelayModel,
    NetworkConfig,
    PreprocessingKind,
    PreprocessingModel,
    ScalarSystem,
    VarianceBreakdown,
    dump_config,
    load_config,
    parse_config,
    validate,
)
from .optimize import (
    Method,
    Optimum,
    SensorCountResult,
    joint_optimize,
    optimal_sensor_count,
    optimal_tau,
    optimal_tau_exponential,
    optimal_tau_inverse_linear,
    optimal_tau_power,
    optimal_tau_with_compression,
    tau_opt_sensitivity,
)

__version__ = "0.1.0"
