"""Domain types for a homogeneous processing network and their config format.

All types are frozen dataclasses.  Construction does not validate; call
:func:`validate` (or :func:`check`) before handing a config to the solvers so
that every violated invariant is reported at once.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import operator
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import NamedTuple

from .errors import (
    ConfigError,
    InvalidConfig,
    NegativeDelayParam,
    NonPositiveNoise,
    ZeroSensors,
)

__all__ = [
    "ScalarSystem",
    "PreprocessingKind",
    "PreprocessingModel",
    "DelayKind",
    "DelayLaw",
    "DelayModel",
    "NetworkConfig",
    "DelayBreakdown",
    "VarianceBreakdown",
    "Violation",
    "check",
    "validate",
    "parse_config",
    "load_config",
    "dump_config",
    "config_digest",
]


@dataclass(frozen=True)
class ScalarSystem:
    """Scalar plant ``dx = a x dt + dw`` with initial law ``x0 ~ (mu0, p0)``."""

    a: float
    sigma2_w: float
    mu0: float = 0.0
    p0: float = 0.0

    def __post_init__(self):
        # numpy scalars would leak into reprs and overflow warnings
        for name in ("a", "sigma2_w", "mu0", "p0"):
            object.__setattr__(self, name, float(getattr(self, name)))


class PreprocessingKind(str, Enum):
    INVERSE_LINEAR = "inverse_linear"
    INVERSE_POWER = "inverse_power"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class PreprocessingModel:
    """Measurement-noise intensity as a decreasing function of preprocessing time.

    ``inverse_linear``: b / tau, ``inverse_power``: b / tau**gamma,
    ``exponential``: b * exp(-gamma * tau).  ``gamma`` is ignored by the
    inverse-linear law.
    """

    kind: PreprocessingKind = PreprocessingKind.INVERSE_LINEAR
    b: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PreprocessingKind(self.kind))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "gamma", float(self.gamma))


class DelayKind(str, Enum):
    NONE = "none"
    CONSTANT = "constant"
    COMPRESSING = "compressing"


@dataclass(frozen=True)
class DelayLaw:
    """One latency contribution: absent, constant, or ``value / tau``.

    ``NONE`` is kept distinct from ``constant(0)`` so reports can tell an
    unmodelled channel from an instantaneous one.
    """

    kind: DelayKind = DelayKind.NONE
    value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DelayKind(self.kind))
        object.__setattr__(self, "value", float(self.value))

    @classmethod
    def none(cls) -> DelayLaw:
        return cls(DelayKind.NONE, 0.0)

    @classmethod
    def constant(cls, delay: float) -> DelayLaw:
        return cls(DelayKind.CONSTANT, float(delay))

    @classmethod
    def compressing(cls, coefficient: float) -> DelayLaw:
        return cls(DelayKind.COMPRESSING, float(coefficient))

    @property
    def is_compressing(self) -> bool:
        return self.kind is DelayKind.COMPRESSING

    def constant_part(self) -> float:
        return self.value if self.kind is DelayKind.CONSTANT else 0.0

    def compression(self) -> float:
        return self.value if self.kind is DelayKind.COMPRESSING else 0.0


@dataclass(frozen=True)
class DelayModel:
    comm: DelayLaw = field(default_factory=DelayLaw.none)
    fusion: DelayLaw = field(default_factory=DelayLaw.none)

    @property
    def has_compression(self) -> bool:
        return self.comm.is_compressing or self.fusion.is_compressing


@dataclass(frozen=True)
class NetworkConfig:
    """Full problem instance: N identical sensors observing one scalar plant.

    The implied measurement matrix is the all-ones column of length
    ``sensors`` with noise covariance ``sigma_v^2(tau) * I``.
    """

    system: ScalarSystem
    preprocessing: PreprocessingModel = field(default_factory=PreprocessingModel)
    delays: DelayModel = field(default_factory=DelayModel)
    sensors: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sensors", operator.index(self.sensors))

    def replace(self, **changes) -> NetworkConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class DelayBreakdown:
    tau_p: float
    tau_c: float
    tau_s: float
    tau_f_tot: float
    tau_tot: float


@dataclass(frozen=True)
class VarianceBreakdown:
    """Steady-state prediction error variance split as ``f + q``.

    ``estimation_part`` is the filter variance projected over the total
    delay; ``noise_part`` is the process noise accumulated over that window.
    """

    estimation_part: float
    noise_part: float
    total: float
    delays: DelayBreakdown


class Violation(NamedTuple):
    code: type
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def check(config: NetworkConfig) -> list[Violation]:
    """Return every violated invariant of ``config`` (empty when valid)."""
    out: list[Violation] = []
    sys_, pre, dl = config.system, config.preprocessing, config.delays

    for name in ("a", "sigma2_w", "mu0", "p0"):
        if not _finite(getattr(sys_, name)):
            out.append(Violation(InvalidConfig, f"system.{name}", "must be a finite number"))
    if _finite(sys_.sigma2_w) and sys_.sigma2_w <= 0:
        out.append(Violation(NonPositiveNoise, "system.sigma2_w", f"must be > 0, got {sys_.sigma2_w}"))
    if _finite(sys_.p0) and sys_.p0 < 0:
        out.append(Violation(InvalidConfig, "system.p0", f"must be >= 0, got {sys_.p0}"))

    if not _finite(pre.b):
        out.append(Violation(InvalidConfig, "preprocessing.b", "must be a finite number"))
    elif pre.b <= 0:
        out.append(Violation(NonPositiveNoise, "preprocessing.b", f"must be > 0, got {pre.b}"))
    if pre.kind is not PreprocessingKind.INVERSE_LINEAR:
        if not _finite(pre.gamma) or pre.gamma <= 0:
            out.append(Violation(InvalidConfig, "preprocessing.gamma", f"must be > 0, got {pre.gamma}"))

    for slot, law in (("comm", dl.comm), ("fusion", dl.fusion)):
        key = {"comm": ("tau_c", "c"), "fusion": ("tau_f", "f")}[slot]
        if law.kind is DelayKind.NONE:
            continue
        if not _finite(law.value):
            out.append(Violation(InvalidConfig, f"delays.{slot}", "must be a finite number"))
        elif law.kind is DelayKind.CONSTANT and law.value < 0:
            out.append(Violation(NegativeDelayParam, f"delays.{key[0]}", f"must be >= 0, got {law.value}"))
        elif law.kind is DelayKind.COMPRESSING and law.value <= 0:
            out.append(Violation(NegativeDelayParam, f"delays.{key[1]}", f"must be > 0, got {law.value}"))

    if isinstance(config.sensors, bool) or not isinstance(config.sensors, int):
        out.append(Violation(InvalidConfig, "network.sensors", "must be an integer"))
    elif config.sensors < 1:
        out.append(Violation(ZeroSensors, "network.sensors", f"must be >= 1, got {config.sensors}"))
    return out


def validate(config: NetworkConfig) -> NetworkConfig:
    """Return ``config`` unchanged or raise with the full violation list.

    The raised class is that of the first violation; ``err.violations``
    holds all of them.
    """
    violations = check(config)
    if violations:
        cls = violations[0].code
        raise cls("; ".join(str(v) for v in violations), violations=violations)
    return config


# ---------------------------------------------------------------------------
# config file format
# ---------------------------------------------------------------------------

_SECTIONS = {
    "system": ("a", "sigma2_w", "mu0", "p0"),
    "preprocessing": ("kind", "b", "gamma"),
    "delays": ("comm_kind", "tau_c", "c", "fusion_kind", "tau_f", "f"),
    "network": ("sensors",),
}


def _num(section, key, raw) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}", key=key) from None


def _delay_law(sec, kind_key, const_key, comp_key) -> DelayLaw:
    raw_kind = sec.get(kind_key, "none").strip().lower()
    try:
        kind = DelayKind(raw_kind)
    except ValueError:
        raise ConfigError(f"[delays] {kind_key}: unknown delay kind {raw_kind!r}", key=kind_key) from None
    wanted = {DelayKind.CONSTANT: const_key, DelayKind.COMPRESSING: comp_key}.get(kind)
    for key in (const_key, comp_key):
        if key in sec and key != wanted:
            raise ConfigError(f"[delays] {key}: not used when {kind_key} = {kind.value}", key=key)
    if wanted is None:
        return DelayLaw.none()
    if wanted not in sec:
        raise ConfigError(f"[delays] missing required key {wanted!r} for {kind_key} = {kind.value}", key=wanted)
    return DelayLaw(kind, _num("delays", wanted, sec[wanted]))


def parse_config(text: str) -> NetworkConfig:
    """Parse the sectioned key/value config format.

    Unknown sections or keys, missing required keys and malformed numbers
    raise :class:`ConfigError` naming the offending key.  The result is not
    validated.
    """
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    for name in parser.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]", key=name)
        for key in parser[name]:
            if key not in _SECTIONS[name]:
                raise ConfigError(f"[{name}] unknown key {key!r}", key=key)

    def sec(name):
        return parser[name] if parser.has_section(name) else {}

    s = sec("system")
    for key in ("a", "sigma2_w"):
        if key not in s:
            raise ConfigError(f"[system] missing required key {key!r}", key=key)
    system = ScalarSystem(
        a=_num("system", "a", s["a"]),
        sigma2_w=_num("system", "sigma2_w", s["sigma2_w"]),
        mu0=_num("system", "mu0", s.get("mu0", "0")),
        p0=_num("system", "p0", s.get("p0", "0")),
    )

    p = sec("preprocessing")
    raw_kind = p.get("kind", "inverse_linear").strip().lower()
    try:
        kind = PreprocessingKind(raw_kind)
    except ValueError:
        raise ConfigError(f"[preprocessing] kind: unknown model {raw_kind!r}", key="kind") from None
    if "b" not in p:
        raise ConfigError("[preprocessing] missing required key 'b'", key="b")
    if kind is not PreprocessingKind.INVERSE_LINEAR and "gamma" not in p:
        raise ConfigError(f"[preprocessing] missing required key 'gamma' for kind = {kind.value}", key="gamma")
    pre = PreprocessingModel(kind, _num("preprocessing", "b", p["b"]), _num("preprocessing", "gamma", p.get("gamma", "1")))

    d = sec("delays")
    delays = DelayModel(
        comm=_delay_law(d, "comm_kind", "tau_c", "c"),
        fusion=_delay_law(d, "fusion_kind", "tau_f", "f"),
    )

    n = sec("network")
    raw_n = n.get("sensors", "1").strip()
    try:
        sensors = int(raw_n)
    except ValueError:
        raise ConfigError(f"[network] sensors: not an integer: {raw_n!r}", key="sensors") from None
    return NetworkConfig(system, pre, delays, sensors)


def load_config(path) -> NetworkConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def dump_config(config: NetworkConfig) -> str:
    """Serialize to the config format; ``parse_config`` inverts it exactly."""
    sys_, pre, dl = config.system, config.preprocessing, config.delays
    lines = [
        "[system]",
        f"a = {sys_.a!r}",
        f"sigma2_w = {sys_.sigma2_w!r}",
        f"mu0 = {sys_.mu0!r}",
        f"p0 = {sys_.p0!r}",
        "",
        "[preprocessing]",
        f"kind = {pre.kind.value}",
        f"b = {pre.b!r}",
        f"gamma = {pre.gamma!r}",
        "",
        "[delays]",
    ]
    for kind_key, const_key, comp_key, law in (
        ("comm_kind", "tau_c", "c", dl.comm),
        ("fusion_kind", "tau_f", "f", dl.fusion),
    ):
        lines.append(f"{kind_key} = {law.kind.value}")
        if law.kind is DelayKind.CONSTANT:
            lines.append(f"{const_key} = {law.value!r}")
        elif law.kind is DelayKind.COMPRESSING:
            lines.append(f"{comp_key} = {law.value!r}")
    lines += ["", "[network]", f"sensors = {config.sensors}", ""]
    return "\n".join(lines)


def config_digest(config: NetworkConfig) -> str:
    return hashlib.sha256(dump_config(config).encode()).hexdigest()[:16]
