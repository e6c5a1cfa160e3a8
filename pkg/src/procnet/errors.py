"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class ProcNetError(Exception):
    """Base class for every error raised by :mod:`procnet`."""


class InvalidConfig(ProcNetError, ValueError):
    def __init__(self, message: str = "", violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class NonPositiveNoise(InvalidConfig):
    pass


class NegativeDelayParam(InvalidConfig):
    pass


class ZeroSensors(InvalidConfig):
    pass


class ConfigError(InvalidConfig):
    """The config text could not be parsed (unknown or missing key, bad number)."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class NonPositiveTau(ProcNetError, ValueError):
    pass


class SolverError(ProcNetError, RuntimeError):
    pass


class BracketFailure(SolverError):
    pass


class RootScanFailure(SolverError):
    pass


class HorizonTooShort(ProcNetError, ValueError):
    pass
