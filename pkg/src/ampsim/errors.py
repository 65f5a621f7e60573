"""Exception types shared across the package."""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(SimulationError):
    """Invalid run configuration.

    Carries the offending key and, when available, the 1-based line number
    in the config file so the CLI can point at the exact spot.
    """

    def __init__(self, message: str, *, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ConvergenceError(SimulationError):
    """An iterative computation failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        self.achieved = achieved
        if achieved is not None:
            message = f"{message} (achieved residual {achieved:.3e})"
        super().__init__(message)


class FitRefusalError(SimulationError):
    """A decay fit is too poor to support extrapolation; no number is emitted."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
