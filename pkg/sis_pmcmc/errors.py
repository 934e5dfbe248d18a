from __future__ import annotations


class SisError(Exception):
    """Base class for errors raised by sis_pmcmc."""


class ContractViolation(SisError, ValueError):
    """An operation was called with inputs outside its preconditions."""


class DataLoadError(SisError):
    """A data file could not be parsed or failed validation."""

    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = path
        self.line = line
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}")


class ConfigError(SisError):
    """Run configuration or command-line flags are invalid."""
