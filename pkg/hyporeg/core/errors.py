from __future__ import annotations


class HyporegError(Exception):
    """Base class of every error raised by hyporeg."""


class InvariantError(HyporegError, ValueError):
    """An input breaks a documented precondition: shape, range or domain."""


class GridMismatchError(InvariantError):
    """Two objects live on different grids."""


class BandResolutionError(InvariantError):
    """The grid cannot carry the half-band around height 1 within tolerance."""


class ScheduleError(InvariantError):
    """A (δ, α) schedule violates the limits a convergence run needs."""


class ConfigError(HyporegError, ValueError):
    """A setting, config file or flag cannot be used."""


class CsvFormatError(ConfigError):
    """A CSV input is malformed; carries the path and 1-based line number."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class NumericalError(HyporegError, RuntimeError):
    """A numerical run did not reach a usable result."""


class ExperimentError(NumericalError):
    """A rate-experiment cell failed; the message names the (δ, rep) cell."""
