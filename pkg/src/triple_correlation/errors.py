from pathlib import Path
from typing import Optional, Union


class TripleCorrelationError(Exception):
    """Base class of all errors raised by this package."""


class DomainError(TripleCorrelationError, ValueError):
    """An argument lies outside the region where an operation is valid."""


class PoleAtOne(DomainError):
    """Evaluation requested at (or within 1e-12 of) a pole at 1."""


class PoleAtLatticePoint(DomainError):
    """Evaluation of the z(x) family at a point of 2*pi*i*Z."""


class SingularInput(DomainError):
    """Evaluation requested on a singular line of a moment or bracket."""


class NumericalOverflow(TripleCorrelationError, ArithmeticError):
    """A public operation produced a non-finite value."""


class FactorNearZero(TripleCorrelationError, ArithmeticError):
    """A local Euler factor is too close to zero to take its logarithm."""


class ResourceError(TripleCorrelationError, RuntimeError):
    """A request exceeds the configured memory budget."""


class GridMismatch(TripleCorrelationError, ValueError):
    """Two grids (or a grid and a sampled function) are incompatible."""


class ConfigError(TripleCorrelationError, ValueError):
    """An engine configuration value is invalid."""


class ParseError(TripleCorrelationError, ValueError):
    """Malformed input file.

    Args:
        message (str): What went wrong
        path (Union[str, Path], optional): The offending file. Defaults to None.
        line_number (int, optional): 1-based line number. Defaults to None.
    """

    def __init__(
        self,
        message: str,
        path: Optional[Union[str, Path]] = None,
        line_number: Optional[int] = None,
    ):
        self.path = path
        self.line_number = line_number
        location = ""
        if path is not None:
            location = f"{path}"
            if line_number is not None:
                location += f":{line_number}"
            location += ": "
        super().__init__(f"{location}{message}")


class EmptyFile(ParseError):
    """An input file contains no data lines."""
