import math
import os
from typing import Iterable, Union

import numpy as np

from triple_correlation.errors import NumericalOverflow

JOBS_ENV_VAR = "TRIPLE_CORRELATION_JOBS"

Number = Union[complex, float]


def ensure_finite(value: Number, what: str) -> Number:
    """Raise if a result is NaN or infinite.

    Args:
        value (Number): The computed value
        what (str): Name of the operation, used in the message

    Returns:
        Number: The unchanged value
    """
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise NumericalOverflow(f"{what} produced a non-finite value ({value})")
    return value


def complex_fsum(values: Iterable[complex]) -> complex:
    """Compensated summation of complex numbers (real and imaginary parts separately).

    Args:
        values (Iterable[complex]): Values to add

    Returns:
        complex: The sum
    """
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
    arr = arr.astype(complex, copy=False).ravel()
    return complex(math.fsum(arr.real), math.fsum(arr.imag))


def log1p_complex(u: np.ndarray) -> np.ndarray:
    """Elementwise log(1 + u) for complex u, accurate when |u| is tiny.

    numpy's complex log1p forms 1 + u explicitly, which loses the real part for small u.

    Args:
        u (np.ndarray): Complex array

    Returns:
        np.ndarray: log(1 + u)
    """
    u = np.asarray(u, dtype=complex)
    ur, ui = u.real, u.imag
    real = 0.5 * np.log1p(2.0 * ur + ur * ur + ui * ui)
    imag = np.arctan2(ui, 1.0 + ur)
    return real + 1j * imag


def jobs_from_env(default: int = 1) -> int:
    """Number of parallel workers, taken from the environment if set.

    Args:
        default (int, optional): Fallback. Defaults to 1.

    Returns:
        int: Worker count
    """
    raw = os.environ.get(JOBS_ENV_VAR)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)
