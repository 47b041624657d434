import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np

from triple_correlation.errors import DomainError, PoleAtOne, SingularInput
from triple_correlation.primes import PrimeTable, a_term, b_term, p_term, q_term
from triple_correlation.util import ensure_finite
from triple_correlation.zeta import (
    DEFAULT_PARAMS,
    EulerMaclaurinParams,
    zeta,
    zeta_log_deriv,
    zeta_log_deriv_prime,
)

logger = logging.getLogger(__name__)

SINGULAR_TOLERANCE = 1e-12
# below this |alpha_1 - alpha_2| the removable singularity of i3 is averaged out
REMOVABLE_SWITCH = 1e-6
REMOVABLE_RADIUS = 1e-3
REMOVABLE_POINTS = 8


@dataclass(frozen=True)
class MomentResult(object):
    """A moment integral over 0 < t < T.

    Args:
        value (complex): The integral
        t_upper (float): Height T
    """

    value: complex
    t_upper: float


def _check_height(T: float):
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")


def t_power_integral(z: complex, T: float) -> complex:
    """Integral of (t/2pi)^-z over 0 < t < T, continued analytically in z.

    Args:
        z (complex): Exponent, z != 1
        T (float): Height

    Returns:
        complex: 2pi (T/2pi)^(1-z) / (1-z)
    """
    z = complex(z)
    _check_height(T)
    if abs(z - 1) < SINGULAR_TOLERANCE:
        raise PoleAtOne(f"t_power_integral has a pole at z = 1, got {z}")
    log_u = math.log(T / (2 * math.pi))
    return ensure_finite(
        2 * math.pi * cmath.exp((1 - z) * log_u) / (1 - z), "t_power_integral"
    )


def log_weighted_power_integral(z: complex, T: float) -> complex:
    """Integral of log(t/2pi) (t/2pi)^-z over 0 < t < T.

    This is minus the z-derivative of `t_power_integral`.

    Args:
        z (complex): Exponent, z != 1
        T (float): Height

    Returns:
        complex: The integral
    """
    z = complex(z)
    _check_height(T)
    if abs(z - 1) < SINGULAR_TOLERANCE:
        raise PoleAtOne(f"log_weighted_power_integral has a pole at z = 1, got {z}")
    log_u = math.log(T / (2 * math.pi))
    w = 1 - z
    return ensure_finite(
        2 * math.pi * cmath.exp(w * log_u) * (log_u / w - 1 / (w * w)),
        "log_weighted_power_integral",
    )


def log_power_integral(k: int, T: float) -> float:
    """Integral of log^k(t/2pi) over 0 < t < T.

    Args:
        k (int): Power, 0 <= k <= 3
        T (float): Height

    Returns:
        float: 2pi u sum_j (-1)^(k-j) k!/j! log^j u at u = T/2pi
    """
    if k not in (0, 1, 2, 3):
        raise DomainError(f"log power must be in 0..3, got {k}")
    _check_height(T)
    u = T / (2 * math.pi)
    log_u = math.log(u)
    total = math.fsum(
        (-1) ** (k - j) * math.factorial(k) / math.factorial(j) * log_u**j
        for j in range(k + 1)
    )
    return 2 * math.pi * u * total


def _zeta_pair(x: complex, params: EulerMaclaurinParams) -> complex:
    """zeta(1 + x) zeta(1 - x)."""
    return zeta(1 + x, params) * zeta(1 - x, params)


def _block(
    x: complex,
    y: complex,
    w: complex,
    T: float,
    table: PrimeTable,
    params: EulerMaclaurinParams,
) -> complex:
    """The (t/2pi)^-x block of the three-point moment; w is the shift inside zeta'/zeta(1+w)."""
    inner = a_term(x, table).value * (
        zeta_log_deriv(1 + w, params) - zeta_log_deriv(1 + y, params)
    )
    inner += p_term(x, y, table).value
    return t_power_integral(x, T) * _zeta_pair(x, params) * inner


def _i3_direct(
    alpha1: complex,
    alpha2: complex,
    beta: complex,
    T: float,
    table: PrimeTable,
    params: EulerMaclaurinParams,
) -> complex:
    x, y = alpha1 + beta, alpha2 + beta
    w = alpha2 - alpha1
    value = q_term(x, y, table).value * T
    value += _block(x, y, w, T, table, params)
    value += _block(y, x, -w, T, table, params)
    return value


def i3(
    alpha1: complex,
    alpha2: complex,
    beta: complex,
    T: float,
    table: PrimeTable,
    params: EulerMaclaurinParams = DEFAULT_PARAMS,
) -> MomentResult:
    """The moment of two zeta'/zeta(1/2+alpha+it) and one zeta'/zeta(1/2+beta-it) over 0 < t < T.

    Args:
        alpha1 (complex): First shift
        alpha2 (complex): Second shift
        beta (complex): Conjugate shift
        T (float): Height
        table (PrimeTable): Primes for A, P and Q
        params (EulerMaclaurinParams, optional): Zeta accuracy. Defaults to DEFAULT_PARAMS.

    Returns:
        MomentResult: The moment
    """
    alpha1, alpha2, beta = complex(alpha1), complex(alpha2), complex(beta)
    _check_height(T)
    if abs(alpha1 + beta) < SINGULAR_TOLERANCE:
        raise SingularInput(f"i3 is singular on alpha1 + beta = 0 ({alpha1}, {beta})")
    if abs(alpha2 + beta) < SINGULAR_TOLERANCE:
        raise SingularInput(f"i3 is singular on alpha2 + beta = 0 ({alpha2}, {beta})")

    if abs(alpha1 - alpha2) < REMOVABLE_SWITCH:
        # mean value over a small circle in alpha2 around alpha1
        angles = 2 * np.pi * np.arange(REMOVABLE_POINTS) / REMOVABLE_POINTS
        samples = [
            _i3_direct(alpha1, alpha1 + REMOVABLE_RADIUS * cmath.exp(1j * a), beta, T, table, params)
            for a in angles
        ]
        value = sum(samples) / REMOVABLE_POINTS
    else:
        value = _i3_direct(alpha1, alpha2, beta, T, table, params)
    return MomentResult(complex(ensure_finite(value, "i3")), T)


def i1(
    alpha: complex,
    beta: complex,
    T: float,
    table: PrimeTable,
    params: EulerMaclaurinParams = DEFAULT_PARAMS,
) -> MomentResult:
    """The log-weighted moment of zeta'/zeta(1/2+alpha+it) zeta'/zeta(1/2+beta-it) over 0 < t < T.

    Args:
        alpha (complex): Shift
        beta (complex): Conjugate shift
        T (float): Height
        table (PrimeTable): Primes for A and B
        params (EulerMaclaurinParams, optional): Zeta accuracy. Defaults to DEFAULT_PARAMS.

    Returns:
        MomentResult: The moment
    """
    x = complex(alpha) + complex(beta)
    _check_height(T)
    if abs(x) < SINGULAR_TOLERANCE:
        raise SingularInput(f"i1 is singular on alpha + beta = 0 ({alpha}, {beta})")
    j1 = log_power_integral(1, T)
    value = (zeta_log_deriv_prime(1 + x, params) - b_term(x, table).value) * j1
    value += _zeta_pair(x, params) * a_term(x, table).value * log_weighted_power_integral(x, T)
    return MomentResult(complex(ensure_finite(value, "i1")), T)


def s_term(
    x: float, T: float, table: PrimeTable, params: EulerMaclaurinParams = DEFAULT_PARAMS
) -> complex:
    """One of the lower-order pair terms that appear when two of three zeros coincide.

    Args:
        x (float): Real separation, x != 0
        T (float): Height
        table (PrimeTable): Primes for A and B
        params (EulerMaclaurinParams, optional): Zeta accuracy. Defaults to DEFAULT_PARAMS.

    Returns:
        complex: The integral of 1/2 log^2 + (zeta'/zeta)'(1+ix) + (t/2pi)^-ix zeta zeta A(ix) - B(ix)
    """
    x = float(x)
    _check_height(T)
    if abs(x) < SINGULAR_TOLERANCE:
        raise SingularInput("s_term is singular at x = 0")
    ix = 1j * x
    value = 0.5 * log_power_integral(2, T)
    value += T * (zeta_log_deriv_prime(1 + ix, params) - b_term(ix, table).value)
    value += t_power_integral(ix, T) * _zeta_pair(ix, params) * a_term(ix, table).value
    return complex(ensure_finite(value, "s_term"))


def two_point_bracket(
    r: float, T: float, table: PrimeTable, params: EulerMaclaurinParams = DEFAULT_PARAMS
) -> float:
    """The pair-correlation density of zeros up to height T, times (2pi)^2, at separation r.

    Args:
        r (float): Separation, r != 0
        T (float): Height
        table (PrimeTable): Primes for A and B
        params (EulerMaclaurinParams, optional): Zeta accuracy. Defaults to DEFAULT_PARAMS.

    Returns:
        float: s(r) + s(-r), which is real
    """
    if abs(r) < SINGULAR_TOLERANCE:
        raise SingularInput("two_point_bracket is singular at r = 0")
    total = s_term(r, T, table, params) + s_term(-r, T, table, params)
    if abs(total.imag) > 1e-9 * abs(total):
        logger.warning("two-point bracket at r=%g has imaginary residue %g", r, total.imag)
    return total.real


def one_point_count(T: float) -> float:
    """Main term of the number of zeros with 0 < gamma < T.

    Args:
        T (float): Height, T > 2pi

    Returns:
        float: (T/2pi) (log(T/2pi) - 1)
    """
    if not T > 2 * math.pi:
        raise DomainError(f"T must exceed 2pi, got {T}")
    u = T / (2 * math.pi)
    return u * (math.log(u) - 1)
