import cmath
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import bernoulli

from triple_correlation.errors import DomainError, PoleAtOne
from triple_correlation.util import ensure_finite

logger = logging.getLogger(__name__)

ComplexValue = complex

POLE_TOLERANCE = 1e-12
MIN_REAL_PART = -0.5
MAX_IMAG_PART = 1e4


@dataclass(frozen=True)
class EulerMaclaurinParams(object):
    """Accuracy knobs of the Euler-Maclaurin evaluation.

    The direct sum runs over n < cutoff_terms + ceil(|Im s|).

    Args:
        cutoff_terms (int): Direct-sum length on top of ceil(|Im s|), at least 10
        bernoulli_depth (int): Number of B_2k correction terms, in [2, 30]
        switch_radius (float): Radius around s = 1 inside which the Laurent branches are used
    """

    cutoff_terms: int = 20
    bernoulli_depth: int = 12
    switch_radius: float = 1e-3

    def __post_init__(self):
        if self.cutoff_terms < 10:
            raise DomainError(f"cutoff_terms must be >= 10, got {self.cutoff_terms}")
        if not 2 <= self.bernoulli_depth <= 30:
            raise DomainError(
                f"bernoulli_depth must be in [2, 30], got {self.bernoulli_depth}"
            )
        if not 0 < self.switch_radius < 0.1:
            raise DomainError(
                f"switch_radius must be in (0, 0.1), got {self.switch_radius}"
            )

    def doubled(self) -> "EulerMaclaurinParams":
        """Parameters with both depths doubled, for self-consistency checks.

        Returns:
            EulerMaclaurinParams: The deeper parameters
        """
        return EulerMaclaurinParams(
            2 * self.cutoff_terms, 2 * self.bernoulli_depth, self.switch_radius
        )


DEFAULT_PARAMS = EulerMaclaurinParams()


@lru_cache(maxsize=None)
def _bernoulli_coefficients(depth: int) -> Tuple[float, ...]:
    """B_2k / (2k)! for k = 1..depth."""
    b = bernoulli(2 * depth)
    return tuple(
        float(b[2 * k]) / math.factorial(2 * k) for k in range(1, depth + 1)
    )


@lru_cache(maxsize=None)
def stieltjes_constants(count: int = 4) -> Tuple[float, ...]:
    """The first Stieltjes constants gamma_0, ..., gamma_{count-1}.

    Uses the defining limit of sum(log^n k / k) - log^{n+1} m / (n+1), with the tail beyond
    m = 50 replaced by its Euler-Maclaurin expansion (15 correction terms).

    Args:
        count (int, optional): How many constants, at most 6. Defaults to 4.

    Returns:
        Tuple[float, ...]: The constants
    """
    if not 1 <= count <= 6:
        raise DomainError(f"count must be in [1, 6], got {count}")
    m = 50
    corrections = _bernoulli_coefficients(15)
    log_m = math.log(m)
    k = np.arange(1, m)
    log_k = np.log(k)

    result = []
    for n in range(count):
        head = math.fsum((log_k**n / k).tolist())
        # f^(j)(x) = x^(-1-j) * poly_j(log x) for f(x) = log^n(x) / x
        poly = Polynomial([0.0] * n + [1.0])
        derivs = [poly]
        for j in range(2 * len(corrections)):
            derivs.append(derivs[-1].deriv() - (1 + j) * derivs[-1])
        terms = [head, -(log_m ** (n + 1)) / (n + 1), 0.5 * log_m**n / m]
        for j, c in enumerate(corrections, 1):
            order = 2 * j - 1
            terms.append(-c * m ** (-1 - order) * derivs[order](log_m))
        result.append(math.fsum(terms))
    logger.debug("stieltjes constants: %s", result)
    return tuple(result)


def _check_region(s: complex):
    if not (math.isfinite(s.real) and math.isfinite(s.imag)):
        raise DomainError(f"non-finite argument {s}")
    if s.real < MIN_REAL_PART or abs(s.imag) > MAX_IMAG_PART:
        raise DomainError(
            f"s = {s} outside the region Re s >= {MIN_REAL_PART}, |Im s| <= {MAX_IMAG_PART:g}"
        )
    if abs(s - 1) < POLE_TOLERANCE:
        raise PoleAtOne(f"s = {s} is within {POLE_TOLERANCE:g} of the pole at 1")


@lru_cache(maxsize=1 << 16)
def _euler_maclaurin(s: complex, params: EulerMaclaurinParams) -> Tuple[complex, ...]:
    """zeta(s), zeta'(s), zeta''(s) by term-wise differentiated Euler-Maclaurin summation."""
    N = params.cutoff_terms + math.ceil(abs(s.imag))
    log_N = math.log(N)

    n = np.arange(1, N, dtype=float)
    log_n = np.log(n)
    powers = np.exp(-s * log_n)
    heads = [powers, -log_n * powers, log_n * log_n * powers]

    # N^(1-s) / (s-1) and its derivatives
    h = 1.0 / (s - 1)
    h1 = -h * h
    h2 = -2.0 * h * h1
    w = cmath.exp((1 - s) * log_N)
    pole = [w * h, w * (h1 - log_N * h), w * (h2 - 2 * log_N * h1 + log_N**2 * h)]

    v = cmath.exp(-s * log_N)
    half = [0.5 * v, -0.5 * log_N * v, 0.5 * log_N**2 * v]

    corrections = [[], [], []]
    # Pochhammer s(s+1)...(s+2k-2) and its first two derivatives, by the product rule
    p0, p1, p2 = 1.0 + 0j, 0j, 0j
    degree = 0
    for k, c in enumerate(_bernoulli_coefficients(params.bernoulli_depth), 1):
        while degree < 2 * k - 1:
            factor = s + degree
            p2 = p2 * factor + 2 * p1
            p1 = p1 * factor + p0
            p0 = p0 * factor
            degree += 1
        x = cmath.exp((1 - s - 2 * k) * log_N)
        corrections[0].append(c * p0 * x)
        corrections[1].append(c * (p1 - log_N * p0) * x)
        corrections[2].append(c * (p2 - 2 * log_N * p1 + log_N**2 * p0) * x)

    result = []
    for j in range(3):
        parts = np.concatenate(
            [heads[j], np.array([pole[j], half[j]] + corrections[j], dtype=complex)]
        )
        result.append(complex(math.fsum(parts.real), math.fsum(parts.imag)))
    return tuple(result)


def _laurent(x: complex) -> Tuple[complex, complex, complex]:
    """x*zeta(1+x), x^2*zeta'(1+x), x^3*zeta''(1+x) from the Stieltjes series."""
    g = stieltjes_constants(4)
    x_zeta = 1 + sum((-1) ** n * g[n] * x ** (n + 1) / math.factorial(n) for n in range(4))
    x2_zeta1 = -1 + sum(
        (-1) ** n * g[n] * x ** (n + 1) / math.factorial(n - 1) for n in range(1, 4)
    )
    x3_zeta2 = 2 + sum(
        (-1) ** n * g[n] * x ** (n + 1) / math.factorial(n - 2) for n in range(2, 4)
    )
    return x_zeta, x2_zeta1, x3_zeta2


def zeta(s: ComplexValue, params: EulerMaclaurinParams = DEFAULT_PARAMS) -> ComplexValue:
    """The Riemann zeta function.

    Args:
        s (ComplexValue): Argument with Re s >= -0.5 and |Im s| <= 1e4
        params (EulerMaclaurinParams, optional): Accuracy parameters. Defaults to DEFAULT_PARAMS.

    Returns:
        ComplexValue: zeta(s)
    """
    s = complex(s)
    _check_region(s)
    return ensure_finite(_euler_maclaurin(s, params)[0], "zeta")


def zeta_deriv(s: ComplexValue, params: EulerMaclaurinParams = DEFAULT_PARAMS) -> ComplexValue:
    """The derivative zeta'(s).

    Args:
        s (ComplexValue): Argument with Re s >= -0.5 and |Im s| <= 1e4
        params (EulerMaclaurinParams, optional): Accuracy parameters. Defaults to DEFAULT_PARAMS.

    Returns:
        ComplexValue: zeta'(s)
    """
    s = complex(s)
    _check_region(s)
    return ensure_finite(_euler_maclaurin(s, params)[1], "zeta_deriv")


def zeta_log_deriv(
    s: ComplexValue, params: EulerMaclaurinParams = DEFAULT_PARAMS
) -> ComplexValue:
    """The logarithmic derivative zeta'/zeta(s).

    Args:
        s (ComplexValue): Argument, not a zero of zeta
        params (EulerMaclaurinParams, optional): Accuracy parameters. Defaults to DEFAULT_PARAMS.

    Returns:
        ComplexValue: zeta'(s) / zeta(s)
    """
    s = complex(s)
    _check_region(s)
    x = s - 1
    if abs(x) < params.switch_radius:
        x_zeta, x2_zeta1, _ = _laurent(x)
        return ensure_finite(x2_zeta1 / (x * x_zeta), "zeta_log_deriv")
    z0, z1, _ = _euler_maclaurin(s, params)
    return ensure_finite(z1 / z0, "zeta_log_deriv")


def zeta_log_deriv_prime(
    s: ComplexValue, params: EulerMaclaurinParams = DEFAULT_PARAMS
) -> ComplexValue:
    """The derivative of the logarithmic derivative, zeta''/zeta - (zeta'/zeta)^2.

    Args:
        s (ComplexValue): Argument, not a zero of zeta
        params (EulerMaclaurinParams, optional): Accuracy parameters. Defaults to DEFAULT_PARAMS.

    Returns:
        ComplexValue: (zeta'/zeta)'(s)
    """
    s = complex(s)
    _check_region(s)
    x = s - 1
    if abs(x) < params.switch_radius:
        x_zeta, x2_zeta1, x3_zeta2 = _laurent(x)
        value = (x3_zeta2 * x_zeta - x2_zeta1 * x2_zeta1) / (x * x * x_zeta * x_zeta)
        return ensure_finite(value, "zeta_log_deriv_prime")
    z0, z1, z2 = _euler_maclaurin(s, params)
    r = z1 / z0
    return ensure_finite(z2 / z0 - r * r, "zeta_log_deriv_prime")


def chi_log_deriv_asymptotic(t: float) -> float:
    """Leading asymptotic of chi'/chi(1/2 + it) in the functional equation.

    Args:
        t (float): Height, t > 0

    Returns:
        float: -log(t / 2pi)
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    return -math.log(t / (2 * math.pi))
