import cmath
import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from triple_correlation.errors import (
    DomainError,
    GridMismatch,
    PoleAtLatticePoint,
    SingularInput,
)
from triple_correlation.util import ensure_finite

logger = logging.getLogger(__name__)

LATTICE_TOLERANCE = 1e-12
LAURENT_RADIUS = 1e-5
EQUAL_ARGUMENT_SWITCH = 1e-6
COINCIDENCE_TOLERANCE = 1e-4

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class RmtParams(object):
    """Matrix dimension of the unitary group.

    Args:
        N (int): Dimension, at least 1
    """

    N: int

    def __post_init__(self):
        _check_dimension(self.N)


def _check_dimension(N: int):
    if int(N) != N or N < 1:
        raise DomainError(f"matrix dimension must be a positive integer, got {N}")


def _check_lattice(x: complex, name: str):
    k = round(x.imag / (2 * math.pi))
    if abs(x - 2j * math.pi * k) < LATTICE_TOLERANCE:
        raise PoleAtLatticePoint(f"{name} has a pole at x = {x}")


def _expm1(x: complex) -> complex:
    return complex(np.expm1(complex(x)))


def z_func(x: complex) -> complex:
    """z(x) = 1 / (1 - e^-x), the random-matrix counterpart of zeta(1 + x).

    Args:
        x (complex): Argument off 2 pi i Z

    Returns:
        complex: z(x)
    """
    x = complex(x)
    _check_lattice(x, "z")
    if abs(x) < LAURENT_RADIUS:
        return 1 / x + 0.5 + x / 12 - x**3 / 720
    return ensure_finite(-1 / _expm1(-x), "z")


def z_log_deriv(x: complex) -> complex:
    """z'/z(x) = -1 / (e^x - 1).

    Args:
        x (complex): Argument off 2 pi i Z

    Returns:
        complex: z'(x) / z(x)
    """
    x = complex(x)
    _check_lattice(x, "z'/z")
    if abs(x) < LAURENT_RADIUS:
        return -1 / x + 0.5 - x / 12 + x**3 / 720
    return ensure_finite(-1 / _expm1(x), "z'/z")


def z_log_deriv_prime(x: complex) -> complex:
    """(z'/z)'(x) = e^x / (e^x - 1)^2.

    Args:
        x (complex): Argument off 2 pi i Z

    Returns:
        complex: The derivative of z'/z
    """
    x = complex(x)
    _check_lattice(x, "(z'/z)'")
    if abs(x) < LAURENT_RADIUS:
        return 1 / (x * x) - 1 / 12 + x * x / 240
    e = _expm1(x)
    return ensure_finite((1 + e) / (e * e), "(z'/z)'")


def ratios_22(alpha: complex, beta: complex, gamma: complex, delta: complex, N: int) -> complex:
    """Average over U(N) of Lambda_X(e^-a) Lambda_X*(e^-b) / (Lambda_X(e^-g) Lambda_X*(e^-d)).

    Args:
        alpha (complex): Numerator shift
        beta (complex): Conjugate numerator shift
        gamma (complex): Denominator shift, Re > 0
        delta (complex): Conjugate denominator shift, Re > 0
        N (int): Matrix dimension

    Returns:
        complex: The exact average
    """
    _check_dimension(N)
    a, b, g, d = (complex(v) for v in (alpha, beta, gamma, delta))
    if not (g.real > 0 and d.real > 0):
        raise DomainError(f"ratios_22 needs Re gamma, Re delta > 0, got {g}, {d}")
    first = z_func(a + b) * z_func(g + d) / (z_func(a + d) * z_func(b + g))
    second = (
        cmath.exp(-N * (a + b))
        * z_func(-b - a)
        * z_func(g + d)
        / (z_func(-b + d) * z_func(-a + g))
    )
    return ensure_finite(first + second, "ratios_22")


def ratios_33(
    alpha1: complex,
    alpha2: complex,
    beta: complex,
    gamma1: complex,
    gamma2: complex,
    delta: complex,
    N: int,
) -> complex:
    """Average over U(N) of a ratio of three characteristic polynomials over three.

    Args:
        alpha1 (complex): First numerator shift
        alpha2 (complex): Second numerator shift
        beta (complex): Conjugate numerator shift
        gamma1 (complex): First denominator shift, Re > 0
        gamma2 (complex): Second denominator shift, Re > 0
        delta (complex): Conjugate denominator shift, Re > 0
        N (int): Matrix dimension

    Returns:
        complex: The exact average
    """
    _check_dimension(N)
    a1, a2, b, g1, g2, d = (
        complex(v) for v in (alpha1, alpha2, beta, gamma1, gamma2, delta)
    )
    if not (g1.real > 0 and g2.real > 0 and d.real > 0):
        raise DomainError(
            f"ratios_33 needs Re gamma1, Re gamma2, Re delta > 0, got {g1}, {g2}, {d}"
        )
    z = z_func
    common = z(g1 + d) * z(g2 + d)
    value = z(a1 + b) * z(a2 + b) * common / (z(a1 + d) * z(a2 + d) * z(b + g1) * z(b + g2))
    value += (
        cmath.exp(-N * (a1 + b))
        * z(-b - a1)
        * z(a2 - a1)
        * common
        / (z(-b + d) * z(a2 + d) * z(-a1 + g1) * z(-a1 + g2))
    )
    value += (
        cmath.exp(-N * (a2 + b))
        * z(-b - a2)
        * z(a1 - a2)
        * common
        / (z(-b + d) * z(a1 + d) * z(-a2 + g1) * z(-a2 + g2))
    )
    return ensure_finite(value, "ratios_33")


def _edge(x: complex, N: int) -> complex:
    """e^(-N x) z(x) z(-x), written as -e^(-N x) (z'/z)'(x)."""
    return -cmath.exp(-N * x) * z_log_deriv_prime(x)


def j2(alpha: complex, beta: complex, N: int) -> complex:
    """J(alpha; beta): the U(N) pair moment of logarithmic derivatives.

    Args:
        alpha (complex): Shift
        beta (complex): Conjugate shift
        N (int): Matrix dimension

    Returns:
        complex: (z'/z)'(a+b) + e^(-N(a+b)) z(a+b) z(-a-b)
    """
    _check_dimension(N)
    x = complex(alpha) + complex(beta)
    _check_lattice(x, "J(alpha; beta)")
    return ensure_finite(z_log_deriv_prime(x) + _edge(x, N), "j2")


def _zl_regular(w: complex) -> complex:
    """z'/z(w) + 1/w, four terms of its series about 0."""
    return 0.5 - w / 12 + w**3 / 720 - w**5 / 30240


def j3(alpha1: complex, alpha2: complex, beta: complex, N: int) -> complex:
    """J(alpha1, alpha2; beta): the U(N) triple moment of logarithmic derivatives.

    Args:
        alpha1 (complex): First shift
        alpha2 (complex): Second shift
        beta (complex): Conjugate shift
        N (int): Matrix dimension

    Returns:
        complex: The two-block closed form
    """
    _check_dimension(N)
    a1, a2, b = complex(alpha1), complex(alpha2), complex(beta)
    x, y = a1 + b, a2 + b
    _check_lattice(x, "J(alpha1, alpha2; beta)")
    _check_lattice(y, "J(alpha1, alpha2; beta)")
    w = a2 - a1
    ex, ey = _edge(x, N), _edge(y, N)

    if abs(w) >= EQUAL_ARGUMENT_SWITCH:
        value = ex * (z_log_deriv(w) - z_log_deriv(y)) + ey * (z_log_deriv(-w) - z_log_deriv(x))
        return ensure_finite(value, "j3")

    # the 1/w poles of z'/z(+-w) cancel; (E(y) - E(x)) / w from a Taylor expansion of E at x
    e = _expm1(x)
    g = -1 - N - 2 / e
    g1 = 2 * (1 + e) / (e * e)
    difference = ex * g + 0.5 * w * ex * (g * g + g1)
    value = (
        ex * (_zl_regular(w) - z_log_deriv(y))
        + ey * (_zl_regular(-w) - z_log_deriv(x))
        + difference
    )
    return ensure_finite(value, "j3")


def s_n(theta: ArrayLike, N: int) -> ArrayLike:
    """The kernel S_N(theta) = sin(N theta / 2) / sin(theta / 2).

    Args:
        theta (ArrayLike): Angle(s)
        N (int): Matrix dimension

    Returns:
        ArrayLike: Kernel values; at theta = 2 pi k the limit N (-1)^(k(N-1))
    """
    _check_dimension(N)
    theta = np.asarray(theta, dtype=float)
    half = np.sin(theta / 2)
    near = np.abs(half) < 1e-12
    k = np.round(theta / (2 * np.pi))
    limit = N * np.where((k * (N - 1)) % 2 == 0, 1.0, -1.0)
    value = np.where(near, limit, np.sin(N * theta / 2) / np.where(near, 1.0, half))
    return float(value) if value.ndim == 0 else value


def gaudin_det(theta1: ArrayLike, theta2: ArrayLike, theta3: ArrayLike, N: int) -> ArrayLike:
    """The 3x3 determinant of S_N(theta_k - theta_j), by cofactor expansion.

    Args:
        theta1 (ArrayLike): First angle(s)
        theta2 (ArrayLike): Second angle(s)
        theta3 (ArrayLike): Third angle(s)
        N (int): Matrix dimension

    Returns:
        ArrayLike: N^3 - N (S12^2 + S13^2 + S23^2) + 2 S12 S13 S23
    """
    s12 = s_n(np.subtract(theta1, theta2), N)
    s13 = s_n(np.subtract(theta1, theta3), N)
    s23 = s_n(np.subtract(theta2, theta3), N)
    return N**3 - N * (s12 * s12 + s13 * s13 + s23 * s23) + 2 * s12 * s13 * s23


def _circular_distance(a: float, b: float) -> float:
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def t3_integrand(theta1: float, theta2: float, theta3: float, N: int) -> float:
    """The triple-correlation density of U(N) eigenvalues from the ratios theorem.

    Six J(.,.;.) terms, N times six J(.;.) terms, and N^3. Individual terms have poles where
    angles coincide; the sum equals `gaudin_det` everywhere.

    Args:
        theta1 (float): First angle
        theta2 (float): Second angle
        theta3 (float): Third angle
        N (int): Matrix dimension

    Returns:
        float: The density
    """
    _check_dimension(N)
    thetas = (float(theta1), float(theta2), float(theta3))
    for i, j in ((0, 1), (0, 2), (1, 2)):
        if _circular_distance(thetas[i], thetas[j]) < COINCIDENCE_TOLERANCE:
            raise SingularInput(
                f"angles {thetas[i]} and {thetas[j]} coincide within {COINCIDENCE_TOLERANCE:g}; "
                "use gaudin_det"
            )
    t1, t2, t3 = (1j * t for t in thetas)
    value = (
        j3(t1, t2, -t3, N)
        + j3(t1, t3, -t2, N)
        + j3(t2, t3, -t1, N)
        + j3(-t1, -t2, t3, N)
        + j3(-t1, -t3, t2, N)
        + j3(-t2, -t3, t1, N)
    )
    value += N * (
        j2(-t1, t3, N)
        + j2(-t2, t3, N)
        + j2(-t1, t2, N)
        + j2(-t3, t2, N)
        + j2(-t2, t1, N)
        + j2(-t3, t1, N)
    )
    value += N**3
    if abs(value.imag) > 1e-8 * max(abs(value.real), 1.0):
        logger.warning("t3 integrand at %s has imaginary residue %g", thetas, value.imag)
    return value.real


def periodic_axis(points: int) -> np.ndarray:
    """Uniform periodic grid -pi + 2 pi k / points on [-pi, pi).

    Args:
        points (int): Grid size per axis

    Returns:
        np.ndarray: The axis
    """
    return -np.pi + 2 * np.pi * np.arange(points) / points


def t3_against_test(f: np.ndarray, N: int) -> float:
    """The expected sum of f over ordered distinct eigenvalue triples of U(N).

    Args:
        f (np.ndarray): Samples of a periodic test function on periodic_axis(M)^3, shape (M, M, M)
        N (int): Matrix dimension

    Returns:
        float: (2 pi)^-3 times the trapezoidal integral of f times the Gaudin determinant
    """
    _check_dimension(N)
    f = np.asarray(f)
    if f.ndim != 3 or not (f.shape[0] == f.shape[1] == f.shape[2]) or f.shape[0] < 1:
        raise GridMismatch(f"test function must be sampled on a cubic 3-D grid, got {f.shape}")
    axis = periodic_axis(f.shape[0])
    t1, t2, t3 = np.meshgrid(axis, axis, axis, indexing="ij")
    # the trapezoidal rule on a periodic grid is the plain mean
    return float(np.mean(f * gaudin_det(t1, t2, t3, N)))
