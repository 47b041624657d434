"""Reference computations for the test suite and the `selftest` command."""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterator, List, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from tqdm import tqdm

from triple_correlation.density import (
    DensityDeps,
    is_broadly_decreasing,
    limit_check,
)
from triple_correlation.errors import DomainError
from triple_correlation.primes import (
    PrimeTable,
    a_term,
    a_zeta_22,
    a_zeta_33,
    b_term,
    p_term,
    q_term,
)
from triple_correlation.ratios import i1, i3, s_term
from triple_correlation.rmt import (
    gaudin_det,
    j2,
    j3,
    periodic_axis,
    ratios_22,
    t3_integrand,
)
from triple_correlation.zeta import (
    DEFAULT_PARAMS,
    EulerMaclaurinParams,
    zeta,
    zeta_log_deriv,
    zeta_log_deriv_prime,
)

logger = logging.getLogger(__name__)

Func = Callable[..., complex]


def sieve_primes_to(limit: int) -> Iterator[int]:
    """Yield the primes <= limit with a bytearray sieve over odd numbers.

    Args:
        limit (int): Inclusive bound

    Yields:
        int: The next prime
    """
    if limit < 2:
        return
    yield 2
    n2 = (limit + 1) // 2
    # 2j+1 is at index j
    sieve = bytearray(n2)
    if n2 > 0:
        sieve[0] = 1
    for j in range(n2):
        if sieve[j]:
            continue
        p = j * 2 + 1
        yield p
        for k in range(p * p - 1 >> 1, n2, p):
            sieve[k] = 1


def _bin(d: float, bin: float, n: int) -> int:
    return min(max(math.ceil(d / bin) - 1, 0), n - 1)


def brute_force_pair_counts(ordinates: Sequence[float], window: float, bin: float) -> np.ndarray:
    """Count ordered pairs with g_i - g_j in (0, window] by a double loop.

    Args:
        ordinates (Sequence[float]): Ascending zeros
        window (float): Largest separation
        bin (float): Bin width

    Returns:
        np.ndarray: Counts per bin
    """
    n = int(round(window / bin))
    counts = np.zeros(n, dtype=np.int64)
    g = list(ordinates)
    for i in range(len(g)):
        for j in range(len(g)):
            d = g[i] - g[j]
            if 0 < d <= n * bin:
                counts[_bin(d, bin, n)] += 1
    return counts


def brute_force_triple_counts(
    ordinates: Sequence[float], window: float, bin: float
) -> np.ndarray:
    """Count ordered triples of distinct zeros with both g_i - g_j and g_i - g_k in (0, window].

    Args:
        ordinates (Sequence[float]): Ascending zeros
        window (float): Largest separation
        bin (float): Bin width

    Returns:
        np.ndarray: Counts of shape (n, n)
    """
    n = int(round(window / bin))
    limit = n * bin
    counts = np.zeros((n, n), dtype=np.int64)
    g = list(ordinates)
    for i in range(len(g)):
        for j in range(len(g)):
            d1 = g[i] - g[j]
            if not 0 < d1 <= limit:
                continue
            for k in range(len(g)):
                if k == j:
                    continue
                d2 = g[i] - g[k]
                if 0 < d2 <= limit:
                    counts[_bin(d1, bin, n), _bin(d2, bin, n)] += 1
    return counts


def _ratio_factor(alpha: complex, beta: complex, gamma: complex, delta: complex):
    """The per-eigenvalue factor of the two-over-two ratio at angle theta."""
    ea, eb, eg, ed = (cmath.exp(-complex(v)) for v in (alpha, beta, gamma, delta))

    def factor(theta):
        e = np.exp(1j * np.asarray(theta))
        return (1 - ea / e) * (1 - eb * e) / ((1 - eg / e) * (1 - ed * e))

    return factor


def weyl_ratios_22(
    alpha: complex, beta: complex, gamma: complex, delta: complex, N: int, points: int = 128
) -> complex:
    """Average of the two-over-two characteristic-polynomial ratio over U(1) or U(2).

    N = 1 integrates over the circle with adaptive quadrature; N = 2 applies the periodic
    trapezoidal rule to the Weyl density |e^(i t1) - e^(i t2)|^2 / 2.

    Args:
        alpha (complex): Numerator shift
        beta (complex): Conjugate numerator shift
        gamma (complex): Denominator shift, Re > 0
        delta (complex): Conjugate denominator shift, Re > 0
        N (int): 1 or 2
        points (int, optional): Grid size per angle for N = 2. Defaults to 128.

    Returns:
        complex: The average
    """
    factor = _ratio_factor(alpha, beta, gamma, delta)
    if N == 1:
        re = quad(lambda t: float(np.real(factor(t))), -math.pi, math.pi, epsabs=1e-14, limit=200)[0]
        im = quad(lambda t: float(np.imag(factor(t))), -math.pi, math.pi, epsabs=1e-14, limit=200)[0]
        return complex(re, im) / (2 * math.pi)
    if N == 2:
        axis = periodic_axis(points)
        t1, t2 = np.meshgrid(axis, axis, indexing="ij")
        density = np.abs(np.exp(1j * t1) - np.exp(1j * t2)) ** 2 / 2
        return complex(np.mean(factor(t1) * factor(t2) * density))
    raise DomainError(f"Weyl quadrature is only implemented for N = 1, 2, got {N}")


def contour_residue(
    func: Callable[[complex], complex], center: complex, radius: float = 1e-3, points: int = 64
) -> complex:
    """Residue of func at center from the trapezoidal rule on a small circle.

    Args:
        func (Callable[[complex], complex]): Function with an isolated pole at center
        center (complex): Pole location
        radius (float, optional): Circle radius. Defaults to 1e-3.
        points (int, optional): Number of nodes. Defaults to 64.

    Returns:
        complex: (2 pi i)^-1 times the contour integral
    """
    total = 0j
    for k in range(points):
        z = radius * cmath.exp(2j * math.pi * k / points)
        total += func(center + z) * z
    return total / points


# fourth-order central stencil for a first derivative
_STENCIL = ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12))


def central_diff(f: Func, x: complex, h: float = 1e-3) -> complex:
    """Fourth-order central difference of f at x along the real direction.

    Args:
        f (Func): Function of one variable
        x (complex): Point
        h (float, optional): Step. Defaults to 1e-3.

    Returns:
        complex: f'(x)
    """
    return sum(w * f(x + k * h) for k, w in _STENCIL) / h


def mixed_diff2(f: Func, x: complex, y: complex, h: float = 1e-3) -> complex:
    """Fourth-order mixed second derivative d^2 f / dx dy.

    Args:
        f (Func): Function of two variables
        x (complex): First coordinate
        y (complex): Second coordinate
        h (float, optional): Step. Defaults to 1e-3.

    Returns:
        complex: The derivative
    """
    return sum(
        wi * wj * f(x + i * h, y + j * h) for i, wi in _STENCIL for j, wj in _STENCIL
    ) / (h * h)


def mixed_diff3(f: Func, x: complex, y: complex, z: complex, h: float = 1e-2) -> complex:
    """Fourth-order mixed third derivative d^3 f / dx dy dz.

    Args:
        f (Func): Function of three variables
        x (complex): First coordinate
        y (complex): Second coordinate
        z (complex): Third coordinate
        h (float, optional): Step. Defaults to 1e-2.

    Returns:
        complex: The derivative
    """
    return sum(
        wi * wj * wk * f(x + i * h, y + j * h, z + k * h)
        for i, wi in _STENCIL
        for j, wj in _STENCIL
        for k, wk in _STENCIL
    ) / (h**3)


def moment_quadrature(integrand: Callable[[float], complex], T: float) -> complex:
    """Integral of integrand(t) over 0 < t < T by adaptive quadrature.

    Substitutes t = 2 pi e^s, which turns the algebraic singularities of (t/2pi)^-x at t = 0
    into exponential decay on s < log(T/2pi).

    Args:
        integrand (Callable[[float], complex]): Function of t
        T (float): Height

    Returns:
        complex: The integral
    """
    upper = math.log(T / (2 * math.pi))

    def weighted(s):
        t = 2 * math.pi * math.exp(s)
        return integrand(t) * t

    options = dict(epsabs=0.0, epsrel=1e-12, limit=400)
    re = quad(lambda s: weighted(s).real, -np.inf, upper, **options)[0]
    im = quad(lambda s: weighted(s).imag, -np.inf, upper, **options)[0]
    return complex(re, im)


def _u_power(t: float, x: complex) -> complex:
    return cmath.exp(-x * math.log(t / (2 * math.pi)))


def i3_integrand(
    alpha1: complex,
    alpha2: complex,
    beta: complex,
    table: PrimeTable,
    params: EulerMaclaurinParams = DEFAULT_PARAMS,
) -> Callable[[float], complex]:
    """The t-integrand of the three-point moment.

    Args:
        alpha1 (complex): First shift
        alpha2 (complex): Second shift
        beta (complex): Conjugate shift
        table (PrimeTable): Primes
        params (EulerMaclaurinParams, optional): Zeta accuracy. Defaults to DEFAULT_PARAMS.

    Returns:
        Callable[[float], complex]: The integrand as a function of t
    """
    x, y, w = alpha1 + beta, alpha2 + beta, alpha2 - alpha1
    q = q_term(x, y, table).value
    block_x = (
        zeta(1 + x, params)
        * zeta(1 - x, params)
        * (
            a_term(x, table).value
            * (zeta_log_deriv(1 + w, params) - zeta_log_deriv(1 + y, params))
            + p_term(x, y, table).value
        )
    )
    block_y = (
        zeta(1 + y, params)
        * zeta(1 - y, params)
        * (
            a_term(y, table).value
            * (zeta_log_deriv(1 - w, params) - zeta_log_deriv(1 + x, params))
            + p_term(y, x, table).value
        )
    )
    return lambda t: q + _u_power(t, x) * block_x + _u_power(t, y) * block_y


def i1_integrand(
    alpha: complex,
    beta: complex,
    table: PrimeTable,
    params: EulerMaclaurinParams = DEFAULT_PARAMS,
) -> Callable[[float], complex]:
    """The t-integrand of the log-weighted two-point moment.

    Args:
        alpha (complex): Shift
        beta (complex): Conjugate shift
        table (PrimeTable): Primes
        params (EulerMaclaurinParams, optional): Zeta accuracy. Defaults to DEFAULT_PARAMS.

    Returns:
        Callable[[float], complex]: The integrand as a function of t
    """
    x = alpha + beta
    flat = zeta_log_deriv_prime(1 + x, params) - b_term(x, table).value
    arith = zeta(1 + x, params) * zeta(1 - x, params) * a_term(x, table).value
    return lambda t: math.log(t / (2 * math.pi)) * (flat + _u_power(t, x) * arith)


def s_integrand(
    x: float, table: PrimeTable, params: EulerMaclaurinParams = DEFAULT_PARAMS
) -> Callable[[float], complex]:
    """The t-integrand of one pair term at real separation x.

    Args:
        x (float): Separation
        table (PrimeTable): Primes
        params (EulerMaclaurinParams, optional): Zeta accuracy. Defaults to DEFAULT_PARAMS.

    Returns:
        Callable[[float], complex]: The integrand as a function of t
    """
    ix = 1j * x
    flat = zeta_log_deriv_prime(1 + ix, params) - b_term(ix, table).value
    arith = zeta(1 + ix, params) * zeta(1 - ix, params) * a_term(ix, table).value
    return lambda t: 0.5 * math.log(t / (2 * math.pi)) ** 2 + flat + _u_power(t, ix) * arith


def _circular_gap(a: float, b: float) -> float:
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def random_separated_triples(
    rng: np.random.Generator, count: int, min_gap: float = 0.1
) -> List[Tuple[float, float, float]]:
    """Draw angle triples in [-pi, pi) whose pairwise circular gaps are all >= min_gap.

    Args:
        rng (np.random.Generator): Random source
        count (int): Number of triples
        min_gap (float, optional): Smallest allowed gap. Defaults to 0.1.

    Returns:
        List[Tuple[float, float, float]]: The triples
    """
    result = []
    while len(result) < count:
        t = tuple(rng.uniform(-math.pi, math.pi, 3).tolist())
        if min(_circular_gap(t[0], t[1]), _circular_gap(t[0], t[2]), _circular_gap(t[1], t[2])) >= min_gap:
            result.append(t)
    return result


@dataclass(frozen=True)
class CheckResult(object):
    """Outcome of one self-test check.

    Args:
        name (str): Check name
        passed (bool): Whether it passed
        detail (str): Largest deviation or first counterexample
    """

    name: str
    passed: bool
    detail: str


def check_rmt_identity(
    N: int, samples: int = 100, seed: int = 42, tolerance: float = 1e-8
) -> CheckResult:
    """Compare the ratios-theorem triple density with Gaudin's determinant at random angles.

    Deviations are measured relative to max(|det|, 1).

    Args:
        N (int): Matrix dimension
        samples (int, optional): Number of triples. Defaults to 100.
        seed (int, optional): Random seed. Defaults to 42.
        tolerance (float, optional): Largest accepted relative deviation. Defaults to 1e-8.

    Returns:
        CheckResult: The outcome
    """
    if samples < 1:
        raise DomainError(f"need at least one sample, got {samples}")
    rng = np.random.default_rng(seed)
    worst, worst_at = 0.0, None
    for t in random_separated_triples(rng, samples):
        det = gaudin_det(*t, N)
        dev = abs(t3_integrand(*t, N) - det) / max(abs(det), 1.0)
        if dev > worst:
            worst, worst_at = dev, t
        if dev > tolerance:
            return CheckResult(
                f"rmt identity N={N}", False, f"deviation {dev:.3g} at theta={t}"
            )
    return CheckResult(
        f"rmt identity N={N}", True, f"max relative deviation {worst:.3g} at {worst_at}"
    )


def check_residues(N: int = 5, tolerance: float = 1e-8) -> CheckResult:
    """Residues of the U(N) moments at coinciding arguments, in both variables.

    Args:
        N (int, optional): Matrix dimension. Defaults to 5.
        tolerance (float, optional): Accepted absolute deviation. Defaults to 1e-8.

    Returns:
        CheckResult: The outcome
    """
    z1, z2 = 0.4 + 0.3j, -0.2 + 0.9j
    cases = [
        ("J(z1,z2;-z3) in z3", contour_residue(lambda z3: j3(z1, z2, -z3, N), z1), -j2(z2, -z1, N)),
        ("J(z3;-z1) in z3", contour_residue(lambda z3: j2(z3, -z1, N), z1), N),
        ("J(z3;-z1) in z1", contour_residue(lambda z: j2(z1, -z, N), z1), -N),
        ("J(z3,z2;-z1) in z3", contour_residue(lambda z3: j3(z3, z2, -z1, N), z1), j2(z2, -z1, N)),
        ("J(z3,z2;-z1) in z1", contour_residue(lambda z: j3(z1, z2, -z, N), z1), -j2(z2, -z1, N)),
    ]
    for label, got, expected in cases:
        if abs(got - expected) > tolerance * max(1.0, abs(expected)):
            return CheckResult("residues", False, f"{label}: {got} != {expected}")
    return CheckResult("residues", True, f"{len(cases)} residues match")


def check_weyl(tolerance: float = 1e-8) -> CheckResult:
    """The two-over-two ratios formula against Weyl quadrature for N = 1 and 2.

    Args:
        tolerance (float, optional): Accepted relative deviation. Defaults to 1e-8.

    Returns:
        CheckResult: The outcome
    """
    args = (0.3 + 0.2j, 0.5 - 0.4j, 0.4 + 0.1j, 0.6 + 0.3j)
    for N in (1, 2):
        exact = ratios_22(*args, N)
        oracle = weyl_ratios_22(*args, N)
        if abs(exact - oracle) > tolerance * abs(oracle):
            return CheckResult("weyl", False, f"N={N}: {exact} != {oracle}")
    return CheckResult("weyl", True, "ratios_22 matches Weyl quadrature for N = 1, 2")


def _relative(a: complex, b: complex) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def prime_derivative_deviations(
    table: PrimeTable, alpha1: complex, alpha2: complex, beta: complex
) -> dict:
    """Deviations of A, B, P and Q from derivatives of the ratios products at one point.

    Args:
        table (PrimeTable): Primes
        alpha1 (complex): First shift
        alpha2 (complex): Second shift
        beta (complex): Conjugate shift

    Returns:
        dict: Identity names mapped to relative deviations
    """
    x, y = alpha1 + beta, alpha2 + beta
    a_exact = a_term(x, table).value
    a33 = a_zeta_33(-beta, alpha2, -alpha1, alpha1, alpha2, beta, table).value
    a22 = a_zeta_22(-beta, -alpha1, alpha1, beta, table).value
    p_xy = central_diff(
        lambda a2: a_zeta_33(-beta, a2, -alpha1, alpha1, alpha2, beta, table).value, alpha2
    )
    p_yx = central_diff(
        lambda a1: a_zeta_33(a1, -beta, -alpha2, alpha1, alpha2, beta, table).value, alpha1
    )
    b_fd = mixed_diff2(
        lambda a, b: a_zeta_22(a, b, alpha1, beta, table).value, alpha1, beta
    )
    q_fd = mixed_diff3(
        lambda a1, a2, b: a_zeta_33(a1, a2, b, alpha1, alpha2, beta, table).value,
        alpha1,
        alpha2,
        beta,
    )
    return {
        "A (3/3)": _relative(a33, a_exact),
        "A (2/2)": _relative(a22, a_exact),
        "P(x,y)": _relative(p_xy, p_term(x, y, table).value),
        "P(y,x)": _relative(p_yx, p_term(y, x, table).value),
        "B": _relative(-b_fd, b_term(x, table).value),
        "Q": _relative(q_fd, q_term(x, y, table).value),
    }


PRIME_TOLERANCES = {
    "A (3/3)": 1e-8,
    "A (2/2)": 1e-8,
    "P(x,y)": 1e-6,
    "P(y,x)": 1e-6,
    "B": 1e-6,
    "Q": 1e-4,
}


def random_shifts(rng: np.random.Generator) -> Tuple[complex, complex, complex]:
    """Shifts alpha1, alpha2, beta with real parts in [0.05, 0.3] and imaginary parts in [-1, 1].

    Args:
        rng (np.random.Generator): Random source

    Returns:
        Tuple[complex, complex, complex]: The shifts
    """
    re = rng.uniform(0.05, 0.3, 3)
    im = rng.uniform(-1.0, 1.0, 3)
    return tuple(complex(r, i) for r, i in zip(re, im))


def check_prime_derivatives(
    table: PrimeTable, points: int = 20, seed: int = 7, progress: bool = True
) -> CheckResult:
    """Finite differences of the ratios products against the prime sums A, B, P and Q.

    Args:
        table (PrimeTable): Primes
        points (int, optional): Number of random points. Defaults to 20.
        seed (int, optional): Random seed. Defaults to 7.
        progress (bool, optional): Show a progress bar. Defaults to True.

    Returns:
        CheckResult: The outcome
    """
    rng = np.random.default_rng(seed)
    worst = {name: 0.0 for name in PRIME_TOLERANCES}
    for _ in tqdm(range(points), desc="Prime derivative oracle", disable=not progress):
        shifts = random_shifts(rng)
        for name, dev in prime_derivative_deviations(table, *shifts).items():
            worst[name] = max(worst[name], dev)
            if dev > PRIME_TOLERANCES[name]:
                return CheckResult("prime derivatives", False, f"{name}: {dev:.3g} at {shifts}")
    detail = ", ".join(f"{k}={v:.2g}" for k, v in worst.items())
    return CheckResult("prime derivatives", True, detail)


def check_moment_quadrature(
    table: PrimeTable,
    params: EulerMaclaurinParams = DEFAULT_PARAMS,
    points: int = 20,
    seed: int = 11,
    T: float = 500.0,
    tolerance: float = 1e-8,
    progress: bool = True,
) -> CheckResult:
    """Closed-form t-integrals of the moments against adaptive quadrature.

    Args:
        table (PrimeTable): Primes
        params (EulerMaclaurinParams, optional): Zeta accuracy. Defaults to DEFAULT_PARAMS.
        points (int, optional): Number of random parameter sets. Defaults to 20.
        seed (int, optional): Random seed. Defaults to 11.
        T (float, optional): Height. Defaults to 500.0.
        tolerance (float, optional): Accepted relative deviation. Defaults to 1e-8.
        progress (bool, optional): Show a progress bar. Defaults to True.

    Returns:
        CheckResult: The outcome
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in tqdm(range(points), desc="Moment quadrature oracle", disable=not progress):
        a1, a2, b = random_shifts(rng)
        r = float(rng.uniform(0.5, 5.0))
        pairs = (
            ("i3", i3(a1, a2, b, T, table, params).value, i3_integrand(a1, a2, b, table, params)),
            ("i1", i1(a1, b, T, table, params).value, i1_integrand(a1, b, table, params)),
            ("s", s_term(r, T, table, params), s_integrand(r, table, params)),
        )
        for name, closed, integrand in pairs:
            dev = _relative(closed, moment_quadrature(integrand, T))
            worst = max(worst, dev)
            if dev > tolerance:
                return CheckResult("moment quadrature", False, f"{name}: {dev:.3g} at {(a1, a2, b, r)}")
    return CheckResult("moment quadrature", True, f"max relative deviation {worst:.3g}")


def check_schwarz_reflection(
    table: PrimeTable, params: EulerMaclaurinParams = DEFAULT_PARAMS, tolerance: float = 1e-10
) -> CheckResult:
    """i3 at conjugated shifts equals the conjugate of i3.

    Args:
        table (PrimeTable): Primes
        params (EulerMaclaurinParams, optional): Zeta accuracy. Defaults to DEFAULT_PARAMS.
        tolerance (float, optional): Accepted relative deviation. Defaults to 1e-10.

    Returns:
        CheckResult: The outcome
    """
    args = (0.1 + 2.0j, 0.05 - 1.3j, 0.2 + 0.7j)
    T = 1e4
    value = i3(*args, T, table, params).value
    mirrored = i3(*(a.conjugate() for a in args), T, table, params).value
    dev = _relative(mirrored, value.conjugate())
    return CheckResult("schwarz reflection", dev <= tolerance, f"relative deviation {dev:.3g}")


def check_sine_kernel_limit(deps: DensityDeps) -> CheckResult:
    """The scaled bracket approaches the sine-kernel determinant as T grows.

    Args:
        deps (DensityDeps): Shared inputs

    Returns:
        CheckResult: The outcome
    """
    rows = limit_check(1.3, 2.7, [1e4, 1e6, 1e9, 1e12], deps)
    errors = [row.abs_error for row in rows]
    passed = is_broadly_decreasing(errors) and errors[-1] < 0.05
    return CheckResult(
        "sine-kernel limit", passed, "errors " + ", ".join(f"{e:.3g}" for e in errors)
    )


def run_selftest(deps: DensityDeps, progress: bool = True) -> List[CheckResult]:
    """Run every check of the oracle suite.

    Args:
        deps (DensityDeps): Shared inputs
        progress (bool, optional): Show progress bars. Defaults to True.

    Returns:
        List[CheckResult]: One result per check
    """
    results = [check_rmt_identity(N) for N in (3, 5, 10, 25)]
    results.append(check_residues())
    results.append(check_weyl())
    results.append(check_prime_derivatives(deps.table, progress=progress))
    results.append(check_moment_quadrature(deps.table, deps.params, progress=progress))
    results.append(check_schwarz_reflection(deps.table, deps.params))
    results.append(check_sine_kernel_limit(deps))
    for r in results:
        logger.info("%s: %s (%s)", r.name, "PASS" if r.passed else "FAIL", r.detail)
    return results
