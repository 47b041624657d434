import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache, partial
from typing import Callable, Dict

import numpy as np

from triple_correlation.errors import DomainError, FactorNearZero, ResourceError
from triple_correlation.util import complex_fsum, ensure_finite, log1p_complex

logger = logging.getLogger(__name__)

MAX_PRIME_LIMIT = 10**8
FACTOR_TOLERANCE = 1e-8
MIN_REAL_PART = -0.5
ENVELOPE_PRIMES = 64
TERM_CACHE_SIZE = 1 << 14


@dataclass(frozen=True, eq=False)
class PrimeTable(object):
    """All primes up to a sieve bound, with their logarithms.

    The table is immutable and owns the memos of the prime sums computed over it, so they are
    released together with the table.

    Args:
        limit (int): Sieve bound
        primes (np.ndarray): The primes <= limit, ascending
        logs (np.ndarray): log p for every prime
    """

    limit: int
    primes: np.ndarray
    logs: np.ndarray
    _memos: Dict[str, Callable] = field(default_factory=dict, init=False, repr=False)

    def __len__(self) -> int:
        return len(self.primes)

    def __getstate__(self):
        # worker processes start with empty memos
        state = dict(self.__dict__)
        state["_memos"] = {}
        return state

    def __setstate__(self, state):
        for key, value in state.items():
            object.__setattr__(self, key, value)

    def memoized(self, func: Callable[..., "TailEstimate"]) -> Callable[..., "TailEstimate"]:
        """func(self, *args) behind a bounded cache that lives as long as the table.

        Args:
            func (Callable[..., TailEstimate]): Prime sum taking the table first

        Returns:
            Callable[..., TailEstimate]: The cached function of the remaining arguments
        """
        memo = self._memos.get(func.__name__)
        if memo is None:
            memo = lru_cache(maxsize=TERM_CACHE_SIZE)(partial(func, self))
            self._memos[func.__name__] = memo
        return memo

    def cached_terms(self) -> int:
        """Number of memoized prime sums held by the table."""
        return sum(memo.cache_info().currsize for memo in self._memos.values())


@dataclass(frozen=True)
class TailEstimate(object):
    """A truncated prime sum or product and a bound for the omitted primes > limit.

    Args:
        value (complex): The truncated value
        tail_bound (float): Bound for |full value - truncated value|
    """

    value: complex
    tail_bound: float


def sieve(limit: int) -> np.ndarray:
    """Sieve of Eratosthenes.

    Args:
        limit (int): Upper bound (inclusive)

    Returns:
        np.ndarray: The primes <= limit
    """
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def build_prime_table(limit: int, max_limit: int = MAX_PRIME_LIMIT) -> PrimeTable:
    """Sieve all primes up to a bound and cache their logarithms.

    Args:
        limit (int): Sieve bound, at least 2
        max_limit (int, optional): Memory budget expressed as the largest bound. Defaults to MAX_PRIME_LIMIT.

    Returns:
        PrimeTable: The table
    """
    if limit < 2:
        raise DomainError(f"prime limit must be at least 2, got {limit}")
    if limit > max_limit:
        raise ResourceError(f"prime limit {limit:g} exceeds the budget of {max_limit:g}")
    primes = sieve(int(limit))
    primes.setflags(write=False)
    logs = np.log(primes.astype(float))
    logs.setflags(write=False)
    logger.info("sieved %d primes up to %d", len(primes), limit)
    return PrimeTable(int(limit), primes, logs)


def _check_half_plane(name: str, *args: complex):
    for a in args:
        if not a.real > MIN_REAL_PART:
            raise DomainError(
                f"{name} requires real parts > {MIN_REAL_PART}, got {a}"
            )


def _power(table: PrimeTable, exponent: complex) -> np.ndarray:
    """p^(-exponent) for every prime in the table."""
    return np.exp(-exponent * table.logs)


def _last_primes(table: PrimeTable) -> np.ndarray:
    return table.primes[-ENVELOPE_PRIMES:].astype(float)


def _tail_bound(
    majorant: np.ndarray, table: PrimeTable, sigma: float, log_power: int
) -> float:
    """Bound the sum of the summands over primes beyond the table.

    `majorant` bounds |summand| on the last primes of the table and behaves like
    C log^k(p) p^-sigma; the prime sum beyond the table is compared with the integral of
    C log^(k-1)(t) t^-sigma.
    """
    if len(majorant) == 0:
        return 0.0
    logs = np.log(_last_primes(table))
    envelope = np.max(
        np.abs(majorant[-len(logs):]) * np.exp(sigma * logs) / logs**log_power
    )
    if envelope == 0.0:
        return 0.0
    log_x = math.log(table.limit)
    growth = 1.0 + max(log_power - 1, 0) / ((sigma - 1.0) * log_x)
    return float(
        2.0
        * envelope
        * math.exp((1.0 - sigma) * log_x)
        * log_x ** (log_power - 1)
        * growth
        / (sigma - 1.0)
    )


def _empirical_decay(terms: np.ndarray, table: PrimeTable) -> float:
    """Decay exponent of |terms| estimated from the last two octaves of primes."""
    magnitudes = np.abs(terms)
    top = table.limit
    upper = magnitudes[table.primes > top / 2]
    lower = magnitudes[(table.primes > top / 4) & (table.primes <= top / 2)]
    if len(upper) == 0 or len(lower) == 0 or upper.max() == 0.0:
        return 2.0
    sigma = math.log2(lower.max() / upper.max())
    return min(max(sigma, 1.05), 4.0)


def _log_factor(u: np.ndarray, name: str) -> np.ndarray:
    """log(1 + u), refusing factors that (nearly) vanish."""
    if np.any(np.abs(1.0 + u) < FACTOR_TOLERANCE):
        raise FactorNearZero(f"a local factor of {name} is within {FACTOR_TOLERANCE:g} of zero")
    return log1p_complex(u)


def _product(
    log_terms: np.ndarray,
    majorant: np.ndarray,
    table: PrimeTable,
    sigma: float,
    name: str,
) -> TailEstimate:
    value = ensure_finite(np.exp(complex_fsum(log_terms)), name)
    # |log(1 + u)| <= 2|u| once |u| <= 1/2
    tail_log = 2.0 * _tail_bound(majorant, table, sigma, 0)
    return TailEstimate(complex(value), abs(value) * math.expm1(min(tail_log, 700.0)))


def a_term(x: complex, table: PrimeTable) -> TailEstimate:
    """A(x) = prod_p (1 - p^(-1-x)) (1 - 2/p + p^(-1-x)) / (1 - 1/p)^2.

    Args:
        x (complex): Argument, Re x > -0.5
        table (PrimeTable): Primes to multiply over

    Returns:
        TailEstimate: The truncated product
    """
    x = complex(x)
    _check_half_plane("A", x)
    return table.memoized(_a_term)(x)


def _a_term(table: PrimeTable, x: complex) -> TailEstimate:
    q = 1.0 / table.primes
    # each factor is 1 - q^2 (p^-x - 1)^2 / (1 - q)^2
    e = np.expm1(-x * table.logs)
    u = -((q * e / (1.0 - q)) ** 2)
    last = _last_primes(table)
    majorant = ((1.0 + last ** -x.real) / (last - 1.0)) ** 2
    sigma = 2.0 + 2.0 * min(x.real, 0.0)
    return _product(_log_factor(u, "A"), majorant, table, sigma, "a_term")


def b_term(x: complex, table: PrimeTable) -> TailEstimate:
    """B(x) = sum_p (log p / (p^(1+x) - 1))^2.

    Args:
        x (complex): Argument, Re x > -0.5
        table (PrimeTable): Primes to sum over

    Returns:
        TailEstimate: The truncated sum
    """
    x = complex(x)
    _check_half_plane("B", x)
    return table.memoized(_b_term)(x)


def _b_term(table: PrimeTable, x: complex) -> TailEstimate:
    terms = (table.logs / np.expm1((1.0 + x) * table.logs)) ** 2
    value = ensure_finite(complex_fsum(terms), "b_term")
    last = _last_primes(table)
    majorant = (np.log(last) / (last ** (1.0 + x.real) - 1.0)) ** 2
    return TailEstimate(value, _tail_bound(majorant, table, 2.0 + 2.0 * x.real, 2))


def q_term(x: complex, y: complex, table: PrimeTable) -> TailEstimate:
    """Q(x, y) = -sum_p log^3 p / (p^(2+x+y) (1 - p^(-1-x)) (1 - p^(-1-y))).

    Args:
        x (complex): First argument, Re x > -0.5
        y (complex): Second argument, Re y > -0.5
        table (PrimeTable): Primes to sum over

    Returns:
        TailEstimate: The truncated sum
    """
    x, y = complex(x), complex(y)
    _check_half_plane("Q", x, y)
    return table.memoized(_q_term)(x, y)


def _q_term(table: PrimeTable, x: complex, y: complex) -> TailEstimate:
    logs = table.logs
    terms = -(logs**3) * _power(table, 2.0 + x + y)
    terms = terms / ((1.0 - _power(table, 1.0 + x)) * (1.0 - _power(table, 1.0 + y)))
    value = ensure_finite(complex_fsum(terms), "q_term")
    last = _last_primes(table)
    majorant = (
        np.log(last) ** 3
        * last ** -(2.0 + x.real + y.real)
        / ((1.0 - last ** -(1.0 + x.real)) * (1.0 - last ** -(1.0 + y.real)))
    )
    return TailEstimate(value, _tail_bound(majorant, table, 2.0 + x.real + y.real, 3))


def p_term(x: complex, y: complex, table: PrimeTable) -> TailEstimate:
    """P(x, y), the first-derivative prime object of the three-over-three ratios product.

    P(x, y) = A(x) sum_p log p (1 - p^-x)(1 - p^-x - p^-y + p^(-1-y))
              / ((p^(-1+x-y) - 1)(1 - p^(-1-y))(1 - 2/p + p^(-1-x)) p^(2-x+y))

    P is linear in x near x = 0; the block of the moment integral carrying (t/2pi)^(-alpha_1-beta)
    uses P(alpha_1 + beta, alpha_2 + beta).

    Args:
        x (complex): First argument, Re x > -0.5
        y (complex): Second argument, Re y > -0.5
        table (PrimeTable): Primes to sum over

    Returns:
        TailEstimate: The truncated value
    """
    x, y = complex(x), complex(y)
    _check_half_plane("P", x, y)
    sigma = 2.0 - x.real + y.real - max(0.0, -x.real) - max(0.0, -x.real, -y.real)
    if sigma <= 1.05:
        raise DomainError(f"P does not converge absolutely at x = {x}, y = {y}")
    return table.memoized(_p_term)(x, y, sigma)


def _p_term(table: PrimeTable, x: complex, y: complex, sigma: float) -> TailEstimate:
    q = 1.0 / table.primes
    px, py = _power(table, x), _power(table, y)
    numerator = (1.0 - px) * (1.0 - px - py + q * py)
    denominator = (
        np.expm1((-1.0 + x - y) * table.logs)
        * (1.0 - q * py)
        * (1.0 - 2.0 * q + q * px)
        * _power(table, -(2.0 - x + y))
    )
    terms = table.logs * numerator / denominator
    total = complex_fsum(terms)
    a = table.memoized(_a_term)(x)
    value = ensure_finite(a.value * total, "p_term")

    last = _last_primes(table)
    rx, ry = x.real, y.real
    majorant = (
        np.log(last)
        * (1.0 + last**-rx)
        * (1.0 + last**-rx + last**-ry + last ** (-1.0 - ry))
        / (
            np.abs(1.0 - last ** (-1.0 + rx - ry))
            * (1.0 - last ** (-1.0 - ry))
            * (1.0 - 2.0 / last - last ** (-1.0 - rx))
            * last ** (2.0 - rx + ry)
        )
    )
    tail = abs(a.value) * _tail_bound(majorant, table, sigma, 1) + a.tail_bound * abs(total)
    return TailEstimate(complex(value), tail)


def _t(table: PrimeTable, u: complex, v: complex) -> np.ndarray:
    """p^(-1-u-v)."""
    return _power(table, 1.0 + u + v)


def a_zeta_33(
    alpha1: complex,
    alpha2: complex,
    beta: complex,
    gamma1: complex,
    gamma2: complex,
    delta: complex,
    table: PrimeTable,
) -> TailEstimate:
    """The arithmetic factor of the three-over-three ratios conjecture.

    Each local factor is
        (1 - p^(-1-g1-d))(1 - p^(-1-g2-d)) E
        / ((1 - p^(-1-a1-d))(1 - p^(-1-a2-d))(1 - p^(-1-g1-b))(1 - p^(-1-g2-b)))
    with E the eight-term bracket
        1 - p^(b-d) - p^(-1-g1-b) + p^(-1-g1-d) - p^(-1-g2-b) + p^(-1-g2-d)
        + p^(-2-g1-g2-2b) - p^(-2-g1-g2-b-d) + p^(b-d)(1 - p^(-1-a1-b))(1 - p^(-1-a2-b)).

    Args:
        alpha1 (complex): First numerator shift
        alpha2 (complex): Second numerator shift
        beta (complex): Conjugate numerator shift
        gamma1 (complex): First denominator shift
        gamma2 (complex): Second denominator shift
        delta (complex): Conjugate denominator shift
        table (PrimeTable): Primes to multiply over

    Returns:
        TailEstimate: The truncated product
    """
    args = tuple(complex(a) for a in (alpha1, alpha2, beta, gamma1, gamma2, delta))
    _check_half_plane("A_zeta(3/3)", *args)
    a1, a2, b, g1, g2, d = args

    u1, u2 = _t(table, a1, b), _t(table, a2, b)
    w1, w2 = _t(table, g1, b), _t(table, g2, b)
    v1, v2 = _t(table, g1, d), _t(table, g2, d)
    shift = _power(table, d - b)
    eps = shift * (u1 * u2 - u1 - u2) - w1 + v1 - w2 + v2 + w1 * w2 - w1 * v2

    name = "A_zeta(3/3)"
    log_terms = (
        _log_factor(-v1, name)
        + _log_factor(-v2, name)
        + _log_factor(eps, name)
        - _log_factor(-_t(table, a1, d), name)
        - _log_factor(-_t(table, a2, d), name)
        - _log_factor(-w1, name)
        - _log_factor(-w2, name)
    )
    sigma = _empirical_decay(log_terms, table)
    return _product(log_terms, np.abs(log_terms), table, sigma, name)


def a_zeta_22(
    alpha: complex, beta: complex, gamma: complex, delta: complex, table: PrimeTable
) -> TailEstimate:
    """The arithmetic factor of the two-over-two ratios conjecture.

    Each local factor is
        (1 - p^(-1-g-d))(1 - p^(-1-b-g) - p^(-1-a-d) + p^(-1-g-d)) / ((1 - p^(-1-b-g))(1 - p^(-1-a-d))).

    Args:
        alpha (complex): Numerator shift
        beta (complex): Conjugate numerator shift
        gamma (complex): Denominator shift
        delta (complex): Conjugate denominator shift
        table (PrimeTable): Primes to multiply over

    Returns:
        TailEstimate: The truncated product
    """
    args = tuple(complex(a) for a in (alpha, beta, gamma, delta))
    _check_half_plane("A_zeta(2/2)", *args)
    a, b, g, d = args

    t_gd, t_bg, t_ad = _t(table, g, d), _t(table, b, g), _t(table, a, d)
    name = "A_zeta(2/2)"
    log_terms = (
        _log_factor(-t_gd, name)
        + _log_factor(-t_bg - t_ad + t_gd, name)
        - _log_factor(-t_bg, name)
        - _log_factor(-t_ad, name)
    )
    sigma = _empirical_decay(log_terms, table)
    return _product(log_terms, np.abs(log_terms), table, sigma, name)
