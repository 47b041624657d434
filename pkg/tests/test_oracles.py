import cmath
import math

import numpy as np
import pytest

from triple_correlation.errors import DomainError
from triple_correlation.oracles import (
    brute_force_pair_counts,
    brute_force_triple_counts,
    central_diff,
    check_moment_quadrature,
    check_prime_derivatives,
    check_rmt_identity,
    contour_residue,
    mixed_diff2,
    mixed_diff3,
    moment_quadrature,
    random_separated_triples,
    random_shifts,
    run_selftest,
    sieve_primes_to,
    weyl_ratios_22,
)


def test_second_sieve():
    assert list(sieve_primes_to(30)) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert list(sieve_primes_to(1)) == []
    assert list(sieve_primes_to(2)) == [2]
    assert list(sieve_primes_to(9)) == [2, 3, 5, 7]


def test_finite_differences():
    assert central_diff(cmath.exp, 0.3) == pytest.approx(math.exp(0.3), rel=1e-10)
    assert mixed_diff2(lambda x, y: cmath.exp(x) * cmath.sin(y), 0.2, 0.5) == pytest.approx(
        math.exp(0.2) * math.cos(0.5), rel=1e-8
    )
    assert mixed_diff3(lambda x, y, z: (x * y * z) ** 2, 0.5, 1.5, -1.0) == pytest.approx(
        8 * 0.5 * 1.5 * -1.0, rel=1e-9
    )


def test_contour_residue():
    assert contour_residue(lambda z: 3 / (z - 1) + z * z, 1.0) == pytest.approx(3.0, abs=1e-12)


def test_moment_quadrature_of_constant():
    assert moment_quadrature(lambda t: 1.0, 500.0) == pytest.approx(500.0, rel=1e-10)


def test_weyl_quadrature_dimensions():
    with pytest.raises(DomainError):
        weyl_ratios_22(0.1, 0.2, 0.3, 0.4, 3)


def test_brute_force_counts():
    assert brute_force_pair_counts([1.0, 2.0, 3.5], 3.0, 1.0).tolist() == [1, 1, 1]
    counts = brute_force_triple_counts([1.0, 2.0, 3.5], 3.0, 1.0)
    # only the top zero sees two others below it
    assert counts.sum() == 2
    assert counts[2, 1] == 1 and counts[1, 2] == 1


def test_random_triples_are_separated():
    rng = np.random.default_rng(0)
    for t in random_separated_triples(rng, 50, min_gap=0.3):
        for a, b in ((0, 1), (0, 2), (1, 2)):
            d = (t[a] - t[b]) % (2 * math.pi)
            assert min(d, 2 * math.pi - d) >= 0.3


def test_random_shifts_range():
    rng = np.random.default_rng(1)
    for _ in range(20):
        for s in random_shifts(rng):
            assert 0.05 <= s.real <= 0.3
            assert -1.0 <= s.imag <= 1.0


def test_prime_derivative_check(small_table):
    result = check_prime_derivatives(small_table, points=3, progress=False)
    assert result.passed, result.detail


def test_moment_quadrature_check(small_table):
    result = check_moment_quadrature(small_table, points=3, progress=False)
    assert result.passed, result.detail


@pytest.mark.slow
def test_selftest(deps):
    results = run_selftest(deps, progress=False)
    assert len(results) == 10
    failed = [r for r in results if not r.passed]
    assert not failed, failed


def test_rmt_identity_needs_samples():
    with pytest.raises(DomainError):
        check_rmt_identity(3, samples=0)
