import math

import numpy as np
import pytest

from conftest import FIRST_ZEROS
from triple_correlation.density import (
    DensityDeps,
    TestFunctionGrid,
    bracket,
    bracket_terms,
    full_sum_decomposition,
    integrate_against_test,
    is_broadly_decreasing,
    limit_check,
    normalization_constant,
    sine_kernel_det,
    sine_kernel_grid,
    theory_grid,
    theory_profile,
)
from triple_correlation.errors import DomainError, GridMismatch, SingularInput
from triple_correlation.grid import NORMALIZATION_SINE_KERNEL, NORMALIZATION_TL3
from triple_correlation.primes import build_prime_table
from triple_correlation.ratios import log_power_integral

T = 1e4


def _gaussian(v1, v2):
    return np.exp(-(v1 * v1 + v2 * v2))


def test_sine_kernel_det_against_matrix():
    points = np.array([0.0, 0.5, 2.5])
    matrix = np.sinc(np.subtract.outer(points, points))
    assert sine_kernel_det(0.5, 2.5) == pytest.approx(np.linalg.det(matrix), rel=1e-12)


def test_sine_kernel_det_limits():
    assert sine_kernel_det(0.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert sine_kernel_det(1.0, 2.0) == pytest.approx(1.0)
    assert sine_kernel_det(0.3, 1.7) == pytest.approx(sine_kernel_det(1.7, 0.3))


def test_sine_kernel_grid():
    grid = sine_kernel_grid(2.0, 0.5)
    np.testing.assert_allclose(grid.v1_axis, [0.25, 0.75, 1.25, 1.75])
    assert grid.normalization == NORMALIZATION_SINE_KERNEL
    assert not grid.mask.any()
    assert grid.values[1, 3] == pytest.approx(sine_kernel_det(0.75, 1.75))


def test_normalization_constant():
    assert normalization_constant(T) == pytest.approx(T * math.log(T / (2 * math.pi)) ** 3)
    with pytest.raises(DomainError):
        normalization_constant(5.0)


def test_bracket_is_symmetric(deps):
    assert bracket(1.3, 4.1, T, deps) == pytest.approx(bracket(4.1, 1.3, T, deps), rel=1e-9)


def test_bracket_is_even_under_joint_negation(deps):
    assert bracket(-0.8, 2.2, T, deps) == pytest.approx(bracket(0.8, -2.2, T, deps), rel=1e-9)


def test_bracket_terms_pair_into_conjugates(deps):
    terms = bracket_terms(1.3, 4.1, T, deps)
    assert len(terms) == 13
    for left, right in (
        ("I(iv1,iv2;0)", "I(-iv1,-iv2;0)"),
        ("I(0,iv1;-iv2)", "I(0,-iv1;iv2)"),
        ("I(0,iv2;-iv1)", "I(0,-iv2;iv1)"),
        ("I1(0;iv2)", "I1(-iv2;0)"),
        ("I1(0;iv1)", "I1(-iv1;0)"),
        ("I1(-iv2;iv1)", "I1(-iv1;iv2)"),
    ):
        assert terms[left] == pytest.approx(terms[right].conjugate(), rel=1e-10)
    total = sum(terms.values())
    assert abs(total.imag) <= 1e-9 * abs(total)
    assert bracket(1.3, 4.1, T, deps) == pytest.approx(total.real, rel=1e-10)


@pytest.mark.parametrize(
    "v1, v2, line",
    [(0.0, 1.0, "v1 = 0"), (2.0, 0.0, "v2 = 0"), (1.5, 1.5, "v1 = v2")],
)
def test_bracket_refuses_singular_lines(deps, v1, v2, line):
    with pytest.raises(SingularInput, match=line):
        bracket(v1, v2, T, deps)


def test_bracket_respects_mask_band(deps):
    with pytest.raises(SingularInput):
        bracket(1.0, 1.2, T, deps, mask_band=0.5)


def test_far_point_is_near_sine_kernel(deps):
    height = 75000.0
    L = math.log(height / (2 * math.pi))
    v1, v2 = 5.3, 17.1
    value = bracket(v1, v2, height, deps) / log_power_integral(3, height)
    limit = sine_kernel_det(v1 * L / (2 * math.pi), v2 * L / (2 * math.pi))
    assert abs(value - limit) < 0.15


def test_theory_grid(deps):
    grid = theory_grid(2.0, 0.5, T, 0.3, deps, progress=False)
    np.testing.assert_allclose(grid.v1_axis, [0.25, 0.75, 1.25, 1.75])
    assert grid.normalization == NORMALIZATION_TL3
    assert grid.prime_limit == deps.table.limit
    assert grid.mask[0].all() and grid.mask[:, 0].all()
    assert np.diag(grid.mask).all()
    assert not grid.mask[1, 2]
    assert (grid.values[grid.mask] == 0).all()
    np.testing.assert_allclose(grid.values, grid.values.T, rtol=1e-9)
    assert grid.values[1, 3] == pytest.approx(
        bracket(0.75, 1.75, T, deps) / normalization_constant(T)
    )


def test_theory_grid_does_not_depend_on_workers(deps):
    serial = theory_grid(1.5, 0.5, T, 0.2, deps, n_jobs=1, progress=False)
    parallel = theory_grid(1.5, 0.5, T, 0.2, deps, n_jobs=2, progress=False)
    np.testing.assert_allclose(parallel.values, serial.values, rtol=1e-14)


@pytest.mark.slow
def test_grid_at_the_height_of_the_first_100000_zeros():
    deps = DensityDeps(build_prime_table(10**5))
    grid = theory_grid(30.0, 0.25, 74920.827498994, 0.5, deps, n_jobs=-1, progress=False)
    assert abs(grid.stats().max - 0.799) < 0.05
    # column v2 = 2.125 keeps the lines v1 = v2 + g clear of the first three zeros
    column = grid.values[:, 8]
    assert grid.v2_axis[8] == pytest.approx(2.125)
    for gamma in FIRST_ZEROS[:3]:
        k = int(np.argmin(np.abs(grid.v1_axis - gamma)))
        neighbours = np.concatenate([column[k - 2 : k], column[k + 1 : k + 3]])
        assert not grid.mask[k - 2 : k + 3, 8].any()
        assert column[k] < neighbours.mean()


@pytest.mark.parametrize(
    "window, step, band", [(2.0, 0.5, 0.0), (2.0, 3.0, 0.3), (-1.0, 0.5, 0.3)]
)
def test_theory_grid_arguments(deps, window, step, band):
    with pytest.raises(DomainError):
        theory_grid(window, step, T, band, deps, progress=False)


def test_profile_is_a_grid_column(deps):
    grid = theory_grid(2.0, 0.5, T, 0.3, deps, progress=False)
    profile = theory_profile(1.25, 2.0, 0.5, T, 0.3, deps, progress=False)
    np.testing.assert_array_equal(profile.mask, grid.mask[:, 2])
    np.testing.assert_allclose(profile.values, grid.values[:, 2], rtol=1e-12)
    assert profile.header()["v2"] == "1.25"


def test_test_function_grid_layout():
    f = TestFunctionGrid.sample(_gaussian, 1.0, 0.25)
    assert len(f.axis) == 8
    assert f.step == pytest.approx(0.25)
    assert f.axis[0] == pytest.approx(-0.875)
    assert not np.any(f.axis == 0)
    with pytest.raises(GridMismatch):
        TestFunctionGrid(np.array([0.0, 0.5, 1.0, 1.5]), np.ones((4, 4)))
    with pytest.raises(GridMismatch):
        TestFunctionGrid(f.axis, np.ones((8, 7)))


def test_integral_of_zero_function(deps):
    f = TestFunctionGrid.sample(lambda v1, v2: 0 * v1, 1.0, 0.25)
    assert integrate_against_test(f, T, deps, progress=False) == 0.0


def test_integral_is_linear(deps):
    f = TestFunctionGrid.sample(_gaussian, 1.0, 0.25)
    twice = TestFunctionGrid(f.axis, 2 * f.values)
    single = integrate_against_test(f, T, deps, progress=False)
    assert integrate_against_test(twice, T, deps, progress=False) == pytest.approx(
        2 * single, rel=1e-12
    )


def test_integral_of_jointly_odd_function_vanishes(deps):
    even = TestFunctionGrid.sample(_gaussian, 1.0, 0.25)
    odd = TestFunctionGrid.sample(lambda v1, v2: (v1 + v2) * _gaussian(v1, v2), 1.0, 0.25)
    scale = abs(integrate_against_test(even, T, deps, progress=False))
    assert abs(integrate_against_test(odd, T, deps, progress=False)) < 1e-8 * scale


def test_integral_rejects_plain_arrays(deps):
    with pytest.raises(GridMismatch):
        integrate_against_test(np.ones((4, 4)), T, deps, progress=False)


def test_full_sum_decomposition(deps):
    f = TestFunctionGrid.sample(_gaussian, 1.0, 0.25)
    parts = full_sum_decomposition(f, T, deps, progress=False)
    assert parts.single_term == pytest.approx(log_power_integral(1, T) / (2 * math.pi))
    assert parts.distinct_triple == pytest.approx(
        integrate_against_test(f, T, deps, progress=False)
    )
    assert parts.total == pytest.approx(
        parts.distinct_triple + parts.pair_terms + parts.single_term
    )


def test_narrow_bump_picks_out_the_bracket(deps):
    sigma, h = 0.1, 0.05

    def bump(v1, v2):
        return np.exp(-((v1 - 5.0) ** 2 + (v2 - 11.0) ** 2) / (2 * sigma**2))

    f = TestFunctionGrid.sample(bump, 12.0, h)
    mass = f.values.sum() * h * h
    expected = bracket(5.0, 11.0, T, deps) * mass / (2 * math.pi) ** 3
    assert integrate_against_test(f, T, deps, progress=False) == pytest.approx(
        expected, rel=1e-2
    )


def test_integral_converges_under_step_halving(deps):
    parts = [
        full_sum_decomposition(TestFunctionGrid.sample(_gaussian, 1.0, h), T, deps, progress=False)
        for h in (0.25, 0.125, 0.0625)
    ]
    distinct = [p.distinct_triple for p in parts]
    totals = [p.total for p in parts]
    # second order: each halving shrinks the change by about four
    assert abs(distinct[0] - distinct[1]) >= 4 * abs(distinct[1] - distinct[2])
    assert abs(totals[1] - totals[2]) < abs(totals[0] - totals[1])
    assert totals[2] == pytest.approx(totals[1], rel=1e-2)


def test_limit_check_arguments(deps):
    with pytest.raises(DomainError):
        limit_check(1.3, 2.7, [], deps)
    with pytest.raises(DomainError):
        limit_check(1.3, 2.7, [500.0, 1e4], deps)
    with pytest.raises(DomainError):
        limit_check(1.3, 2.7, [1e6, 1e4], deps)
    with pytest.raises(SingularInput):
        limit_check(1.3, 1.3, [1e4], deps)


@pytest.mark.slow
@pytest.mark.parametrize("v1, v2", [(1.3, 2.7), (0.7, 4.1), (2.2, 5.9)])
def test_limit_approaches_sine_kernel(deps, v1, v2):
    rows = limit_check(v1, v2, [1e4, 1e6, 1e9, 1e12], deps)
    errors = [row.abs_error for row in rows]
    assert rows[0].limit_value == pytest.approx(sine_kernel_det(v1, v2))
    assert is_broadly_decreasing(errors)
    assert errors[-1] < 0.05


@pytest.mark.parametrize(
    "errors, expected",
    [
        ([0.3, 0.2, 0.1], True),
        ([0.3, 0.31, 0.1], True),
        ([0.3, 0.5, 0.1], False),
        ([0.1, 0.1], False),
        ([0.2], True),
    ],
)
def test_is_broadly_decreasing(errors, expected):
    assert is_broadly_decreasing(errors) is expected
