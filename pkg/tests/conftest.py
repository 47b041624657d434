import pytest

from triple_correlation.density import DensityDeps
from triple_correlation.primes import build_prime_table

# ordinates of the first twenty nontrivial zeros
FIRST_ZEROS = [
    14.134725142,
    21.022039639,
    25.010857580,
    30.424876126,
    32.935061588,
    37.586178159,
    40.918719012,
    43.327073281,
    48.005150881,
    49.773832478,
    52.970321478,
    56.446247697,
    59.347044003,
    60.831778525,
    65.112544048,
    67.079810529,
    69.546401711,
    72.067157674,
    75.704690699,
    77.144840069,
]


@pytest.fixture(scope="session")
def small_table():
    return build_prime_table(10**4)


@pytest.fixture(scope="session")
def deps(small_table):
    return DensityDeps(small_table)


@pytest.fixture
def zero_file(tmp_path):
    path = tmp_path / "zeros.txt"
    lines = ["# first zeros of zeta"] + [f"{g:.9f}" for g in FIRST_ZEROS]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
