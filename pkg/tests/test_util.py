import math

import numpy as np
import pytest

from triple_correlation.errors import (
    DomainError,
    EmptyFile,
    NumericalOverflow,
    ParseError,
    PoleAtOne,
    TripleCorrelationError,
)
from triple_correlation.util import (
    JOBS_ENV_VAR,
    complex_fsum,
    ensure_finite,
    jobs_from_env,
    log1p_complex,
)


def test_ensure_finite():
    assert ensure_finite(1 + 2j, "x") == 1 + 2j
    with pytest.raises(NumericalOverflow, match="zeta"):
        ensure_finite(complex(math.inf, 0), "zeta")
    with pytest.raises(NumericalOverflow):
        ensure_finite(math.nan, "x")


def test_complex_fsum_is_compensated():
    values = [1e16 + 1j, 1.0 - 1e16j, -1e16 + 1e16j]
    assert complex_fsum(values) == 1.0 + 1j
    assert complex_fsum(np.array([0.5j, 0.25])) == 0.25 + 0.5j


def test_log1p_complex_keeps_small_real_parts():
    u = np.array([1e-20 + 1e-12j, -0.5 + 0.25j])
    # log|1 + u| = Re u + (Im u)^2 / 2 to leading order
    expected = [1e-20 + 5e-25 + 1e-12j, complex(np.log(0.5 + 0.25j))]
    np.testing.assert_allclose(log1p_complex(u).real, np.real(expected), rtol=1e-6)
    np.testing.assert_allclose(log1p_complex(u).imag, np.imag(expected), rtol=1e-12)


def test_jobs_from_env(monkeypatch):
    monkeypatch.delenv(JOBS_ENV_VAR, raising=False)
    assert jobs_from_env() == 1
    assert jobs_from_env(default=4) == 4
    monkeypatch.setenv(JOBS_ENV_VAR, " ")
    assert jobs_from_env() == 1
    monkeypatch.setenv(JOBS_ENV_VAR, "-1")
    assert jobs_from_env() == -1
    monkeypatch.setenv(JOBS_ENV_VAR, "two")
    with pytest.raises(ValueError):
        jobs_from_env()


def test_error_hierarchy():
    assert issubclass(PoleAtOne, DomainError)
    assert issubclass(DomainError, ValueError)
    assert issubclass(EmptyFile, ParseError)
    assert issubclass(NumericalOverflow, TripleCorrelationError)


def test_parse_error_location():
    assert str(ParseError("bad", "zeros.txt", 7)) == "zeros.txt:7: bad"
    assert str(ParseError("bad", "zeros.txt")) == "zeros.txt: bad"
    assert str(ParseError("bad")) == "bad"
    assert ParseError("bad", "zeros.txt", 7).line_number == 7
