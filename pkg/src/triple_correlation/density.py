import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from triple_correlation.errors import DomainError, GridMismatch, SingularInput
from triple_correlation.grid import (
    NORMALIZATION_SINE_KERNEL,
    NORMALIZATION_TL3,
    CorrelationGrid,
    CorrelationProfile,
    cell_centres,
    singular_mask,
)
from triple_correlation.primes import PrimeTable
from triple_correlation.ratios import i1, i3, log_power_integral, two_point_bracket
from triple_correlation.zeta import DEFAULT_PARAMS, EulerMaclaurinParams

logger = logging.getLogger(__name__)

# smallest distance to a singular line accepted even when no band is requested
LINE_TOLERANCE = 1e-12
# relative size below which a test-function sample counts as zero
NEGLIGIBLE_SAMPLE = 1e-14
MIN_LIMIT_HEIGHT = 1e3


@dataclass(frozen=True)
class DensityDeps(object):
    """Shared read-only inputs of every density evaluation.

    Args:
        table (PrimeTable): Primes for the arithmetic factors
        params (EulerMaclaurinParams): Zeta accuracy
    """

    table: PrimeTable
    params: EulerMaclaurinParams = DEFAULT_PARAMS


def normalization_constant(T: float) -> float:
    """T L^3 with L = log(T / 2pi), which scales the bracket to a unit-density correlation.

    Args:
        T (float): Height, T > 2pi

    Returns:
        float: The constant
    """
    if not T > 2 * math.pi:
        raise DomainError(f"T must exceed 2pi, got {T}")
    return T * math.log(T / (2 * math.pi)) ** 3


def _check_off_lines(v1: float, v2: float, band: float):
    band = max(band, LINE_TOLERANCE)
    if abs(v1) < band:
        raise SingularInput(f"({v1}, {v2}) is within {band:g} of the line v1 = 0")
    if abs(v2) < band:
        raise SingularInput(f"({v1}, {v2}) is within {band:g} of the line v2 = 0")
    if abs(v1 - v2) < band:
        raise SingularInput(f"({v1}, {v2}) is within {band:g} of the line v1 = v2")


def bracket_terms(v1: float, v2: float, T: float, deps: DensityDeps) -> Dict[str, complex]:
    """All thirteen terms of the bracket, each evaluated on its own.

    The six three-point and six two-point terms form complex-conjugate pairs.

    Args:
        v1 (float): First separation
        v2 (float): Second separation
        T (float): Height
        deps (DensityDeps): Shared inputs

    Returns:
        Dict[str, complex]: Term labels mapped to values
    """
    v1, v2 = float(v1), float(v2)
    _check_off_lines(v1, v2, 0.0)
    a, b = 1j * v1, 1j * v2
    table, params = deps.table, deps.params
    terms = {"log^3": complex(log_power_integral(3, T))}
    for label, args in (
        ("I(iv1,iv2;0)", (a, b, 0)),
        ("I(0,iv1;-iv2)", (0, a, -b)),
        ("I(0,iv2;-iv1)", (0, b, -a)),
        ("I(-iv1,-iv2;0)", (-a, -b, 0)),
        ("I(0,-iv2;iv1)", (0, -b, a)),
        ("I(0,-iv1;iv2)", (0, -a, b)),
    ):
        terms[label] = i3(*args, T, table, params).value
    for label, args in (
        ("I1(0;iv2)", (0, b)),
        ("I1(0;iv1)", (0, a)),
        ("I1(-iv2;iv1)", (-b, a)),
        ("I1(-iv2;0)", (-b, 0)),
        ("I1(-iv1;iv2)", (-a, b)),
        ("I1(-iv1;0)", (-a, 0)),
    ):
        terms[label] = i1(*args, T, table, params).value
    return terms


def bracket(
    v1: float, v2: float, T: float, deps: DensityDeps, mask_band: float = 0.0
) -> float:
    """The triple-correlation bracket at separations (v1, v2), integrated over heights up to T.

    Each moment with a negated shift is the complex conjugate of its partner, so only one of each
    pair is computed.

    Args:
        v1 (float): First separation
        v2 (float): Second separation
        T (float): Height
        deps (DensityDeps): Shared inputs
        mask_band (float, optional): Refuse points closer than this to a singular line. Defaults to 0.0.

    Returns:
        float: The bracket
    """
    v1, v2 = float(v1), float(v2)
    _check_off_lines(v1, v2, mask_band)
    a, b = 1j * v1, 1j * v2
    table, params = deps.table, deps.params
    paired = (
        i3(a, b, 0, T, table, params).value
        + i3(0, a, -b, T, table, params).value
        + i3(0, b, -a, T, table, params).value
        + i1(0, b, T, table, params).value
        + i1(0, a, T, table, params).value
        + i1(-b, a, T, table, params).value
    )
    return log_power_integral(3, T) + 2.0 * paired.real


def _bracket_row(
    v1: float, v2_axis: np.ndarray, mask_row: np.ndarray, T: float, deps: DensityDeps
) -> np.ndarray:
    row = np.zeros(len(v2_axis))
    for j, v2 in enumerate(v2_axis):
        if not mask_row[j]:
            row[j] = bracket(v1, v2, T, deps)
    return row


def _check_window(window: float, step: float, mask_band: float):
    if not window > 0:
        raise DomainError(f"window must be positive, got {window}")
    if not 0 < step < window:
        raise DomainError(f"step must be in (0, window), got {step}")
    if not mask_band > 0:
        raise DomainError(
            "pointwise evaluation needs a positive mask band around the singular lines"
        )


def theory_grid(
    window: float,
    step: float,
    T: float,
    mask_band: float,
    deps: DensityDeps,
    n_jobs: int = 1,
    progress: bool = True,
) -> CorrelationGrid:
    """The normalized bracket on [0, window]^2, sampled at cell centres.

    Args:
        window (float): Extent of both axes
        step (float): Cell width
        T (float): Height
        mask_band (float): Half-width of the excluded bands around the singular lines
        deps (DensityDeps): Shared inputs
        n_jobs (int, optional): Parallel workers. Defaults to 1.
        progress (bool, optional): Show a progress bar. Defaults to True.

    Returns:
        CorrelationGrid: The grid, divided by T L^3
    """
    _check_window(window, step, mask_band)
    axis = cell_centres(window, step)
    mask = singular_mask(axis, axis, mask_band)
    norm = normalization_constant(T)
    logger.info(
        "evaluating %dx%d theory grid at T=%g (%d masked cells)",
        len(axis),
        len(axis),
        T,
        int(mask.sum()),
    )
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_bracket_row)(v1, axis, mask[i], T, deps)
        for i, v1 in enumerate(
            tqdm(axis, desc="Evaluating theory grid", disable=not progress)
        )
    )
    values = np.vstack(rows) / norm
    values[mask] = 0.0
    return CorrelationGrid(
        axis,
        axis.copy(),
        values,
        mask,
        NORMALIZATION_TL3,
        T=T,
        kind="theory",
        mask_band=mask_band,
        prime_limit=deps.table.limit,
    )


def theory_profile(
    v2: float,
    window: float,
    step: float,
    T: float,
    mask_band: float,
    deps: DensityDeps,
    n_jobs: int = 1,
    progress: bool = True,
) -> CorrelationProfile:
    """Cross-section of the normalized bracket along v1 at fixed v2.

    Args:
        v2 (float): Fixed second separation
        window (float): Extent of the v1 axis
        step (float): Spacing
        T (float): Height
        mask_band (float): Half-width of the excluded bands
        deps (DensityDeps): Shared inputs
        n_jobs (int, optional): Parallel workers. Defaults to 1.
        progress (bool, optional): Show a progress bar. Defaults to True.

    Returns:
        CorrelationProfile: The profile, divided by T L^3
    """
    _check_window(window, step, mask_band)
    axis = cell_centres(window, step)
    mask = singular_mask(axis, np.array([v2]), mask_band)[:, 0]
    chunks = np.array_split(np.arange(len(axis)), max(1, min(len(axis), 4 * max(n_jobs, 1))))
    parts = Parallel(n_jobs=n_jobs)(
        delayed(_bracket_column)(axis[idx], v2, mask[idx], T, deps)
        for idx in tqdm(chunks, desc="Evaluating profile", disable=not progress)
    )
    values = np.concatenate(parts) / normalization_constant(T)
    values[mask] = 0.0
    return CorrelationProfile(
        axis,
        values,
        mask,
        v2=v2,
        normalization=NORMALIZATION_TL3,
        T=T,
        mask_band=mask_band,
        prime_limit=deps.table.limit,
    )


def _bracket_column(
    v1_values: np.ndarray, v2: float, mask: np.ndarray, T: float, deps: DensityDeps
) -> np.ndarray:
    return np.array(
        [0.0 if m else bracket(v1, v2, T, deps) for v1, m in zip(v1_values, mask)]
    )


def sine_kernel_det(v1, v2):
    """The limiting triple correlation det[S(vi - vj)] with S(x) = sin(pi x) / (pi x).

    Args:
        v1 (ArrayLike): First scaled separation(s)
        v2 (ArrayLike): Second scaled separation(s)

    Returns:
        ArrayLike: 1 - S(v1-v2)^2 - S(v1)^2 - S(v2)^2 + 2 S(v1) S(v2) S(v1-v2)
    """
    s1, s2, s12 = np.sinc(v1), np.sinc(v2), np.sinc(np.subtract(v1, v2))
    value = 1.0 - s12 * s12 - s1 * s1 - s2 * s2 + 2.0 * s1 * s2 * s12
    return float(value) if np.ndim(value) == 0 else value


def sine_kernel_grid(window: float, step: float) -> CorrelationGrid:
    """The sine-kernel determinant on the cell-centre axes used by `theory_grid`.

    Args:
        window (float): Extent of both axes
        step (float): Cell width

    Returns:
        CorrelationGrid: The grid
    """
    axis = cell_centres(window, step)
    v1, v2 = np.meshgrid(axis, axis, indexing="ij")
    return CorrelationGrid(
        axis,
        axis.copy(),
        sine_kernel_det(v1, v2),
        np.zeros(v1.shape, dtype=bool),
        NORMALIZATION_SINE_KERNEL,
        kind="sine-kernel",
    )


@dataclass
class TestFunctionGrid(object):
    """A test function f(v1, v2) sampled on the symmetric midpoint axis (k + 1/2) h, k = -n .. n-1.

    No sample lies on v1 = 0 or v2 = 0, and mirrored samples pair up across both axes.

    Args:
        axis (np.ndarray): The symmetric axis, shared by both coordinates
        values (np.ndarray): Samples of shape (2n, 2n)
        func (Optional[Callable], optional): The function itself, used for exact values on the lines
    """

    __test__ = False

    axis: np.ndarray
    values: np.ndarray
    func: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(
        default=None, compare=False
    )

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        m = len(self.axis)
        if self.axis.ndim != 1 or m < 2 or m % 2:
            raise GridMismatch("test-function axis must have an even number of points")
        h = self.axis[1] - self.axis[0]
        expected = (np.arange(m) - m // 2 + 0.5) * h
        if not h > 0 or not np.allclose(self.axis, expected, rtol=0, atol=1e-9 * h * m):
            raise GridMismatch("test-function axis must be (k + 1/2) h for k = -n .. n-1")
        if self.values.shape != (m, m):
            raise GridMismatch(f"test-function samples must have shape {(m, m)}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise GridMismatch("test-function samples must be finite")

    @property
    def step(self) -> float:
        """Grid spacing h."""
        return float(self.axis[1] - self.axis[0])

    @classmethod
    def sample(
        cls,
        func: Callable[[np.ndarray, np.ndarray], np.ndarray],
        half_width: float,
        step: float,
    ) -> "TestFunctionGrid":
        """Sample a vectorized function on [-half_width, half_width]^2.

        Args:
            func (Callable[[np.ndarray, np.ndarray], np.ndarray]): f(v1, v2)
            half_width (float): Half the extent of each axis
            step (float): Spacing h

        Returns:
            TestFunctionGrid: The samples
        """
        n = max(int(round(half_width / step)), 1)
        axis = (np.arange(-n, n) + 0.5) * step
        v1, v2 = np.meshgrid(axis, axis, indexing="ij")
        values = np.broadcast_to(func(v1, v2), v1.shape).astype(float)
        return cls(axis, values, func)


def _weighted_row(
    v1: float,
    f_row: np.ndarray,
    axis: np.ndarray,
    h: float,
    threshold: float,
    T: float,
    deps: DensityDeps,
) -> float:
    terms = []
    for v2, fv in zip(axis, f_row):
        if abs(fv) <= threshold:
            continue
        if abs(v1 - v2) < 0.25 * h:
            # on the diagonal: mean over the four axis neighbours, whose odd parts cancel
            value = 0.25 * (
                bracket(v1 + h, v2, T, deps)
                + bracket(v1 - h, v2, T, deps)
                + bracket(v1, v2 + h, T, deps)
                + bracket(v1, v2 - h, T, deps)
            )
        else:
            value = bracket(v1, v2, T, deps)
        terms.append(fv * value)
    return math.fsum(terms)


def integrate_against_test(
    f: TestFunctionGrid,
    T: float,
    deps: DensityDeps,
    n_jobs: int = 1,
    progress: bool = True,
) -> float:
    """Principal-value integral of f against the bracket, times (2pi)^-3.

    This estimates the sum of f(g1 - g2, g1 - g3) over ordered triples of distinct zeros up to T.

    Args:
        f (TestFunctionGrid): Sampled test function
        T (float): Height
        deps (DensityDeps): Shared inputs
        n_jobs (int, optional): Parallel workers. Defaults to 1.
        progress (bool, optional): Show a progress bar. Defaults to True.

    Returns:
        float: The integral
    """
    if not isinstance(f, TestFunctionGrid):
        raise GridMismatch("test function must be a TestFunctionGrid")
    scale = float(np.max(np.abs(f.values)))
    if scale == 0.0:
        return 0.0
    threshold = NEGLIGIBLE_SAMPLE * scale
    h = f.step
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_weighted_row)(v1, f.values[i], f.axis, h, threshold, T, deps)
        for i, v1 in enumerate(
            tqdm(f.axis, desc="Integrating against test function", disable=not progress)
        )
    )
    return math.fsum(rows) * h * h / (2 * math.pi) ** 3


@dataclass(frozen=True)
class FullSumDecomposition(object):
    """The sum of f over all ordered triples of zeros, split by coincidences.

    Args:
        distinct_triple (float): Triples of distinct zeros
        pair_terms (float): Triples in which exactly two zeros coincide
        single_term (float): Triples of one zero repeated
    """

    distinct_triple: float
    pair_terms: float
    single_term: float

    @property
    def total(self) -> float:
        """The full sum."""
        return self.distinct_triple + self.pair_terms + self.single_term


def _line_values(f: TestFunctionGrid):
    """f(0, v), f(v, 0), f(v, v) on the axis and f(0, 0)."""
    axis, values = f.axis, f.values
    if f.func is not None:
        zero = np.zeros_like(axis)
        on_v1 = np.broadcast_to(f.func(zero, axis), axis.shape).astype(float)
        on_v2 = np.broadcast_to(f.func(axis, zero), axis.shape).astype(float)
        origin = float(np.asarray(f.func(np.zeros(1), np.zeros(1))).ravel()[0])
    else:
        n = len(axis) // 2
        on_v1 = 0.5 * (values[n - 1, :] + values[n, :])
        on_v2 = 0.5 * (values[:, n - 1] + values[:, n])
        origin = float(values[n - 1 : n + 1, n - 1 : n + 1].mean())
    return on_v1, on_v2, np.diag(values).copy(), origin


def full_sum_decomposition(
    f: TestFunctionGrid,
    T: float,
    deps: DensityDeps,
    n_jobs: int = 1,
    progress: bool = True,
) -> FullSumDecomposition:
    """Split the full triple sum of f into distinct, pair and single contributions.

    Args:
        f (TestFunctionGrid): Sampled test function, continuous at the origin and on v1 = v2
        T (float): Height
        deps (DensityDeps): Shared inputs
        n_jobs (int, optional): Parallel workers. Defaults to 1.
        progress (bool, optional): Show a progress bar. Defaults to True.

    Returns:
        FullSumDecomposition: The three components
    """
    distinct = integrate_against_test(f, T, deps, n_jobs, progress)
    on_v1, on_v2, diagonal, origin = _line_values(f)
    weights = on_v1 + on_v2 + diagonal
    threshold = NEGLIGIBLE_SAMPLE * max(float(np.max(np.abs(weights))), 0.0)
    pair = math.fsum(
        w * two_point_bracket(r, T, deps.table, deps.params)
        for r, w in zip(f.axis, weights)
        if abs(w) > threshold
    )
    pair *= f.step / (2 * math.pi) ** 2
    single = origin * log_power_integral(1, T) / (2 * math.pi)
    logger.debug(
        "full sum at T=%g: distinct=%g pairs=%g single=%g", T, distinct, pair, single
    )
    return FullSumDecomposition(distinct, pair, single)


@dataclass(frozen=True)
class LimitRow(object):
    """One height of the sine-kernel limit check.

    Args:
        T (float): Height
        scaled_value (float): Bracket at scaled separations, divided by the integral of log^3
        limit_value (float): Sine-kernel determinant
        abs_error (float): |scaled_value - limit_value|
    """

    T: float
    scaled_value: float
    limit_value: float
    abs_error: float


def limit_check(
    v1: float, v2: float, T_list: Sequence[float], deps: DensityDeps
) -> List[LimitRow]:
    """Compare the bracket at separations 2 pi v / L with its sine-kernel limit for growing T.

    The bracket is divided by the integral of log^3(t/2pi) over [0, T], which removes the
    1/L bias of the plain T L^3 normalization.

    Args:
        v1 (float): First scaled separation
        v2 (float): Second scaled separation
        T_list (Sequence[float]): Ascending heights, each at least 1e3
        deps (DensityDeps): Shared inputs

    Returns:
        List[LimitRow]: One row per height
    """
    heights = [float(T) for T in T_list]
    if not heights:
        raise DomainError("T_list must not be empty")
    if any(T < MIN_LIMIT_HEIGHT for T in heights):
        raise DomainError(f"every height must be at least {MIN_LIMIT_HEIGHT:g}")
    if any(b <= a for a, b in zip(heights, heights[1:])):
        raise DomainError("T_list must be strictly ascending")
    _check_off_lines(v1, v2, 0.0)

    limit = sine_kernel_det(v1, v2)
    result = []
    for T in heights:
        L = math.log(T / (2 * math.pi))
        value = bracket(2 * math.pi * v1 / L, 2 * math.pi * v2 / L, T, deps)
        scaled = value / log_power_integral(3, T)
        result.append(LimitRow(T, scaled, limit, abs(scaled - limit)))
        logger.info("T=%g: scaled=%.6f limit=%.6f", T, scaled, limit)
    return result


def is_broadly_decreasing(errors: Sequence[float], slack: float = 0.2) -> bool:
    """Whether a sequence of errors shrinks overall, allowing small oscillations.

    Args:
        errors (Sequence[float]): Errors in order of increasing height
        slack (float, optional): Allowed relative growth from one entry to the next. Defaults to 0.2.

    Returns:
        bool: True if no step grows by more than `slack` and the last error is below the first
    """
    errors = list(errors)
    if len(errors) < 2:
        return True
    steady = all(b <= a * (1.0 + slack) for a, b in zip(errors, errors[1:]))
    return steady and errors[-1] < errors[0]
