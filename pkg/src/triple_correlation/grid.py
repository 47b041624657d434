"""Sampled correlation grids and profiles, and their CSV serialization.

A file starts with '#' header lines (key=value), followed by comma separated rows and a closing
'# stats max=.. min=.. mean=..' line over the unmasked cells.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from triple_correlation.errors import GridMismatch, ParseError

logger = logging.getLogger(__name__)

NORMALIZATION_RAW = "raw"
NORMALIZATION_TL3 = "T*L^3"
NORMALIZATION_LOG3 = "log3-integral"
NORMALIZATION_SINE_KERNEL = "sine-kernel"

AXIS_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GridStats(object):
    """Summary of the unmasked cells of a grid.

    Args:
        max (float): Largest value
        min (float): Smallest value
        mean (float): Mean value
    """

    max: float
    min: float
    mean: float


def cell_centres(window: float, step: float) -> np.ndarray:
    """Axis of cell centres (k + 1/2) step for k = 0 .. round(window / step) - 1.

    Args:
        window (float): Axis extent
        step (float): Cell width

    Returns:
        np.ndarray: The axis
    """
    if not (window > 0 and 0 < step <= window):
        raise GridMismatch(f"need 0 < step <= window, got step={step}, window={window}")
    n = max(int(round(window / step)), 1)
    return (np.arange(n) + 0.5) * step


def singular_mask(v1_axis: np.ndarray, v2_axis: np.ndarray, band: float) -> np.ndarray:
    """Cells within `band` of one of the lines v1 = 0, v2 = 0, v1 = v2.

    Args:
        v1_axis (np.ndarray): First axis
        v2_axis (np.ndarray): Second axis
        band (float): Half-width of the excluded band

    Returns:
        np.ndarray: Boolean mask of shape (len(v1_axis), len(v2_axis))
    """
    v1, v2 = np.meshgrid(v1_axis, v2_axis, indexing="ij")
    return (np.abs(v1) < band) | (np.abs(v2) < band) | (np.abs(v1 - v2) < band)


def _check_axis(axis: np.ndarray, name: str) -> float:
    if axis.ndim != 1 or len(axis) == 0:
        raise GridMismatch(f"{name} must be a non-empty 1-D array")
    if len(axis) == 1:
        return float("nan")
    steps = np.diff(axis)
    if np.any(steps <= 0):
        raise GridMismatch(f"{name} must be strictly increasing")
    if not np.allclose(steps, steps[0], rtol=1e-6, atol=AXIS_TOLERANCE):
        raise GridMismatch(f"{name} must be uniform")
    return float(steps[0])


def _stats(values: np.ndarray, mask: np.ndarray) -> GridStats:
    kept = values[~mask]
    if kept.size == 0:
        return GridStats(float("nan"), float("nan"), float("nan"))
    return GridStats(float(kept.max()), float(kept.min()), float(kept.mean()))


@dataclass
class CorrelationGrid(object):
    """A two-dimensional correlation density sampled on a uniform grid.

    Values on masked cells are set to zero and never evaluated.

    Args:
        v1_axis (np.ndarray): First axis, ascending and uniform
        v2_axis (np.ndarray): Second axis, ascending and uniform
        values (np.ndarray): Values of shape (len(v1_axis), len(v2_axis))
        mask (np.ndarray): True where a cell is excluded
        normalization (str): How values were normalized
        T (Optional[float]): Height the density refers to, if any
        kind (str): What produced the grid
        mask_band (float): Half-width of the excluded bands
        prime_limit (Optional[int]): Sieve bound used for prime products, if any
    """

    v1_axis: np.ndarray
    v2_axis: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    normalization: str
    T: Optional[float] = None
    kind: str = "theory"
    mask_band: float = 0.0
    prime_limit: Optional[int] = None

    def __post_init__(self):
        self.v1_axis = np.asarray(self.v1_axis, dtype=float)
        self.v2_axis = np.asarray(self.v2_axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        _check_axis(self.v1_axis, "v1_axis")
        _check_axis(self.v2_axis, "v2_axis")
        shape = (len(self.v1_axis), len(self.v2_axis))
        if self.values.shape != shape or self.mask.shape != shape:
            raise GridMismatch(
                f"values {self.values.shape} and mask {self.mask.shape} must have shape {shape}"
            )
        if not np.all(np.isfinite(self.values[~self.mask])):
            raise GridMismatch("grid values must be finite on unmasked cells")

    @property
    def step(self) -> float:
        """Spacing of the first axis."""
        return _check_axis(self.v1_axis, "v1_axis")

    def stats(self) -> GridStats:
        """Max, min and mean over the unmasked cells.

        Returns:
            GridStats: The statistics
        """
        return _stats(self.values, self.mask)

    def header(self) -> Dict[str, str]:
        """Metadata written in front of the CSV rows.

        Returns:
            Dict[str, str]: Keys mapped to values
        """
        return {
            "kind": self.kind,
            "T": _format_optional(self.T),
            "step": _format(self.step),
            "mask_band": _format(self.mask_band),
            "normalization": self.normalization,
            "prime_limit": "none" if self.prime_limit is None else str(self.prime_limit),
        }

    def rows(self) -> Iterable[Tuple[float, float, float, int]]:
        """Yield one (v1, v2, value, mask) row per cell, v1 major.

        Yields:
            Tuple[float, float, float, int]: The row
        """
        for i, v1 in enumerate(self.v1_axis):
            for j, v2 in enumerate(self.v2_axis):
                yield v1, v2, self.values[i, j], int(self.mask[i, j])


@dataclass
class CorrelationProfile(object):
    """A one-dimensional cross-section of a correlation density at fixed v2.

    Args:
        axis (np.ndarray): Values of v1
        values (np.ndarray): Density along the axis
        mask (np.ndarray): True where a point is excluded
        v2 (float): The fixed second coordinate
        normalization (str): How values were normalized
        T (float): Height
        mask_band (float): Half-width of the excluded bands
        prime_limit (Optional[int]): Sieve bound used for prime products
    """

    axis: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    v2: float
    normalization: str
    T: float
    mask_band: float = 0.0
    prime_limit: Optional[int] = None

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        _check_axis(self.axis, "axis")
        if self.values.shape != self.axis.shape or self.mask.shape != self.axis.shape:
            raise GridMismatch("profile values and mask must match the axis")

    def stats(self) -> GridStats:
        """Max, min and mean over the unmasked points.

        Returns:
            GridStats: The statistics
        """
        return _stats(self.values, self.mask)

    def header(self) -> Dict[str, str]:
        """Metadata written in front of the CSV rows.

        Returns:
            Dict[str, str]: Keys mapped to values
        """
        return {
            "kind": "profile",
            "v2": _format(self.v2),
            "T": _format(self.T),
            "step": _format(_check_axis(self.axis, "axis")),
            "mask_band": _format(self.mask_band),
            "normalization": self.normalization,
            "prime_limit": "none" if self.prime_limit is None else str(self.prime_limit),
        }


def _format(x: float) -> str:
    return f"{x:.12g}"


def _format_optional(x: Optional[float]) -> str:
    return "none" if x is None else _format(x)


def write_table(
    fp: TextIO,
    header: Dict[str, str],
    columns: Sequence[str],
    rows: Iterable[Sequence[float]],
    stats: Optional[GridStats] = None,
):
    """Write a commented header, CSV rows and an optional stats trailer.

    Args:
        fp (TextIO): Open text stream
        header (Dict[str, str]): Metadata lines
        columns (Sequence[str]): Column names, written as a '# columns=' line
        rows (Iterable[Sequence[float]]): Data rows
        stats (Optional[GridStats], optional): Trailer statistics. Defaults to None.
    """
    for key, value in header.items():
        fp.write(f"# {key}={value}\n")
    fp.write(f"# columns={','.join(columns)}\n")
    writer = csv.writer(fp, lineterminator="\n")
    for row in rows:
        writer.writerow(
            [str(v) if isinstance(v, (int, np.integer)) else _format(v) for v in row]
        )
    if stats is not None:
        fp.write(
            f"# stats max={_format(stats.max)} min={_format(stats.min)} mean={_format(stats.mean)}\n"
        )


def write_grid(grid: CorrelationGrid, fp: TextIO):
    """Serialize a grid as CSV rows v1,v2,value,mask.

    Args:
        grid (CorrelationGrid): The grid
        fp (TextIO): Open text stream
    """
    write_table(fp, grid.header(), ["v1", "v2", "value", "mask"], grid.rows(), grid.stats())


def write_profile(profile: CorrelationProfile, fp: TextIO):
    """Serialize a profile as CSV rows v1,value,mask.

    Args:
        profile (CorrelationProfile): The profile
        fp (TextIO): Open text stream
    """
    rows = (
        (v, value, int(m)) for v, value, m in zip(profile.axis, profile.values, profile.mask)
    )
    write_table(fp, profile.header(), ["v1", "value", "mask"], rows, profile.stats())


def _parse_optional(raw: str, kind: type):
    return None if raw in ("none", "") else kind(raw)


def read_grid(path: Path) -> CorrelationGrid:
    """Read a grid written by `write_grid`.

    Args:
        path (Path): CSV file

    Returns:
        CorrelationGrid: The grid
    """
    header = {}
    cells: List[Tuple[float, float, float, bool]] = []
    with open(path, encoding="utf-8") as fp:
        for line_number, line in enumerate(fp, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if not body.startswith("stats") and "=" in body:
                    key, value = body.split("=", 1)
                    header[key.strip()] = value.strip()
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError(
                    f"expected 4 columns, got {len(parts)}", path, line_number
                )
            try:
                v1, v2, value = float(parts[0]), float(parts[1]), float(parts[2])
                masked = int(parts[3]) != 0
            except ValueError as e:
                raise ParseError(f"malformed row '{line}'", path, line_number) from e
            cells.append((v1, v2, value, masked))

    if not cells:
        raise ParseError("grid file contains no rows", path)
    data = np.array([c[:3] for c in cells])
    masks = np.array([c[3] for c in cells])
    v1_axis, i = np.unique(data[:, 0], return_inverse=True)
    v2_axis, j = np.unique(data[:, 1], return_inverse=True)
    if len(cells) != len(v1_axis) * len(v2_axis):
        raise ParseError(
            f"{len(cells)} rows do not fill a {len(v1_axis)}x{len(v2_axis)} grid", path
        )
    values = np.zeros((len(v1_axis), len(v2_axis)))
    mask = np.zeros_like(values, dtype=bool)
    values[i, j] = data[:, 2]
    mask[i, j] = masks
    try:
        return CorrelationGrid(
            v1_axis,
            v2_axis,
            values,
            mask,
            normalization=header.get("normalization", NORMALIZATION_RAW),
            T=_parse_optional(header.get("T", "none"), float),
            kind=header.get("kind", "unknown"),
            mask_band=float(header.get("mask_band", "0")),
            prime_limit=_parse_optional(header.get("prime_limit", "none"), int),
        )
    except (GridMismatch, ValueError) as e:
        raise ParseError(str(e), path) from e
