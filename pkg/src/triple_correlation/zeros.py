import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import h5py
import numpy as np
from tqdm import tqdm

from triple_correlation.errors import DomainError, EmptyFile, GridMismatch, ParseError
from triple_correlation.grid import (
    NORMALIZATION_TL3,
    CorrelationGrid,
    singular_mask,
)

logger = logging.getLogger(__name__)

HDF5_SUFFIXES = (".h5", ".hdf5")


class ZeroDataset(object):
    """Ascending positive ordinates of zeros; T is the largest one.

    Args:
        ordinates (Iterable[float]): Strictly increasing positive values
    """

    def __init__(self, ordinates: Iterable[float]):
        self.ordinates = np.asarray(ordinates, dtype=float)
        if self.ordinates.ndim != 1 or len(self.ordinates) == 0:
            raise DomainError("a zero dataset needs at least one ordinate")
        if not np.all(np.isfinite(self.ordinates)) or self.ordinates[0] <= 0:
            raise DomainError("ordinates must be finite and positive")
        if np.any(np.diff(self.ordinates) <= 0):
            raise DomainError("ordinates must be strictly increasing")
        self.ordinates.setflags(write=False)

    @property
    def T(self) -> float:
        """Height of the largest zero."""
        return float(self.ordinates[-1])

    @property
    def count(self) -> int:
        """Number of zeros."""
        return len(self.ordinates)

    def __len__(self) -> int:
        return self.count

    def prefix(self, count: int) -> "ZeroDataset":
        """The first `count` zeros.

        Args:
            count (int): How many

        Returns:
            ZeroDataset: The shorter dataset
        """
        return ZeroDataset(self.ordinates[:count])

    def save(self, dest: Path):
        """Save the ordinates in HDF5 format.

        Args:
            dest (Path): File to create
        """
        with h5py.File(dest, "w") as fp:
            ds = fp.create_dataset("ordinates", (self.count,), dtype="float64")
            ds[:] = self.ordinates
            fp.attrs["T"] = self.T
            fp.attrs["count"] = self.count
        logger.info("saved %d ordinates to %s", self.count, dest)


def _read_text(path: Path):
    values, line_numbers = [], []
    with open(path, encoding="utf-8") as fp:
        for line_number, line in enumerate(fp, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                value = float(line)
            except ValueError as e:
                raise ParseError(f"not a number: '{line}'", path, line_number) from e
            if not math.isfinite(value) or value <= 0:
                raise ParseError(
                    f"ordinates must be finite and positive, got {line}", path, line_number
                )
            values.append(value)
            line_numbers.append(line_number)
    return np.array(values, dtype=float), np.array(line_numbers, dtype=int)


def _read_hdf5(path: Path):
    try:
        with h5py.File(path, "r") as fp:
            values = np.asarray(fp["ordinates"][:], dtype=float)
    except KeyError as e:
        raise ParseError("HDF5 file has no 'ordinates' dataset", path) from e
    bad = np.flatnonzero(~np.isfinite(values) | (values <= 0))
    if len(bad) > 0:
        raise ParseError(f"entry {bad[0]} is not a finite positive ordinate", path)
    return values, None


def load_zeros(path: Union[str, Path]) -> ZeroDataset:
    """Read zero ordinates from a text table (one value per line, '#' comments) or an HDF5 cache.

    Unsorted input is sorted with a warning; duplicates are rejected.

    Args:
        path (Union[str, Path]): Input file

    Returns:
        ZeroDataset: The ordinates
    """
    path = Path(path)
    if path.suffix.lower() in HDF5_SUFFIXES:
        values, line_numbers = _read_hdf5(path)
    else:
        values, line_numbers = _read_text(path)
    if len(values) == 0:
        raise EmptyFile("no ordinates found", path)

    order = np.argsort(values, kind="stable")
    if np.any(order != np.arange(len(values))):
        logger.warning("ordinates in %s are not sorted; sorting them", path)
        values = values[order]
        if line_numbers is not None:
            line_numbers = line_numbers[order]
    duplicates = np.flatnonzero(np.diff(values) == 0)
    if len(duplicates) > 0:
        k = duplicates[0] + 1
        line = None if line_numbers is None else int(line_numbers[k])
        raise ParseError(f"duplicate ordinate {values[k]!r}", path, line)

    ds = ZeroDataset(values)
    logger.info("loaded %d zeros up to T=%.3f from %s", ds.count, ds.T, path)
    return ds


def bin_index(d: np.ndarray, bin: float, n: int) -> np.ndarray:
    """Index k of the bin (k bin, (k+1) bin] holding each separation in (0, n bin].

    Args:
        d (np.ndarray): Positive separations
        bin (float): Bin width
        n (int): Number of bins

    Returns:
        np.ndarray: Bin indices in 0 .. n-1
    """
    return np.clip(np.ceil(np.asarray(d) / bin).astype(np.int64) - 1, 0, n - 1)


def _bins(window: float, bin: float, T: float) -> int:
    if not 0 < bin < window:
        raise DomainError(f"need 0 < bin < window, got bin={bin}, window={window}")
    if window > T:
        raise DomainError(f"window {window} exceeds the height T={T}")
    return int(round(window / bin))


def _max_offset(g: np.ndarray, window: float) -> int:
    """Largest k with some g[i + k] - g[i] <= window."""
    k = 0
    while k + 1 < len(g) and np.min(g[k + 1 :] - g[: -(k + 1)]) <= window:
        k += 1
    return k


@dataclass
class Histogram1D(object):
    """Binned separations of ordered pairs of zeros.

    Args:
        edges (np.ndarray): Bin edges, length n + 1
        counts (np.ndarray): Integer counts per bin
        values (np.ndarray): counts / (bin * norm)
        normalization (str): Normalization descriptor
        T (float): Height
    """

    edges: np.ndarray
    counts: np.ndarray
    values: np.ndarray
    normalization: str
    T: float

    @property
    def centres(self) -> np.ndarray:
        """Bin centres."""
        return 0.5 * (self.edges[:-1] + self.edges[1:])


@dataclass
class Histogram2D(object):
    """Binned separations (g1 - g2, g1 - g3) of ordered triples of distinct zeros.

    Args:
        edges (np.ndarray): Bin edges shared by both axes, length n + 1
        counts (np.ndarray): Integer counts, shape (n, n)
        values (np.ndarray): counts / (bin^2 * norm)
        normalization (str): Normalization descriptor
        T (float): Height
    """

    edges: np.ndarray
    counts: np.ndarray
    values: np.ndarray
    normalization: str
    T: float

    @property
    def centres(self) -> np.ndarray:
        """Bin centres."""
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def to_grid(self, mask_band: float = 0.0) -> CorrelationGrid:
        """The histogram as a grid on the cell-centre axes of the theory grids.

        Args:
            mask_band (float, optional): Band to exclude around the singular lines. Defaults to 0.0.

        Returns:
            CorrelationGrid: The grid
        """
        axis = self.centres
        mask = singular_mask(axis, axis, mask_band)
        values = np.where(mask, 0.0, self.values)
        return CorrelationGrid(
            axis,
            axis.copy(),
            values,
            mask,
            self.normalization,
            T=self.T,
            kind="empirical",
            mask_band=mask_band,
        )


def empirical_two_point(
    ds: ZeroDataset, window: float, bin: float, progress: bool = True
) -> Histogram1D:
    """Histogram of g1 - g2 in (0, window] over ordered pairs of zeros.

    Normalized by bin * T (L/2pi)^2 with L = log(T/2pi), so values tend to one for large
    separations.

    Args:
        ds (ZeroDataset): The zeros
        window (float): Largest separation
        bin (float): Bin width
        progress (bool, optional): Show a progress bar. Defaults to True.

    Returns:
        Histogram1D: The histogram
    """
    n = _bins(window, bin, ds.T)
    g = ds.ordinates
    counts = np.zeros(n, dtype=np.int64)
    for k in tqdm(range(1, _max_offset(g, window) + 1), desc="Counting pairs", disable=not progress):
        d = g[k:] - g[:-k]
        d = d[d <= n * bin]
        counts += np.bincount(bin_index(d, bin, n), minlength=n)[:n]
    L = math.log(ds.T / (2 * math.pi))
    norm = ds.T * (L / (2 * math.pi)) ** 2
    logger.info("binned %d pairs", int(counts.sum()))
    return Histogram1D(
        np.arange(n + 1) * bin, counts, counts / (bin * norm), NORMALIZATION_TL3, ds.T
    )


def empirical_triple(
    ds: ZeroDataset, window: float, bin: float, progress: bool = True
) -> Histogram2D:
    """Histogram of (g1 - g2, g1 - g3) in (0, window]^2 over ordered triples of distinct zeros.

    Normalized by bin^2 * T (L/2pi)^3.

    Args:
        ds (ZeroDataset): The zeros
        window (float): Largest separation
        bin (float): Bin width
        progress (bool, optional): Show a progress bar. Defaults to True.

    Returns:
        Histogram2D: The histogram
    """
    n = _bins(window, bin, ds.T)
    g = ds.ordinates
    limit = n * bin
    K = _max_offset(g, window)
    counts = np.zeros(n * n, dtype=np.int64)
    for a in tqdm(range(1, K + 1), desc="Counting triples", disable=not progress):
        for b in range(1, K + 1):
            if a == b:
                continue
            m = max(a, b)
            # g[i] - g[i - a] and g[i] - g[i - b] for i >= m
            d1 = g[m:] - g[m - a : len(g) - a]
            d2 = g[m:] - g[m - b : len(g) - b]
            keep = (d1 <= limit) & (d2 <= limit)
            if not np.any(keep):
                continue
            flat = bin_index(d1[keep], bin, n) * n + bin_index(d2[keep], bin, n)
            counts += np.bincount(flat, minlength=n * n)
    counts = counts.reshape(n, n)
    L = math.log(ds.T / (2 * math.pi))
    norm = ds.T * (L / (2 * math.pi)) ** 3
    logger.info("binned %d triples", int(counts.sum()))
    return Histogram2D(
        np.arange(n + 1) * bin, counts, counts / (bin * bin * norm), NORMALIZATION_TL3, ds.T
    )


@dataclass(frozen=True)
class DiffStats(object):
    """Statistics of empirical - theory over the unmasked cells.

    Args:
        mean (float): Mean difference
        std (float): Standard deviation
        mean_abs (float): Mean absolute difference
        max_abs (float): Largest absolute difference
    """

    mean: float
    std: float
    mean_abs: float
    max_abs: float


def diff_stats(empirical: CorrelationGrid, theory: CorrelationGrid) -> DiffStats:
    """Compare two grids cell by cell.

    Args:
        empirical (CorrelationGrid): First grid
        theory (CorrelationGrid): Second grid

    Returns:
        DiffStats: Statistics of empirical - theory
    """
    if empirical.values.shape != theory.values.shape:
        raise GridMismatch(
            f"grid shapes differ: {empirical.values.shape} vs {theory.values.shape}"
        )
    for name in ("v1_axis", "v2_axis"):
        if not np.allclose(getattr(empirical, name), getattr(theory, name), rtol=0, atol=1e-9):
            raise GridMismatch(f"{name} differs between the grids")
    if not np.array_equal(empirical.mask, theory.mask):
        raise GridMismatch("masks differ between the grids")
    if empirical.normalization != theory.normalization:
        raise GridMismatch(
            f"normalizations differ: {empirical.normalization} vs {theory.normalization}"
        )
    d = (empirical.values - theory.values)[~empirical.mask]
    if d.size == 0:
        raise GridMismatch("every cell is masked")
    return DiffStats(
        float(d.mean()), float(d.std()), float(np.abs(d).mean()), float(np.abs(d).max())
    )
