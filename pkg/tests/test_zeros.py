import logging
import math

import h5py
import numpy as np
import pytest

from conftest import FIRST_ZEROS
from triple_correlation.errors import DomainError, EmptyFile, GridMismatch, ParseError
from triple_correlation.grid import NORMALIZATION_TL3, CorrelationGrid, cell_centres
from triple_correlation.oracles import brute_force_pair_counts, brute_force_triple_counts
from triple_correlation.zeros import (
    ZeroDataset,
    bin_index,
    diff_stats,
    empirical_triple,
    empirical_two_point,
    load_zeros,
)


def _synthetic(count: int, seed: int = 3) -> ZeroDataset:
    rng = np.random.default_rng(seed)
    return ZeroDataset(100.0 + np.cumsum(rng.uniform(0.1, 1.0, count)))


def test_load_text(zero_file):
    ds = load_zeros(zero_file)
    assert ds.count == len(ds) == 20
    assert ds.T == pytest.approx(FIRST_ZEROS[-1])
    np.testing.assert_allclose(ds.ordinates, FIRST_ZEROS)


def test_ordinates_are_read_only(zero_file):
    ds = load_zeros(zero_file)
    with pytest.raises(ValueError):
        ds.ordinates[0] = 1.0


def test_unsorted_input_is_sorted(tmp_path, caplog):
    path = tmp_path / "zeros.txt"
    path.write_text("21.022039639\n14.134725142\n25.010857580\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING, logger="triple_correlation.zeros"):
        ds = load_zeros(path)
    assert ds.ordinates.tolist() == sorted(ds.ordinates.tolist())
    assert "not sorted" in caplog.text


def test_duplicate_reports_its_line(tmp_path):
    path = tmp_path / "zeros.txt"
    path.write_text("# header\n14.1\n21.0\n14.1\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_zeros(path)
    assert info.value.line_number in (2, 4)
    assert "duplicate" in str(info.value)


@pytest.mark.parametrize("line", ["abc", "-3.5", "0", "inf"])
def test_bad_values_report_their_line(tmp_path, line):
    path = tmp_path / "zeros.txt"
    path.write_text(f"14.1\n{line}\n21.0\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_zeros(path)
    assert info.value.line_number == 2
    assert info.value.path == path


def test_empty_file(tmp_path):
    path = tmp_path / "zeros.txt"
    path.write_text("# nothing here\n\n", encoding="utf-8")
    with pytest.raises(EmptyFile):
        load_zeros(path)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_zeros(tmp_path / "absent.txt")


def test_hdf5_cache(tmp_path, zero_file):
    ds = load_zeros(zero_file)
    dest = tmp_path / "zeros.h5"
    ds.save(dest)
    with h5py.File(dest, "r") as fp:
        assert fp.attrs["count"] == 20
        assert fp.attrs["T"] == pytest.approx(ds.T)
    np.testing.assert_array_equal(load_zeros(dest).ordinates, ds.ordinates)


def test_hdf5_without_ordinates(tmp_path):
    dest = tmp_path / "other.h5"
    with h5py.File(dest, "w") as fp:
        fp.create_dataset("values", data=np.arange(3.0))
    with pytest.raises(ParseError):
        load_zeros(dest)


def test_dataset_validation():
    with pytest.raises(DomainError):
        ZeroDataset([])
    with pytest.raises(DomainError):
        ZeroDataset([2.0, 1.0])
    with pytest.raises(DomainError):
        ZeroDataset([-1.0, 1.0])
    assert ZeroDataset([1.0, 2.0, 3.0]).prefix(2).T == 2.0


def test_bin_index():
    assert bin_index(np.array([0.2, 0.2000001, 0.39, 5.0]), 0.2, 25).tolist() == [0, 1, 1, 24]


def test_pair_counts_match_brute_force():
    ds = _synthetic(1000)
    hist = empirical_two_point(ds, 5.0, 0.2, progress=False)
    np.testing.assert_array_equal(hist.counts, brute_force_pair_counts(ds.ordinates, 5.0, 0.2))
    assert len(hist.edges) == 26
    np.testing.assert_allclose(hist.centres[:2], [0.1, 0.3])


def test_pair_normalization():
    ds = _synthetic(200)
    hist = empirical_two_point(ds, 2.0, 0.5, progress=False)
    L = math.log(ds.T / (2 * math.pi))
    np.testing.assert_allclose(hist.values, hist.counts / (0.5 * ds.T * (L / (2 * math.pi)) ** 2))
    assert hist.normalization == NORMALIZATION_TL3


def test_triple_counts_match_brute_force():
    ds = _synthetic(300, seed=5)
    hist = empirical_triple(ds, 3.0, 0.25, progress=False)
    expected = brute_force_triple_counts(ds.ordinates, 3.0, 0.25)
    np.testing.assert_array_equal(hist.counts, expected)
    assert hist.counts.sum() > 0


def test_triple_histogram_as_grid():
    ds = _synthetic(300, seed=5)
    grid = empirical_triple(ds, 3.0, 0.25, progress=False).to_grid(mask_band=0.2)
    assert grid.kind == "empirical"
    np.testing.assert_allclose(grid.v1_axis, cell_centres(3.0, 0.25))
    assert np.diag(grid.mask).all()
    assert (grid.values[grid.mask] == 0).all()


@pytest.mark.parametrize("window, bin", [(2.0, 2.0), (2.0, 0.0), (500.0, 1.0)])
def test_histogram_arguments(window, bin):
    with pytest.raises(DomainError):
        empirical_two_point(_synthetic(100), window, bin, progress=False)


def _flat_grid(value: float, normalization: str = NORMALIZATION_TL3) -> CorrelationGrid:
    axis = cell_centres(2.0, 0.5)
    mask = np.eye(4, dtype=bool)
    values = np.where(mask, 0.0, value)
    return CorrelationGrid(axis, axis.copy(), values, mask, normalization)


def test_diff_stats():
    stats = diff_stats(_flat_grid(1.25), _flat_grid(1.0))
    assert stats.mean == pytest.approx(0.25)
    assert stats.std == pytest.approx(0.0, abs=1e-15)
    assert stats.mean_abs == pytest.approx(0.25)
    assert stats.max_abs == pytest.approx(0.25)


def test_diff_stats_mismatches():
    with pytest.raises(GridMismatch):
        diff_stats(_flat_grid(1.0), _flat_grid(1.0, "raw"))
    other = _flat_grid(1.0)
    other.mask = np.zeros((4, 4), dtype=bool)
    with pytest.raises(GridMismatch):
        diff_stats(_flat_grid(1.0), other)
    axis = cell_centres(1.5, 0.5)
    small = CorrelationGrid(axis, axis, np.ones((3, 3)), np.zeros((3, 3), dtype=bool), NORMALIZATION_TL3)
    with pytest.raises(GridMismatch):
        diff_stats(_flat_grid(1.0), small)
    full = _flat_grid(1.0)
    full.mask = np.ones((4, 4), dtype=bool)
    with pytest.raises(GridMismatch):
        diff_stats(full, full)
