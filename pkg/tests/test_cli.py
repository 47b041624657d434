import numpy as np
import pytest

from triple_correlation.grid import read_grid
from triple_correlation.scripts import convert_zeros
from triple_correlation.scripts.triple import (
    EXIT_CHECK,
    EXIT_CONFIG,
    EXIT_INPUT,
    EXIT_OK,
    run,
)
from triple_correlation.util import JOBS_ENV_VAR
from triple_correlation.zeros import load_zeros

SMALL = ["--prime-limit", "1000", "--T", "1e4"]


@pytest.fixture(autouse=True)
def _serial(monkeypatch):
    monkeypatch.delenv(JOBS_ENV_VAR, raising=False)


def test_sine_kernel_to_stdout(capsys):
    assert run(["sine-kernel", "--window", "2", "--step", "0.5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("# kind=sine-kernel\n")
    assert "# normalization=sine-kernel\n" in out
    assert out.rstrip().splitlines()[-1].startswith("# stats max=")
    assert len([line for line in out.splitlines() if not line.startswith("#")]) == 16


def test_theory_to_file(tmp_path):
    out = tmp_path / "theory.csv"
    argv = ["--no-progress", "theory", "--window", "1", "--step", "0.5", "--mask-band", "0.1"]
    assert run(argv + SMALL + ["--out", str(out)]) == EXIT_OK
    grid = read_grid(out)
    assert grid.values.shape == (2, 2)
    assert grid.prime_limit == 1000
    assert grid.T == 1e4
    assert grid.mask[0, 0] and not grid.mask[0, 1]


def test_theory_output_is_reproducible(capsys):
    argv = ["--no-progress", "profile", "--window", "2", "--step", "0.5", "--v2", "1.25"] + SMALL
    assert run(argv) == EXIT_OK
    first = capsys.readouterr().out
    assert run(argv) == EXIT_OK
    assert capsys.readouterr().out == first
    assert "# kind=profile\n" in first


def test_config_error(capsys):
    assert run(["theory", "--step", "-1"]) == EXIT_CONFIG
    assert capsys.readouterr().err.startswith("error: ")


def test_zero_mask_band_is_rejected():
    assert run(["theory", "--mask-band", "0"]) == EXIT_CONFIG


def test_missing_zero_file(tmp_path, capsys):
    assert run(["empirical", str(tmp_path / "absent.txt")]) == EXIT_INPUT
    assert "absent.txt" in capsys.readouterr().err


def test_malformed_zero_file(tmp_path, capsys):
    path = tmp_path / "zeros.txt"
    path.write_text("14.1\nnope\n", encoding="utf-8")
    assert run(["empirical", str(path)]) == EXIT_INPUT
    assert f"{path}:2:" in capsys.readouterr().err


def test_empirical_grid(zero_file, tmp_path):
    out = tmp_path / "empirical.csv"
    argv = ["--no-progress", "empirical", str(zero_file), "--window", "10", "--step", "1"]
    assert run(argv + ["--bin", "1", "--mask-band", "0.5", "--out", str(out)]) == EXIT_OK
    grid = read_grid(out)
    assert grid.kind == "empirical"
    assert grid.values.shape == (10, 10)


def test_two_point_with_theory(zero_file, capsys):
    argv = ["--no-progress", "two-point", str(zero_file), "--window", "4", "--bin", "1"]
    assert run(argv + ["--prime-limit", "1000", "--theory"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert "# columns=r,count,value,theory" in lines
    rows = [line.split(",") for line in lines if not line.startswith("#")]
    assert len(rows) == 4 and all(len(row) == 4 for row in rows)


def test_diff(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(["sine-kernel", "--window", "2", "--step", "0.5", "--out", str(path)]) == EXIT_OK
    assert run(["diff", str(a), str(b)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("mean=0 std=0 mean_abs=0 max_abs=0")


def test_diff_of_incompatible_grids(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["sine-kernel", "--window", "2", "--step", "0.5", "--out", str(a)]) == EXIT_OK
    assert run(["sine-kernel", "--window", "3", "--step", "0.5", "--out", str(b)]) == EXIT_OK
    assert run(["diff", str(a), str(b)]) == EXIT_INPUT


def test_rmt_verify(capsys):
    assert run(["rmt-verify", "--N", "5", "--samples", "20"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("PASS rmt identity N=5")


def test_rmt_verify_failure(capsys):
    assert run(["rmt-verify", "--N", "3", "--samples", "5", "--tolerance", "-1"]) == EXIT_CHECK
    assert capsys.readouterr().out.startswith("FAIL")


def test_limit_arguments():
    assert run(["limit", "1.3", "2.7", "abc"] + SMALL) == EXIT_CONFIG
    assert run(["limit", "1.3", "2.7", "100,1e4"] + SMALL) == EXIT_CONFIG


def test_unknown_command():
    with pytest.raises(SystemExit):
        run(["nonsense"])


def test_convert_zeros(zero_file, tmp_path, monkeypatch):
    dest = tmp_path / "zeros.h5"
    monkeypatch.setattr(
        "sys.argv", ["triple-correlation-convert", str(zero_file), str(dest), "--limit", "5"]
    )
    convert_zeros.main()
    ds = load_zeros(dest)
    assert ds.count == 5
    np.testing.assert_allclose(ds.ordinates, load_zeros(zero_file).ordinates[:5])


@pytest.mark.parametrize("samples", ["0", "-3"])
def test_rmt_verify_needs_samples(samples, capsys):
    assert run(["rmt-verify", "--N", "3", "--samples", samples]) == EXIT_CONFIG
    assert "sample" in capsys.readouterr().err
