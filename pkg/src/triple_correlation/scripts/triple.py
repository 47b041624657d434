#! /usr/bin/env python3


import argparse
import contextlib
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

from triple_correlation.config import EngineConfig
from triple_correlation.density import (
    is_broadly_decreasing,
    limit_check,
    sine_kernel_grid,
    theory_grid,
    theory_profile,
)
from triple_correlation.errors import (
    ConfigError,
    DomainError,
    GridMismatch,
    ParseError,
    TripleCorrelationError,
)
from triple_correlation.grid import (
    NORMALIZATION_LOG3,
    GridStats,
    read_grid,
    write_grid,
    write_profile,
    write_table,
)
from triple_correlation.oracles import check_rmt_identity, run_selftest
from triple_correlation.ratios import two_point_bracket
from triple_correlation.zeros import diff_stats, empirical_triple, empirical_two_point, load_zeros

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_CHECK = 4


class InputError(Exception):
    """An input file could not be read."""


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fp:
            yield fp


def _load(path: str):
    try:
        return load_zeros(Path(path))
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from e


def cmd_theory(args: argparse.Namespace, config: EngineConfig) -> int:
    deps = config.deps()
    grid = theory_grid(
        config.window,
        config.step,
        config.T,
        config.mask_band,
        deps,
        n_jobs=config.jobs,
        progress=args.progress,
    )
    with _output(args.out) as fp:
        write_grid(grid, fp)
    return EXIT_OK


def cmd_profile(args: argparse.Namespace, config: EngineConfig) -> int:
    deps = config.deps()
    profile = theory_profile(
        args.v2,
        config.window,
        config.step,
        config.T,
        config.mask_band,
        deps,
        n_jobs=config.jobs,
        progress=args.progress,
    )
    with _output(args.out) as fp:
        write_profile(profile, fp)
    return EXIT_OK


def cmd_sine_kernel(args: argparse.Namespace, config: EngineConfig) -> int:
    with _output(args.out) as fp:
        write_grid(sine_kernel_grid(config.window, config.step), fp)
    return EXIT_OK


def cmd_empirical(args: argparse.Namespace, config: EngineConfig) -> int:
    ds = _load(args.ZEROS)
    hist = empirical_triple(ds, config.window, config.bin, progress=args.progress)
    with _output(args.out) as fp:
        write_grid(hist.to_grid(config.mask_band), fp)
    return EXIT_OK


def cmd_two_point(args: argparse.Namespace, config: EngineConfig) -> int:
    ds = _load(args.ZEROS)
    hist = empirical_two_point(ds, config.window, config.bin, progress=args.progress)
    columns = ["r", "count", "value"]
    rows = [[r, int(c), v] for r, c, v in zip(hist.centres, hist.counts, hist.values)]
    if args.theory:
        deps = config.deps()
        norm = ds.T * math.log(ds.T / (2 * math.pi)) ** 2
        columns.append("theory")
        for row in rows:
            row.append(two_point_bracket(row[0], ds.T, deps.table, deps.params) / norm)
    header = {
        "kind": "two-point",
        "T": f"{ds.T:.12g}",
        "bin": f"{config.bin:.12g}",
        "window": f"{config.window:.12g}",
        "normalization": hist.normalization,
        "zeros": str(ds.count),
    }
    values = hist.values
    stats = GridStats(float(values.max()), float(values.min()), float(values.mean()))
    with _output(args.out) as fp:
        write_table(fp, header, columns, rows, stats)
    return EXIT_OK


def cmd_diff(args: argparse.Namespace, config: Optional[EngineConfig]) -> int:
    try:
        a, b = read_grid(Path(args.A)), read_grid(Path(args.B))
    except OSError as e:
        raise InputError(f"cannot read grid: {e}") from e
    stats = diff_stats(a, b)
    print(
        f"mean={stats.mean:.6g} std={stats.std:.6g} "
        f"mean_abs={stats.mean_abs:.6g} max_abs={stats.max_abs:.6g}"
    )
    return EXIT_OK


def cmd_rmt_verify(args: argparse.Namespace, config: Optional[EngineConfig]) -> int:
    result = check_rmt_identity(args.N, args.samples, args.seed, args.tolerance)
    print(f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
    return EXIT_OK if result.passed else EXIT_CHECK


def _parse_heights(raw: str) -> List[float]:
    try:
        return [float(x) for x in raw.split(",") if x.strip()]
    except ValueError as e:
        raise ConfigError(f"T_LIST must be comma separated numbers, got '{raw}'") from e


def cmd_limit(args: argparse.Namespace, config: EngineConfig) -> int:
    heights = _parse_heights(args.T_LIST)
    rows = limit_check(args.V1, args.V2, heights, config.deps())
    header = {
        "kind": "limit",
        "v1": f"{args.V1:.12g}",
        "v2": f"{args.V2:.12g}",
        "normalization": NORMALIZATION_LOG3,
        "prime_limit": str(config.prime_limit),
    }
    with _output(args.out) as fp:
        write_table(
            fp,
            header,
            ["T", "scaled", "limit", "abs_error"],
            ((r.T, r.scaled_value, r.limit_value, r.abs_error) for r in rows),
        )
    if not is_broadly_decreasing([r.abs_error for r in rows]):
        print("FAIL errors do not decrease with T", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace, config: EngineConfig) -> int:
    results = run_selftest(config.deps(), progress=args.progress)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def _add_out(sp: argparse.ArgumentParser):
    sp.add_argument("--out", default=None, help="Output file (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    """The argument parser with one subparser per command.

    Returns:
        argparse.ArgumentParser: The parser
    """
    ap = argparse.ArgumentParser(formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ap.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs"
    )
    ap.add_argument(
        "--no-progress", dest="progress", action="store_false", help="Hide progress bars"
    )
    subparsers = ap.add_subparsers(help="Choose a command", dest="command")
    subparsers.required = True

    def add(name: str, func, help: str, with_config: bool = True) -> argparse.ArgumentParser:
        sp = subparsers.add_parser(
            name, help=help, formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )
        if with_config:
            EngineConfig.add_arguments(sp)
        sp.set_defaults(func=func, with_config=with_config)
        return sp

    _add_out(add("theory", cmd_theory, "Normalized triple-correlation density grid"))
    sp = add("profile", cmd_profile, "Cross-section of the density at fixed v2")
    sp.add_argument("--v2", type=float, default=5.0, help="Fixed second separation")
    _add_out(sp)
    _add_out(add("sine-kernel", cmd_sine_kernel, "Limiting sine-kernel determinant grid"))
    sp = add("empirical", cmd_empirical, "Triple-correlation histogram of zeros")
    sp.add_argument("ZEROS", help="Zero file (text or HDF5)")
    _add_out(sp)
    sp = add("two-point", cmd_two_point, "Pair-correlation histogram of zeros")
    sp.add_argument("ZEROS", help="Zero file (text or HDF5)")
    sp.add_argument("--theory", action="store_true", help="Add the normalized theory column")
    _add_out(sp)
    sp = add("diff", cmd_diff, "Statistics of the difference of two grids", with_config=False)
    sp.add_argument("A", help="First grid (CSV)")
    sp.add_argument("B", help="Second grid (CSV)")
    sp = add("rmt-verify", cmd_rmt_verify, "Check the U(N) triple identity", with_config=False)
    sp.add_argument("--N", type=int, default=5, help="Matrix dimension")
    sp.add_argument("--samples", type=int, default=100, help="Number of random triples")
    sp.add_argument("--seed", type=int, default=42, help="Random seed")
    sp.add_argument("--tolerance", type=float, default=1e-8, help="Largest relative deviation")
    sp = add("limit", cmd_limit, "Convergence to the sine-kernel limit")
    sp.add_argument("V1", type=float, help="First scaled separation")
    sp.add_argument("V2", type=float, help="Second scaled separation")
    sp.add_argument("T_LIST", help="Comma separated ascending heights")
    _add_out(sp)
    add("selftest", cmd_selftest, "Run the oracle suite")
    return ap


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run a command and map failures to exit codes.

    Args:
        argv (Optional[List[str]], optional): Arguments. Defaults to sys.argv[1:].

    Returns:
        int: The exit code
    """
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    try:
        config = EngineConfig.from_args(args) if args.with_config else None
        return args.func(args, config)
    except (ConfigError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, GridMismatch, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (TripleCorrelationError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
