#! /usr/bin/env python3


import argparse
import logging
from pathlib import Path

from triple_correlation.zeros import load_zeros


def main():
    ap = argparse.ArgumentParser(formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ap.add_argument("ZEROS", help="Text file with one zero ordinate per line")
    ap.add_argument("SAVE", help="HDF5 file to create")
    ap.add_argument(
        "--limit", type=int, default=None, help="Keep only the first LIMIT zeros"
    )
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO)

    ds = load_zeros(Path(args.ZEROS))
    if args.limit is not None:
        ds = ds.prefix(args.limit)
    ds.save(Path(args.SAVE))


if __name__ == "__main__":
    main()
