#!/usr/bin/env python3
"""Emit the reduction-ratio curve r(d) together with its lower bound d/(d+2).

Writes CSV columns d, r, lower_bound for d = 1..d_max (plot with any
external tool).

Usage:
    python scripts/figure_reduction_ratio.py [--d-max 30] [-o figure1.csv]
"""

import argparse
import sys

from emschemes.cli import CliCommand, dispatch


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--d-max", type=int, default=30)
    parser.add_argument("-o", "--out", default=None)
    args = parser.parse_args()
    return dispatch(CliCommand(verb="figure", d_max=args.d_max, out=args.out))


if __name__ == "__main__":
    sys.exit(main())
