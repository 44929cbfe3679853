#!/usr/bin/env python3
"""Ill-conditioning sweep: delta from 1e-1 down to a chosen floor.

Shows where the conventional covariance downdate dies while the SVD-factored
update keeps going.  Equivalent to `hybridkf illcond`.
"""

import argparse
import sys

from hybridkf.cli import main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--example", choices=("tracking", "cstr"), default="tracking")
    p.add_argument("--delta-min", type=float, default=1e-13)
    p.add_argument("--mc", type=int, default=10)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--threads", type=int, default=4)
    p.add_argument("--out", default="illcond_sweep.csv")
    return p.parse_args()


if __name__ == "__main__":
    a = parse_args()
    sys.exit(
        main(
            [
                "illcond",
                "--example", a.example,
                "--delta-min", str(a.delta_min),
                "--mc", str(a.mc),
                "--seed", str(a.seed),
                "--threads", str(a.threads),
                "--out", a.out,
            ]
        )
    )
