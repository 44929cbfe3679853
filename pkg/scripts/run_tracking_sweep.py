#!/usr/bin/env python3
"""Radar tracking sampling-period sweep (ARMSE and CPU tables).

Thin wrapper over the CLI preset; equivalent to `hybridkf table2`.
"""

import argparse
import sys

from hybridkf.cli import main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--mc", type=int, default=100, help="Monte Carlo runs per point")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--threads", type=int, default=4)
    p.add_argument("--out", default="tracking_sweep.csv", help="results CSV path")
    return p.parse_args()


if __name__ == "__main__":
    a = parse_args()
    sys.exit(
        main(
            [
                "table2",
                "--mc", str(a.mc),
                "--seed", str(a.seed),
                "--threads", str(a.threads),
                "--out", a.out,
            ]
        )
    )
