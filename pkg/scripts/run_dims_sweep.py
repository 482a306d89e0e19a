#!/usr/bin/env python3
"""Descriptor-dimension sweep: accuracy as a function of (n, n1, n2).

Reuses the simulation cache written by build-dataset so every cell sees
the same labeled systems. The default ranges reproduce the full study
grid (n in 2..10, n1/n2 in 0..5); at desk scale expect several minutes
per cell of training, so narrow the ranges for quick looks.
"""

import argparse
import subprocess
import sys
from pathlib import Path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cache", required=True,
                    help="simcache.tfsc written by build-dataset (needs stats "
                         "dims covering the requested ranges)")
    ap.add_argument("--out", default="runs/sweep")
    ap.add_argument("--n-range", default="2:10")
    ap.add_argument("--n1-range", default="0:5")
    ap.add_argument("--n2-range", default="0:5")
    ap.add_argument("--epochs", type=int, default=40)
    ap.add_argument("--L", type=int, default=150)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    argv = [sys.executable, "-m", "tandemflow", "sweep-dims",
            "--cache", args.cache, "--out", args.out,
            "--n-range", args.n_range, "--n1-range", args.n1_range,
            "--n2-range", args.n2_range, "--epochs", str(args.epochs),
            "--L", str(args.L), "--seed", str(args.seed)]
    print("+", " ".join(argv), file=sys.stderr, flush=True)
    subprocess.run(argv, check=True)
    print(f"sweep table under {Path(args.out)}", file=sys.stderr)


if __name__ == "__main__":
    main()
