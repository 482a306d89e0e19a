#!/usr/bin/env python3
"""Full desk-scale pipeline: dataset, three networks, evaluation, benchmarks.

Chains the CLI commands with consistent paths. With --quick everything
shrinks to a few-minute smoke run; the defaults reproduce the
acceptance-scale configuration (about an hour of simulation on two
cores plus a few minutes of training).
"""

import argparse
import subprocess
import sys
from pathlib import Path


def run(argv):
    print("+", " ".join(map(str, argv)), file=sys.stderr, flush=True)
    subprocess.run([sys.executable, "-m", "tandemflow", *map(str, argv)], check=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--quick", action="store_true", help="tiny smoke-scale run")
    ap.add_argument("--seed", type=int, default=20240809)
    args = ap.parse_args()

    out = Path(args.out)
    instances = 200 if args.quick else 6000
    arrivals = 50_000 if args.quick else 1_000_000
    epochs = 20 if args.quick else 250
    bench_budget = 20_000 if args.quick else 200_000
    bench_cap = ["--max-scenarios", "6"] if args.quick else []

    data = out / "dataset"
    run(["build-dataset", "--instances", instances, "--arrivals", arrivals,
         "--L", 150, "--scv-min", 0.01, "--scv-max", 15,
         "--seed", args.seed, "--out", data])

    bundle = out / "bundle"
    bundle.mkdir(parents=True, exist_ok=True)
    for role, hidden, lr in (
        ("nn1", "50,70,50", 0.001),
        ("nn2", "50,70,200,350,600", 0.0005),
        ("nn3", "50,70,50", 0.001),
    ):
        run(["train", "--role", role, "--data", data, "--hidden", hidden,
             "--lr", lr, "--epochs", epochs, "--batch-size", 64,
             "--seed", args.seed + 1, "--out", bundle / f"{role}.tfm"])
    (bundle / "bundle.json").write_text(
        '{"L": 150, "dims": [5, 2, 2], "format": "tandemflow-bundle", "version": 1}\n'
    )

    run(["evaluate", "--truth", data, "--model-dir", bundle,
         "--group", "util-scv", "--out", out / "reports" / "accuracy.csv"])
    run(["evaluate", "--truth", data, "--model-dir", bundle, "--role", "nn2",
         "--group", "autocorr", "--out", out / "reports" / "by_autocorr.csv"])
    run(["bench", "--suite", "two-station-grid", "--bundle", bundle,
         "--sim-budget", bench_budget, *bench_cap,
         "--seed", args.seed, "--out", out / "bench-grid"])
    run(["bench", "--suite", "suresh-whitt-9", "--bundle", bundle,
         "--sim-budget", bench_budget, "--seed", args.seed,
         "--out", out / "bench-sw9"])
    run(["runtime", "--bundle", bundle, "--batch", 750,
         "--out", out / "runtime.json"])
    print(f"pipeline artifacts under {out}", file=sys.stderr)


if __name__ == "__main__":
    main()
