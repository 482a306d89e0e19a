#!/usr/bin/env python3
"""Run both benchmark suites against a trained bundle and print summaries."""

import argparse
import json
import subprocess
import sys
from pathlib import Path


def run(argv):
    print("+", " ".join(map(str, argv)), file=sys.stderr, flush=True)
    subprocess.run([sys.executable, "-m", "tandemflow", *map(str, argv)], check=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--bundle", required=True)
    ap.add_argument("--out", default="runs/bench")
    ap.add_argument("--sim-budget", type=int, default=200_000)
    ap.add_argument("--max-scenarios", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    cap = ["--max-scenarios", args.max_scenarios] if args.max_scenarios else []
    run(["bench", "--suite", "two-station-grid", "--bundle", args.bundle,
         "--sim-budget", args.sim_budget, *cap, "--seed", args.seed,
         "--out", out / "grid"])
    run(["bench", "--suite", "suresh-whitt-9", "--bundle", args.bundle,
         "--sim-budget", args.sim_budget, "--seed", args.seed,
         "--out", out / "sw9"])

    for name in ("grid", "sw9"):
        result = json.loads((out / name / "result.json").read_text())
        rows = result["scenarios"]
        nn_mape = [m for r in rows for m in r.get("nn_mape", [])]
        qna_mape = [m for r in rows for m in r.get("qna_mape", [])]
        line = f"{name}: {len(rows)} scenarios"
        if nn_mape:
            line += f", NN mean MAPE {sum(nn_mape) / len(nn_mape):.2f}%"
        line += f", QNA mean MAPE {sum(qna_mape) / len(qna_mape):.2f}%"
        print(line)


if __name__ == "__main__":
    main()
