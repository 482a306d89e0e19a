"""Command-line entry point wiring all modules together.

Every artifact-producing command writes a run manifest (config snapshot,
seeds, input/output digests, timings) next to its primary output, logs
to stderr, and prints a one-line JSON summary to stdout. Option values
resolve as CLI > TANDEMFLOW_* environment > config file > defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, nn
from .artifacts import (
    manifest_path_for,
    read_json,
    read_f64,
    write_f64,
    write_json,
    write_jsonl,
    write_manifest,
)
from .descriptors import DescriptorDims, SeriesStats
from .errors import TandemflowError
from .metrics import EvalRecord, autocorr_space_report, grouped_report
from .phdist import GenConfig, PhaseType, generate_library, ph_moments
from .pipeline import (
    ROLES,
    BuildConfig,
    ModelBundle,
    benchmark_suite,
    build_dataset,
    infer_tandem,
    load_role_dataset,
    load_stats_cache,
    sweep_dims,
    train_role,
)
from .simulator import TandemSpec, simulate_tandem

log = logging.getLogger("tandemflow")

ENV_PREFIX = "TANDEMFLOW_"


def _parse_dims(text: str) -> DescriptorDims:
    parts = [int(p) for p in text.replace(";", ",").split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("dims must be n,n1,n2")
    return DescriptorDims(*parts)


def _parse_hidden(text: str) -> tuple:
    return tuple(int(p) for p in text.split(","))


def _load_config_file(path) -> dict:
    """Flat key=value file; '#' starts a comment."""
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise TandemflowError(f"config line not key=value: {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _env_overrides() -> dict:
    values = {}
    for key, value in os.environ.items():
        if key.startswith(ENV_PREFIX):
            values[key[len(ENV_PREFIX) :].lower()] = value
    return values


def _coerce(actions: dict, overrides: dict) -> dict:
    """Coerce string override values via the option's argparse type."""
    out = {}
    for key, value in overrides.items():
        if key not in actions:
            continue
        action = actions[key]
        if action.type is not None:
            out[key] = action.type(value)
        elif isinstance(action.default, bool):
            out[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            out[key] = value
    return out


class _Command:
    """One subcommand plus its manifest bookkeeping."""

    def __init__(self, args):
        self.args = args
        self.t0 = time.perf_counter()
        self.inputs = []
        self.outputs = []

    def finish(self, primary_output, summary: dict):
        config = {
            k: v for k, v in vars(self.args).items()
            if k not in ("func", "config") and not k.startswith("_")
        }
        for key, value in list(config.items()):
            if isinstance(value, DescriptorDims):
                config[key] = [value.n, value.n1, value.n2]
            elif isinstance(value, tuple):
                config[key] = list(value)
        manifest = write_manifest(
            manifest_path_for(primary_output),
            command=self.args.command,
            config=config,
            seed=getattr(self.args, "seed", None),
            inputs=self.inputs,
            outputs=self.outputs,
            wall_time_s=round(time.perf_counter() - self.t0, 3),
            version=__version__,
        )
        summary = dict(summary)
        summary["manifest"] = str(manifest_path_for(primary_output))
        print(json.dumps(summary, sort_keys=True))


# ---------------------------------------------------------------------------
# Subcommand implementations


def cmd_gen_dists(args):
    cmd = _Command(args)
    cfg = GenConfig(
        count=args.count,
        scv_min=args.scv_min,
        scv_max=args.scv_max,
        mean=args.mean,
        max_order=args.max_order,
        seed=args.seed,
    )
    lib = generate_library(cfg)
    payload = {
        "format": "tandemflow-ph-library",
        "version": 1,
        "config": {
            "count": cfg.count, "scv_min": cfg.scv_min, "scv_max": cfg.scv_max,
            "mean": cfg.mean, "max_order": cfg.max_order, "seed": cfg.seed,
        },
        "dists": [ph.to_json_dict() for ph in lib],
    }
    write_json(args.out, payload, indent=None)
    cmd.outputs.append(args.out)
    cmd.finish(args.out, {"out": args.out, "count": len(lib)})
    return 0


def cmd_simulate(args):
    cmd = _Command(args)
    cmd.inputs.append(args.spec)
    spec = TandemSpec.from_json_dict(read_json(args.spec))
    res = simulate_tandem(spec, args.arrivals, args.warmup, args.seed)
    stations = []
    sidecar = None
    if args.raw_departures:
        sidecar = str(Path(args.out).with_suffix(".departures.f64"))
        offsets = write_f64(sidecar, list(res.departures))
        cmd.outputs.append(sidecar)
    for j in range(spec.m):
        entry = {
            "pmf_counts": res.pmf_counts[j].tolist(),
            "busy_time": res.busy_time[j],
        }
        if sidecar:
            entry["departures_sidecar"] = {"path": sidecar, **offsets[j]}
        else:
            entry["departures"] = res.departures[j].tolist()
        stations.append(entry)
    payload = {
        "format": "tandemflow-simresult",
        "version": 1,
        "seed": res.seed,
        "arrivals_seen": res.arrivals_seen,
        "sim_time": res.sim_time,
        "warmup_fraction": args.warmup,
        "stations": stations,
    }
    write_json(args.out, payload, indent=None)
    cmd.outputs.append(args.out)
    cmd.finish(args.out, {
        "out": args.out,
        "mean_occupancy": [res.mean_occupancy(j) for j in range(spec.m)],
    })
    return 0


def cmd_describe(args):
    cmd = _Command(args)
    cmd.inputs.append(args.raw_departures)
    series = read_f64(args.raw_departures, offset=args.offset, count=args.count)
    stats = SeriesStats(series, args.dims)
    desc = stats.descriptor(args.dims)
    payload = {
        "format": "tandemflow-descriptor",
        "version": 1,
        "dims": [args.dims.n, args.dims.n1, args.dims.n2],
        "log_moments": desc.log_moments.tolist(),
        "autocorr": {"%d,%d,%d" % k: v for k, v in desc.autocorr.items()},
        "vector": desc.vector().tolist(),
        "count": stats.count,
    }
    write_json(args.out, payload)
    cmd.outputs.append(args.out)
    cmd.finish(args.out, {"out": args.out, "vector_length": args.dims.vector_length})
    return 0


def cmd_build_dataset(args):
    cmd = _Command(args)
    cfg = BuildConfig(
        arrival=GenConfig(count=1, scv_min=args.scv_min, scv_max=args.scv_max,
                          mean=1.0, max_order=args.max_order, seed=0),
        service=GenConfig(count=1, scv_min=args.scv_min, scv_max=args.scv_max,
                          mean=1.0, max_order=args.max_order, seed=0),
        n_instances=args.instances,
        n_arrivals=args.arrivals,
        dims=args.dims,
        L=args.L,
        delta=args.delta,
        seed=args.seed,
        warmup_fraction=args.warmup,
        service_mean_range=(args.service_mean_min, args.service_mean_max),
    )
    def progress(i, total):
        if i % max(total // 20, 1) == 0 or i == total:
            log.info("simulated %d/%d instances", i, total)

    info = build_dataset(
        cfg, args.out, threads=args.threads,
        keep_stats_cache=not args.no_stats_cache, progress=progress,
    )
    cmd.outputs.extend(info["paths"].values())
    cmd.finish(Path(args.out), {
        "out": args.out, "counts": info["counts"], "rejections": info["rejections"],
    })
    return 0


def cmd_train(args):
    cmd = _Command(args)
    data_path = Path(args.data) / f"{args.role}.jsonl"
    cmd.inputs.append(data_path)
    header, splits = load_role_dataset(data_path)
    hidden = args.hidden
    if hidden is None:
        dims = DescriptorDims(*header["dims"])
        hidden = nn.default_architecture(args.role, dims, header["L"])[1:-1]
    config = nn.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        hidden_dims=hidden,
        batch_size=args.batch_size,
        weight_decay=args.weight_decay,
        alpha=args.alpha,
        seed=args.seed,
    )
    loss_mode = "sum" if args.loss_sum else "mean"
    model, curves = train_role(header, splits, args.role, config, loss_mode)
    nn.save_model(model, args.out)
    cmd.outputs.append(args.out)
    curves_path = str(Path(args.out)) + ".curves.json"
    write_json(curves_path, {
        "train_loss": curves.train_loss,
        "val_metric": curves.val_metric,
        "best_epoch": curves.best_epoch,
        "best_val": curves.best_val,
    })
    cmd.outputs.append(curves_path)
    cmd.finish(args.out, {
        "out": args.out, "best_val": curves.best_val, "best_epoch": curves.best_epoch,
        "parameters": model.parameter_count(),
    })
    return 0


def cmd_tune(args):
    cmd = _Command(args)
    data_path = Path(args.data) / f"{args.role}.jsonl"
    cmd.inputs.append(data_path)
    header, splits = load_role_dataset(data_path)
    space = json.loads(Path(args.space).read_text()) if args.space else None
    if space:
        space = {k: tuple(v) for k, v in space.items()}
        cmd.inputs.append(args.space)

    def train_fn(config):
        if args.max_epochs and config.epochs > args.max_epochs:
            config = nn.TrainConfig(**{**config.to_json_dict(), "epochs": args.max_epochs,
                                       "hidden_dims": config.hidden_dims})
        _, curves = train_role(header, splits, args.role, config)
        return curves.best_val

    best, leaderboard = nn.random_search(space, args.budget, train_fn, seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    board_path = out_dir / "leaderboard.json"
    write_json(board_path, {
        "best_config": best.to_json_dict(),
        "best_trial": leaderboard["best_trial"],
        "ranking": leaderboard["ranking"],
        "trials": [
            {"trial": t["trial"], "config": t["config"].to_json_dict(),
             "val_metric": t["val_metric"]}
            for t in leaderboard["trials"]
        ],
    })
    cmd.outputs.append(board_path)
    cmd.finish(out_dir, {
        "out": str(board_path),
        "best_val": leaderboard["trials"][leaderboard["best_trial"]]["val_metric"],
    })
    return 0


def cmd_infer(args):
    cmd = _Command(args)
    cmd.inputs.extend([args.spec, str(Path(args.bundle) / "bundle.json")])
    bundle = ModelBundle.load(args.bundle)
    spec = TandemSpec.from_json_dict(read_json(args.spec))
    n = bundle.dims.n
    arr_lm = np.log(ph_moments(spec.arrival, n))
    svc_lms = [np.log(ph_moments(s, n)) for s in spec.services]
    chain = infer_tandem(bundle, arr_lm, svc_lms)
    stations = []
    for pred in chain:
        entry = {"station": pred.station}
        if pred.pmf is not None:
            entry["pmf"] = pred.pmf.probs.tolist()
            entry["mean_occupancy"] = pred.mean_occupancy
            entry["mean_wait"] = pred.mean_wait
        if pred.descriptor is not None:
            entry["descriptor"] = pred.descriptor.vector().tolist()
        stations.append(entry)
    payload = {
        "format": "tandemflow-inference",
        "version": 1,
        "dims": [bundle.dims.n, bundle.dims.n1, bundle.dims.n2],
        "L": bundle.L,
        "stations": stations,
    }
    write_json(args.out, payload, indent=None)
    cmd.outputs.append(args.out)
    cmd.finish(args.out, {
        "out": args.out,
        "mean_wait": [s.get("mean_wait") for s in stations],
    })
    return 0


def cmd_evaluate(args):
    cmd = _Command(args)
    roles = [args.role] if args.role else list(ROLES)
    out_stem = Path(args.out)
    bundle = None
    if args.model_dir:
        bundle = ModelBundle.load(args.model_dir)
        cmd.inputs.append(str(Path(args.model_dir) / "bundle.json"))
    reports = {}
    for role in roles:
        data_path = Path(args.truth) / f"{role}.jsonl"
        if not data_path.exists():
            continue
        cmd.inputs.append(data_path)
        header, splits = load_role_dataset(data_path, splits=(args.split,))
        block = splits[args.split]
        if block["x"].shape[0] == 0:
            continue
        dims = DescriptorDims(*header["dims"])
        if args.pred:
            pred_path = Path(args.pred) / f"{role}.pred.jsonl"
            cmd.inputs.append(pred_path)
            from .artifacts import read_jsonl

            _, rows = read_jsonl(pred_path)
            preds = np.array([r["prediction"] for r in rows], dtype=float)
        elif bundle is not None:
            preds = nn.forward(getattr(bundle, role), block["x"])
            pred_path = out_stem.parent / f"{role}.pred.jsonl"
            pred_path.parent.mkdir(parents=True, exist_ok=True)
            write_jsonl(
                pred_path,
                {"format": "tandemflow-predictions", "version": 1, "role": role,
                 "split": args.split},
                [{"index": i, "prediction": p.tolist()} for i, p in enumerate(preds)],
            )
            cmd.outputs.append(pred_path)
        else:
            raise TandemflowError("evaluate needs --pred or --model-dir")
        records = [
            EvalRecord(role=role, truth=block["y"][i], pred=preds[i],
                       covariates=block["covariates"][i], dims=dims)
            for i in range(preds.shape[0])
        ]
        if args.group == "autocorr-space":
            report = autocorr_space_report([r.covariates for r in records])
        else:
            report = grouped_report(records, args.group)
        path = out_stem.parent / f"{out_stem.stem}.{role}{out_stem.suffix or '.csv'}"
        path.parent.mkdir(parents=True, exist_ok=True)
        report.write(path)
        cmd.outputs.extend([path, str(path) + ".meta.json"])
        reports[role] = str(path)
    if not reports:
        raise TandemflowError("no role datasets found to evaluate")
    cmd.finish(out_stem, {"reports": reports})
    return 0


def cmd_bench(args):
    cmd = _Command(args)
    bundle = None
    if args.bundle:
        bundle = ModelBundle.load(args.bundle)
        cmd.inputs.append(str(Path(args.bundle) / "bundle.json"))

    def progress(i, total):
        if i % max(total // 20, 1) == 0 or i == total:
            log.info("benchmark scenario %d/%d", i, total)

    result = benchmark_suite(
        args.suite, bundle, args.sim_budget, seed=args.seed,
        max_scenarios=args.max_scenarios, threads=args.threads, progress=progress,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result_path = out_dir / "result.json"
    write_json(result_path, result, indent=None)
    cmd.outputs.append(result_path)
    import csv as _csv

    rows = result["scenarios"]
    csv_path = out_dir / "scenarios.csv"
    with open(csv_path, "w") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        keys = sorted({k for row in rows for k in row})
        writer.writerow(keys)
        for row in rows:
            writer.writerow([json.dumps(row.get(k)) for k in keys])
    cmd.outputs.append(csv_path)
    summary = {"out": str(out_dir), "scenarios": len(rows),
               "total_defined": result["total_defined"]}
    if rows and "qna_mape" in rows[0]:
        summary["qna_mape_mean"] = float(
            np.mean([np.mean(r["qna_mape"]) for r in rows])
        )
    if rows and "nn_mape" in rows[0]:
        summary["nn_mape_mean"] = float(
            np.mean([np.mean(r["nn_mape"]) for r in rows])
        )
    cmd.finish(out_dir, summary)
    return 0


def cmd_sweep_dims(args):
    cmd = _Command(args)
    cmd.inputs.append(args.cache)
    instances, meta = load_stats_cache(args.cache)

    def parse_range(text):
        lo, hi = (int(p) for p in text.split(":"))
        return range(lo, hi + 1)

    if args.cells:
        cells = []
        for part in args.cells.split(";"):
            n, n1, n2 = (int(p) for p in part.split(","))
            cells.append((n, n1, n2))
    else:
        cells = [
            (n, n1, n2)
            for n in parse_range(args.n_range)
            for n1 in parse_range(args.n1_range)
            for n2 in parse_range(args.n2_range)
        ]
    config = nn.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, hidden_dims=args.hidden,
        batch_size=args.batch_size, weight_decay=args.weight_decay, seed=args.seed,
    )

    def progress(i, total):
        log.info("sweep cell %d/%d", i, total)

    result = sweep_dims(
        instances, cells, config, L=args.L, delta=meta["delta"],
        n_arrivals=meta["n_arrivals"], progress=progress,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "sweep.json"
    write_json(out_path, result)
    import csv as _csv

    csv_path = out_dir / "sweep.csv"
    with open(csv_path, "w") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "n1", "n2", "val_sae"])
        for row in result["cells"]:
            writer.writerow([row["n"], row["n1"], row["n2"], repr(row["val_sae"])])
    cmd.outputs.extend([out_path, csv_path])
    cmd.finish(out_dir, {"out": str(out_dir), "cells": len(result["cells"])})
    return 0


def cmd_runtime(args):
    cmd = _Command(args)
    bundle = ModelBundle.load(args.bundle)
    cmd.inputs.append(str(Path(args.bundle) / "bundle.json"))
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    rows = []
    for role in ROLES:
        model = getattr(bundle, role)
        batch = rng.normal(0.0, 1.0, size=(args.batch, model.input_dim))
        nn.forward(model, batch)  # warm caches
        best = np.inf
        for _ in range(args.reps):
            t0 = time.perf_counter()
            nn.forward(model, batch)
            best = min(best, time.perf_counter() - t0)
        rows.append({"network": role, "instances": args.batch,
                     "runtime_s": round(best, 6)})
    payload = {"format": "tandemflow-runtime", "version": 1, "rows": rows}
    write_json(args.out, payload)
    cmd.outputs.append(args.out)
    for row in rows:
        log.info("%s  %d instances  %.6f s", row["network"], row["instances"],
                 row["runtime_s"])
    cmd.finish(args.out, {"out": args.out, "rows": rows})
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tandemflow",
        description="Tandem queueing analysis with neural departure surrogates.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=max(os.cpu_count() or 1, 1))
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("gen-dists", help="generate a phase-type library")
    common(p)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--scv-min", type=float, default=0.001)
    p.add_argument("--scv-max", type=float, default=15.0)
    p.add_argument("--mean", type=float, default=1.0)
    p.add_argument("--max-order", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_dists)

    p = sub.add_parser("simulate", help="simulate a tandem spec")
    common(p)
    p.add_argument("--spec", required=True)
    p.add_argument("--arrivals", type=int, default=1_000_000)
    p.add_argument("--warmup", type=float, default=0.1)
    p.add_argument("--raw-departures", action="store_true",
                   help="spill departures to a float64 sidecar")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("describe", help="descriptor of a raw departure series")
    common(p)
    p.add_argument("--raw-departures", required=True)
    p.add_argument("--dims", type=_parse_dims, default=DescriptorDims())
    p.add_argument("--offset", type=int, default=0,
                   help="float64 offset into the sidecar (station block start)")
    p.add_argument("--count", type=int, default=None,
                   help="number of values to read (default: rest of file)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("build-dataset", help="simulate and label training data")
    common(p)
    p.add_argument("--instances", type=int, default=2000)
    p.add_argument("--arrivals", type=int, default=1_000_000)
    p.add_argument("--dims", type=_parse_dims, default=DescriptorDims())
    p.add_argument("--L", type=int, default=150)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--scv-min", type=float, default=0.001)
    p.add_argument("--scv-max", type=float, default=15.0)
    p.add_argument("--max-order", type=int, default=10)
    p.add_argument("--service-mean-min", type=float, default=0.01)
    p.add_argument("--service-mean-max", type=float, default=0.9)
    p.add_argument("--warmup", type=float, default=0.1)
    p.add_argument("--no-stats-cache", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train", help="train one role network")
    common(p)
    p.add_argument("--role", choices=ROLES, required=True)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--hidden", type=_parse_hidden, default=None,
                   help="hidden sizes, e.g. 50,70,50 (default: role architecture)")
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--weight-decay", type=float, default=1e-5)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--loss-sum", action="store_true",
                   help="use per-instance block sums in the descriptor loss")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", help="random hyperparameter search")
    common(p)
    p.add_argument("--role", choices=ROLES, required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--budget", type=int, default=10)
    p.add_argument("--space", default=None, help="JSON file overriding the state space")
    p.add_argument("--max-epochs", type=int, default=None,
                   help="cap per-trial epochs (desk-scale shortcut)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("infer", help="run the network chain on a tandem spec")
    common(p)
    p.add_argument("--bundle", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("evaluate", help="grouped accuracy report")
    common(p)
    p.add_argument("--truth", required=True, help="dataset directory")
    p.add_argument("--pred", default=None, help="directory of *.pred.jsonl files")
    p.add_argument("--model-dir", default=None, help="bundle for on-the-fly predictions")
    p.add_argument("--role", choices=ROLES, default=None)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--group", default="util-scv",
                   choices=("util-scv", "autocorr", "autocorr-space"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="benchmark suites against simulation truth")
    common(p)
    p.add_argument("--suite", choices=("two-station-grid", "suresh-whitt-9"),
                   required=True)
    p.add_argument("--bundle", default=None)
    p.add_argument("--sim-budget", type=int, default=100_000)
    p.add_argument("--max-scenarios", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep-dims", help="descriptor-dims sweep over a sim cache")
    common(p)
    p.add_argument("--cache", required=True, help="simcache.tfsc from build-dataset")
    p.add_argument("--cells", default=None, help="explicit cells, e.g. 5,2,2;5,0,0")
    p.add_argument("--n-range", default="2:10")
    p.add_argument("--n1-range", default="0:5")
    p.add_argument("--n2-range", default="0:5")
    p.add_argument("--L", type=int, default=150)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--hidden", type=_parse_hidden, default=(50, 70, 100))
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--weight-decay", type=float, default=1e-5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep_dims)

    p = sub.add_parser("runtime", help="batch inference timing per network")
    common(p)
    p.add_argument("--bundle", required=True)
    p.add_argument("--batch", type=int, default=750)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_runtime)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # resolve config file and environment into subparser defaults
    overrides = {}
    if "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        overrides.update(_load_config_file(cfg_path))
    overrides.update(_env_overrides())
    if overrides:
        for sub in parser._subparsers._group_actions[0].choices.values():
            actions = {a.dest: a for a in sub._actions if a.dest != "help"}
            sub.set_defaults(**_coerce(actions, overrides))
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except TandemflowError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
              file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
