"""End-to-end orchestration: datasets, the inference chain, baselines.

Training data comes from 2-station simulations only: station-1
departures label the renewal-input descriptor network, station-2
occupancy labels the PMF network, and station-2 departures label the
correlated-input descriptor network. Inference chains the three
networks station by station for any m >= 2. A classical two-moment
decomposition (SCV propagation plus the Kraemer/Langenbach-Belz mean
wait) serves as the comparison baseline.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn
from .artifacts import canonical_hash, read_blob, read_jsonl, write_blob, write_jsonl
from .descriptors import (
    DepartureDescriptor,
    DescriptorDims,
    QueuePmf,
    SeriesStats,
    build_pmf,
)
from .errors import SchemaError, UnstableSystemError, ZeroVarianceError
from .metrics import mean_from_pmf, wait_from_little
from .phdist import (
    GenConfig,
    PhaseType,
    erlang,
    exponential,
    hyperexp_balanced,
    hyperexp_fit3,
    mixed_erlang_fit,
    ph_moments,
    ph_scv,
    sample_ph,
    scale_to_mean,
)
from .simulator import TandemSpec, simulate_tandem

DATASET_FORMAT = "tandemflow-dataset"
ROLES = ("nn1", "nn2", "nn3")

# sufficient-statistics cap for the cached simulations: descriptors for
# any n <= 10, lags <= 5, degrees <= 5 can be rebuilt without resimulating
STATS_DIMS = DescriptorDims(n=10, n1=5, n2=5)


@dataclass(frozen=True)
class BuildConfig:
    """Everything that determines a dataset build."""

    arrival: GenConfig
    service: GenConfig
    n_instances: int
    n_arrivals: int
    dims: DescriptorDims = DescriptorDims()
    L: int = 150
    delta: float = 1e-3
    seed: int = 0
    warmup_fraction: float = 0.1
    service_mean_range: tuple = (0.01, 0.9)
    split_fractions: tuple = (30 / 32, 1 / 32, 1 / 32)  # 300k/10k/10k ratio
    max_retries: int = 100
    stats_dims: DescriptorDims = STATS_DIMS  # cache coverage for later sweeps

    def __post_init__(self):
        lo, hi = self.service_mean_range
        if not 0 < lo < hi < 1.0:
            raise ValueError("service means must stay inside (0, 1)")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")
        sd, d = self.stats_dims, self.dims
        if sd.n < d.n or sd.n1 < d.n1 or sd.n2 < d.n2:
            raise ValueError("stats_dims must cover dims")

    def to_json_dict(self) -> dict:
        d = {
            "arrival": vars(self.arrival).copy(),
            "service": vars(self.service).copy(),
            "n_instances": self.n_instances,
            "n_arrivals": self.n_arrivals,
            "dims": [self.dims.n, self.dims.n1, self.dims.n2],
            "L": self.L,
            "delta": self.delta,
            "seed": self.seed,
            "warmup_fraction": self.warmup_fraction,
            "service_mean_range": list(self.service_mean_range),
            "split_fractions": list(self.split_fractions),
            "stats_dims": [self.stats_dims.n, self.stats_dims.n1, self.stats_dims.n2],
        }
        d["arrival"]["family_weights"] = list(d["arrival"]["family_weights"])
        d["service"]["family_weights"] = list(d["service"]["family_weights"])
        return d


@dataclass
class InstanceResult:
    """Worker output for one simulated 2-station training instance."""

    index: int
    spec_hash: str
    seed: int
    arrival_ph: dict
    service_phs: list
    arrival_log_moments: np.ndarray     # at STATS_DIMS.n
    service_log_moments: np.ndarray     # (2, STATS_DIMS.n)
    dep_stats: list                     # SeriesStats array dicts per station
    pmf_counts: np.ndarray              # station-2 occupancy histogram
    covariates1: dict
    covariates2: dict
    rejections: int


def _draw_instance(rng, cfg: BuildConfig) -> TandemSpec:
    """Fresh arrival and service distributions for one training instance.

    Sampling directly from the generator configs (rather than resampling
    a materialized library) keeps workers self-contained; service means
    are uniform over the configured range.
    """
    arrival = sample_ph(rng, cfg.arrival)
    lo, hi = cfg.service_mean_range
    means = rng.uniform(lo, hi, size=2)
    services = tuple(
        scale_to_mean(sample_ph(rng, cfg.service), float(mu)) for mu in means
    )
    return TandemSpec(arrival, services)


def _simulate_instance(args) -> InstanceResult:
    index, entropy, cfg = args
    seq = np.random.SeedSequence(entropy)
    rng = np.random.default_rng(seq)
    rejections = 0
    last_error = None
    for _ in range(cfg.max_retries):
        spec = _draw_instance(rng, cfg)
        sim_seed = int(rng.integers(2**63))
        try:
            sim = simulate_tandem(spec, cfg.n_arrivals, cfg.warmup_fraction, sim_seed)
            pmf2 = build_pmf(sim.pmf_counts[1], cfg.L, cfg.delta)
            if pmf2.tail_flag:
                raise ValueError(f"tail mass {pmf2.tail_mass:.2e} above delta")
            stats = [SeriesStats(d, cfg.stats_dims) for d in sim.departures]
        except (ValueError, ZeroVarianceError) as exc:
            rejections += 1
            last_error = exc
            continue
        n_max = cfg.stats_dims.n
        arr_lm = np.log(ph_moments(spec.arrival, n_max))
        svc_lm = np.stack([np.log(ph_moments(s, n_max)) for s in spec.services])
        dep1 = stats[0]
        m1, m2 = dep1.moments(2)
        covariates1 = {
            "utilization": float(np.exp(svc_lm[0, 0])),
            "arrival_scv": ph_scv(spec.arrival),
            "service_scv": ph_scv(spec.services[0]),
            "rho111": 0.0,  # renewal external arrivals
        }
        covariates2 = {
            "utilization": float(np.exp(svc_lm[1, 0])),
            "arrival_scv": float((m2 - m1 * m1) / (m1 * m1)),
            "service_scv": ph_scv(spec.services[1]),
            "rho111": float(dep1.autocorr(1, 1, 1)),
        }
        return InstanceResult(
            index=index,
            spec_hash=canonical_hash(spec.to_json_dict()),
            seed=sim_seed,
            arrival_ph=spec.arrival.to_json_dict(),
            service_phs=[s.to_json_dict() for s in spec.services],
            arrival_log_moments=arr_lm,
            service_log_moments=svc_lm,
            dep_stats=[s.to_arrays() for s in stats],
            pmf_counts=sim.pmf_counts[1],
            covariates1=covariates1,
            covariates2=covariates2,
            rejections=rejections,
        )
    raise RuntimeError(
        f"instance {index}: {cfg.max_retries} draws rejected (last: {last_error})"
    )


def _assign_splits(hashes: list, fractions: tuple) -> list:
    """Deterministic partition: order by hash, cut at exact counts."""
    order = sorted(range(len(hashes)), key=lambda i: (hashes[i], i))
    n = len(hashes)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    splits = [""] * n
    for rank, idx in enumerate(order):
        if rank < n_train:
            splits[idx] = "train"
        elif rank < n_train + n_val:
            splits[idx] = "val"
        else:
            splits[idx] = "test"
    return splits


def _records_for_instance(inst: InstanceResult, dims: DescriptorDims, L: int,
                          delta: float, split: str, n_arrivals: int):
    """Assemble the three role records from cached sufficient statistics."""
    stats = [SeriesStats.from_arrays(a) for a in inst.dep_stats]
    desc1 = stats[0].descriptor(dims).vector()
    desc2 = stats[1].descriptor(dims).vector()
    pmf2 = build_pmf(inst.pmf_counts, L, delta)
    arr_lm = inst.arrival_log_moments[: dims.n]
    s1_lm = inst.service_log_moments[0, : dims.n]
    s2_lm = inst.service_log_moments[1, : dims.n]
    prov = {"seed": inst.seed, "spec_hash": inst.spec_hash, "n_arrivals": n_arrivals}
    base = {"split": split, "provenance": prov}
    rec1 = {
        "role": "nn1",
        "input": np.concatenate([arr_lm, s1_lm]).tolist(),
        "label": desc1.tolist(),
        "covariates": inst.covariates1,
        **base,
    }
    nn2_input = np.concatenate([desc1, s2_lm]).tolist()
    rec2 = {
        "role": "nn2",
        "input": nn2_input,
        "label": pmf2.probs.tolist(),
        "covariates": inst.covariates2,
        **base,
    }
    rec3 = {
        "role": "nn3",
        "input": nn2_input,
        "label": desc2.tolist(),
        "covariates": inst.covariates2,
        **base,
    }
    return rec1, rec2, rec3


def build_dataset(cfg: BuildConfig, out_dir, threads: int = 1,
                  keep_stats_cache: bool = True, progress=None) -> dict:
    """Simulate instances and write the three role datasets as JSON Lines.

    Instances whose truncated-tail mass exceeds delta, or whose departure
    series degenerate, are rejected and redrawn from the instance's own
    stream, so results do not depend on the worker count. Returns counts
    and file paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    master = np.random.SeedSequence(cfg.seed)
    entropies = [int(s.generate_state(1)[0]) for s in master.spawn(cfg.n_instances)]
    jobs = [(i, entropies[i], cfg) for i in range(cfg.n_instances)]
    results = []
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for res in pool.map(_simulate_instance, jobs, chunksize=4):
                results.append(res)
                if progress:
                    progress(len(results), cfg.n_instances)
    else:
        for job in jobs:
            results.append(_simulate_instance(job))
            if progress:
                progress(len(results), cfg.n_instances)
    results.sort(key=lambda r: r.index)

    splits = _assign_splits([r.spec_hash for r in results], cfg.split_fractions)
    rows = {role: [] for role in ROLES}
    for inst, split in zip(results, splits):
        r1, r2, r3 = _records_for_instance(
            inst, cfg.dims, cfg.L, cfg.delta, split, cfg.n_arrivals
        )
        rows["nn1"].append(r1)
        rows["nn2"].append(r2)
        rows["nn3"].append(r3)

    total_rej = sum(r.rejections for r in results)
    counts = {s: splits.count(s) for s in ("train", "val", "test")}
    paths = {}
    for role in ROLES:
        header = {
            "format": DATASET_FORMAT,
            "version": 1,
            "role": role,
            "dims": [cfg.dims.n, cfg.dims.n1, cfg.dims.n2],
            "L": cfg.L,
            "delta": cfg.delta,
            "counts": counts,
            "rejections": total_rej,
            "config": cfg.to_json_dict(),
        }
        path = out / f"{role}.jsonl"
        write_jsonl(path, header, rows[role])
        paths[role] = str(path)

    if keep_stats_cache:
        paths["stats_cache"] = str(out / "simcache.tfsc")
        save_stats_cache(out / "simcache.tfsc", results, splits, cfg)
    return {"paths": paths, "counts": counts, "rejections": total_rej}


# ---------------------------------------------------------------------------
# Simulation cache (for descriptor-dims sweeps)


def save_stats_cache(path, results: list, splits: list, cfg: BuildConfig):
    arrays = {}
    meta_rows = []
    for inst, split in zip(results, splits):
        key = f"i{inst.index:06d}"
        for st_idx, st in enumerate(inst.dep_stats):
            for name, arr in st.items():
                arrays[f"{key}_s{st_idx}_{name}"] = arr
        arrays[f"{key}_pmf"] = inst.pmf_counts
        arrays[f"{key}_alm"] = inst.arrival_log_moments
        arrays[f"{key}_slm"] = inst.service_log_moments
        meta_rows.append(
            {
                "index": inst.index,
                "split": split,
                "seed": inst.seed,
                "spec_hash": inst.spec_hash,
                "covariates1": inst.covariates1,
                "covariates2": inst.covariates2,
            }
        )
    write_blob(
        path,
        arrays,
        meta={
            "format": "tandemflow-simcache",
            "version": 1,
            "instances": meta_rows,
            "n_arrivals": cfg.n_arrivals,
            "delta": cfg.delta,
        },
    )


def load_stats_cache(path):
    arrays, meta = read_blob(path)
    if meta.get("format") != "tandemflow-simcache":
        raise SchemaError(f"{path}: not a simulation cache")
    stat_names = ("meta", "pow_sums", "head", "tail", "cross")
    instances = []
    for row in meta["instances"]:
        key = f"i{row['index']:06d}"
        stats = []
        for st_idx in range(2):
            stats.append(
                {name: arrays[f"{key}_s{st_idx}_{name}"] for name in stat_names}
            )
        instances.append(
            {
                "meta": row,
                "dep_stats": stats,
                "pmf_counts": arrays[f"{key}_pmf"],
                "arrival_log_moments": arrays[f"{key}_alm"],
                "service_log_moments": arrays[f"{key}_slm"],
            }
        )
    return instances, meta


def records_from_cache(instances: list, dims: DescriptorDims, L: int, delta: float,
                       n_arrivals: int):
    """Role records at any dims within the cache's sufficient statistics."""
    rows = {role: [] for role in ROLES}
    for inst in instances:
        fake = InstanceResult(
            index=inst["meta"]["index"],
            spec_hash=inst["meta"]["spec_hash"],
            seed=inst["meta"]["seed"],
            arrival_ph={},
            service_phs=[],
            arrival_log_moments=inst["arrival_log_moments"],
            service_log_moments=inst["service_log_moments"],
            dep_stats=inst["dep_stats"],
            pmf_counts=inst["pmf_counts"],
            covariates1=inst["meta"]["covariates1"],
            covariates2=inst["meta"]["covariates2"],
            rejections=0,
        )
        r1, r2, r3 = _records_for_instance(
            fake, dims, L, delta, inst["meta"]["split"], n_arrivals
        )
        rows["nn1"].append(r1)
        rows["nn2"].append(r2)
        rows["nn3"].append(r3)
    return rows


# ---------------------------------------------------------------------------
# Dataset loading and training glue


def load_role_dataset(path, splits=("train", "val", "test")):
    """Feature/label arrays per split plus header and covariates."""
    header, rows = read_jsonl(path, expect_format=DATASET_FORMAT)
    out = {}
    for split in splits:
        sel = [r for r in rows if r["split"] == split]
        x = np.array([r["input"] for r in sel], dtype=float)
        y = np.array([r["label"] for r in sel], dtype=float)
        cov = [r["covariates"] for r in sel]
        out[split] = {"x": x, "y": y, "covariates": cov}
    return header, out


def train_role(header, splits, role: str, config: nn.TrainConfig,
               loss_mode: str = "mean"):
    """Train one role model on a loaded dataset."""
    dims = DescriptorDims(*header["dims"])
    head = "softmax" if role == "nn2" else "identity"
    meta = {
        "role": role,
        "dims": header["dims"],
        "L": header["L"],
        "loss_mode": loss_mode,
        "seed": config.seed,
    }
    model, curves = nn.train(
        (splits["train"]["x"], splits["train"]["y"]),
        (splits["val"]["x"], splits["val"]["y"]),
        config,
        head=head,
        dims=dims,
        loss_mode=loss_mode,
        meta=meta,
    )
    return model, curves


# ---------------------------------------------------------------------------
# Model bundle and the inference chain


@dataclass(eq=False)
class ModelBundle:
    """The three trained networks plus the shared wire-format constants."""

    nn1: nn.MlpModel
    nn2: nn.MlpModel
    nn3: nn.MlpModel
    dims: DescriptorDims
    L: int

    def __post_init__(self):
        desc = self.dims.vector_length
        if self.nn1.output_dim != desc or self.nn3.output_dim != desc:
            raise ValueError("descriptor head sizes disagree with dims")
        if self.nn2.input_dim != desc + self.dims.n:
            raise ValueError("pmf network input does not fit descriptor + service moments")
        if self.nn3.input_dim != self.nn2.input_dim:
            raise ValueError("nn2/nn3 input sizes disagree")
        if self.nn1.input_dim != 2 * self.dims.n:
            raise ValueError("nn1 input must be arrival + service moments")
        if self.nn2.output_dim != self.L:
            raise ValueError("pmf head size disagrees with L")

    def save(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for role in ROLES:
            nn.save_model(getattr(self, role), out / f"{role}.tfm")
        from .artifacts import write_json

        write_json(
            out / "bundle.json",
            {
                "format": "tandemflow-bundle",
                "version": 1,
                "dims": [self.dims.n, self.dims.n1, self.dims.n2],
                "L": self.L,
            },
        )

    @classmethod
    def load(cls, bundle_dir) -> "ModelBundle":
        from .artifacts import read_json

        bdir = Path(bundle_dir)
        info = read_json(bdir / "bundle.json")
        if info.get("format") != "tandemflow-bundle":
            raise SchemaError(f"{bundle_dir}: not a model bundle")
        models = {role: nn.load_model(bdir / f"{role}.tfm") for role in ROLES}
        return cls(
            nn1=models["nn1"],
            nn2=models["nn2"],
            nn3=models["nn3"],
            dims=DescriptorDims(*info["dims"]),
            L=info["L"],
        )


@dataclass
class StationPrediction:
    station: int
    pmf: QueuePmf | None
    descriptor: DepartureDescriptor | None
    mean_occupancy: float | None
    mean_wait: float | None


def _clip_descriptor(vec: np.ndarray, dims: DescriptorDims) -> np.ndarray:
    """Project a raw network output onto the valid descriptor space."""
    out = vec.copy()
    out[dims.n :] = np.clip(out[dims.n :], -1.0, 1.0)
    return out


def infer_tandem(bundle: ModelBundle, arrival_log_moments,
                 service_log_moments_list) -> list:
    """Chain the three networks through an m-station tandem.

    One renewal-input descriptor call for station 1, then alternating
    PMF and descriptor calls downstream; the final station needs no
    departure descriptor. Waits come from Little's law at throughput 1.
    """
    dims = bundle.dims
    arr = np.asarray(arrival_log_moments, dtype=float)
    services = [np.asarray(s, dtype=float) for s in service_log_moments_list]
    if len(services) < 2:
        raise ValueError("the chain needs at least two stations")
    if arr.shape[0] != dims.n or any(s.shape[0] != dims.n for s in services):
        raise ValueError(f"moment vectors must have length {dims.n}")

    m = len(services)
    desc_vec = _clip_descriptor(
        nn.forward(bundle.nn1, np.concatenate([arr, services[0]])), dims
    )
    out = [
        StationPrediction(
            station=1,
            pmf=None,
            descriptor=DepartureDescriptor.from_vector(desc_vec, dims),
            mean_occupancy=None,
            mean_wait=None,
        )
    ]
    for j in range(2, m + 1):
        x = np.concatenate([desc_vec, services[j - 1]])
        probs = nn.forward(bundle.nn2, x)
        pmf = QueuePmf(probs, bundle.L, 0.0, 0.0, False)
        occ = mean_from_pmf(probs)
        desc = None
        if j < m:
            desc_vec = _clip_descriptor(nn.forward(bundle.nn3, x), dims)
            desc = DepartureDescriptor.from_vector(desc_vec, dims)
        out.append(
            StationPrediction(
                station=j,
                pmf=pmf,
                descriptor=desc,
                mean_occupancy=occ,
                mean_wait=wait_from_little(occ, 1.0),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Classical two-moment decomposition baseline


def _klb_wait(rho: float, mean_service: float, ca2: float, cs2: float) -> float:
    """GI/G/1 mean queueing delay (Kraemer/Langenbach-Belz refinement)."""
    if rho >= 1.0:
        raise UnstableSystemError(f"utilization {rho} >= 1")
    base = rho * mean_service / (1.0 - rho) * (ca2 + cs2) / 2.0
    if ca2 <= 1.0:
        g = math.exp(-(2.0 * (1.0 - rho) / (3.0 * rho)) * (1.0 - ca2) ** 2 / (ca2 + cs2))
    else:
        g = math.exp(-(1.0 - rho) * (ca2 - 1.0) / (ca2 + 4.0 * cs2))
    return base * g


def qna_baseline(arrival_scv: float, service_scv_list, service_means) -> list:
    """Station-by-station SCV propagation with KLB mean waits.

    The departure SCV linking is cd2 = rho^2 cs2 + (1 - rho^2) ca2;
    occupancies follow from Little's law at throughput 1.
    """
    scvs = list(service_scv_list)
    means = list(service_means)
    if len(scvs) != len(means):
        raise ValueError("need one SCV per service mean")
    ca2 = float(arrival_scv)
    out = []
    for cs2, mean_service in zip(scvs, means):
        rho = mean_service  # throughput fixed at the external rate 1
        wq = _klb_wait(rho, mean_service, ca2, cs2)
        sojourn = wq + mean_service
        cd2 = rho * rho * cs2 + (1.0 - rho * rho) * ca2
        out.append(
            {
                "utilization": rho,
                "arrival_scv": ca2,
                "queue_wait": wq,
                "mean_wait": sojourn,
                "mean_occupancy": sojourn,  # throughput 1
                "departure_scv": cd2,
            }
        )
        ca2 = cd2
    return out


# ---------------------------------------------------------------------------
# Benchmark harness


def _lognormal_moments(mean: float, scv: float) -> tuple:
    m2 = (1.0 + scv) * mean * mean
    m3 = mean**3 * (1.0 + scv) ** 3
    return mean, m2, m3


def _gamma_moments(mean: float, scv: float) -> tuple:
    m2 = (1.0 + scv) * mean * mean
    m3 = mean**3 * (1.0 + scv) * (1.0 + 2.0 * scv)
    return mean, m2, m3


def menu_distribution(name: str, mean: float = 1.0) -> PhaseType:
    """Benchmark distribution menu as phase-type surrogates.

    Non-PH entries (lognormal, gamma) are represented by moment-matched
    chains: three moments via a two-branch hyperexponential when SCV > 1,
    two moments via an Erlang mixture otherwise.
    """
    if name == "M":
        return exponential(1.0 / mean)
    if name == "E4":
        return erlang(4, 4.0 / mean)
    if name == "H2(4)":
        return hyperexp_balanced(4.0, mean)
    if name == "LN(0.25)":
        return mixed_erlang_fit(0.25, mean)
    if name == "LN(4)":
        return hyperexp_fit3(*_lognormal_moments(mean, 4.0))
    if name == "G(4)":
        return hyperexp_fit3(*_gamma_moments(mean, 4.0))
    if name == "D":  # near-deterministic: SCV floor of the trained regime
        return erlang(1000, 1000.0 / mean)
    if name == "H2(8)":
        return hyperexp_balanced(8.0, mean)
    raise ValueError(f"unknown menu distribution {name!r}")


GRID_ARRIVALS = ("E4", "LN(4)")
GRID_SERVICES_1 = ("E4", "LN(0.25)", "M", "H2(4)", "LN(4)", "G(4)")
GRID_SERVICES_2 = ("E4", "LN(4)")
GRID_RHO_1 = (0.7, 0.9)
GRID_RHO_2 = tuple(round(0.11 + 0.05 * i, 2) for i in range(18))

MENU_SCV = {
    "M": 1.0,
    "E4": 0.25,
    "H2(4)": 4.0,
    "LN(0.25)": 0.25,
    "LN(4)": 4.0,
    "G(4)": 4.0,
    "D": 0.001,
    "H2(8)": 8.0,
}


def two_station_grid() -> list:
    """All 864 scenario definitions of the 2-station comparison grid."""
    out = []
    for gi1 in GRID_ARRIVALS:
        for gi2 in GRID_SERVICES_1:
            for gi3 in GRID_SERVICES_2:
                for rho1 in GRID_RHO_1:
                    for rho2 in GRID_RHO_2:
                        out.append(
                            {
                                "arrival": gi1,
                                "service1": gi2,
                                "service2": gi3,
                                "rho1": rho1,
                                "rho2": rho2,
                            }
                        )
    return out


def suresh_whitt_layout() -> list:
    """Nine exponential stations: eight at utilization 0.6, the last at 0.9."""
    rhos = [0.6] * 8 + [0.9]
    return [
        {"arrival": "D", "rhos": rhos},
        {"arrival": "H2(8)", "rhos": rhos},
    ]


def _scenario_spec(scn: dict) -> TandemSpec:
    arrival = menu_distribution(scn["arrival"])
    if "rhos" in scn:
        services = tuple(exponential(1.0 / r) for r in scn["rhos"])
    else:
        services = (
            menu_distribution(scn["service1"], scn["rho1"]),
            menu_distribution(scn["service2"], scn["rho2"]),
        )
    return TandemSpec(arrival, services)


def _scenario_truth(args) -> list:
    scn, sim_budget, warmup_fraction, seed = args
    spec = _scenario_spec(scn)
    sim = simulate_tandem(spec, sim_budget, warmup_fraction, seed)
    return [sim.mean_occupancy(j) for j in range(spec.m)]


def run_benchmark_scenario(scn: dict, bundle: ModelBundle | None, sim_budget: int,
                           seed: int, warmup_fraction: float = 0.1,
                           truth: list | None = None) -> dict:
    """Simulated truth vs the network chain vs the SCV baseline.

    Both predictors are scored against the same simulation realization;
    waits are mean sojourn times per station (Little's law, rate 1).
    """
    spec = _scenario_spec(scn)
    if truth is None:
        truth = _scenario_truth((scn, sim_budget, warmup_fraction, seed))
    svc_means = [float(ph_moments(s, 1)[0]) for s in spec.services]
    svc_scvs = [ph_scv(s) for s in spec.services]
    qna = qna_baseline(ph_scv(spec.arrival), svc_scvs, svc_means)
    row = dict(scn)
    row["truth_wait"] = truth  # sojourn = occupancy at throughput 1
    row["qna_wait"] = [st["mean_wait"] for st in qna]
    if bundle is not None:
        n = bundle.dims.n
        arr_lm = np.log(ph_moments(spec.arrival, n))
        svc_lm = [np.log(ph_moments(s, n)) for s in spec.services]
        chain = infer_tandem(bundle, arr_lm, svc_lm)
        nn_wait = [None] + [p.mean_wait for p in chain[1:]]
        row["nn_wait"] = nn_wait
        row["nn_mape"] = [
            abs(truth[j] - nn_wait[j]) / truth[j] * 100.0 for j in range(1, spec.m)
        ]
    row["qna_mape"] = [
        abs(truth[j] - row["qna_wait"][j]) / truth[j] * 100.0 for j in range(1, spec.m)
    ]
    return row


def benchmark_suite(name: str, bundle: ModelBundle | None, sim_budget: int,
                    seed: int = 0, max_scenarios: int | None = None,
                    threads: int = 1, progress=None) -> dict:
    """Run a named benchmark and aggregate per-scenario wait errors."""
    if name == "two-station-grid":
        scenarios = two_station_grid()
    elif name == "suresh-whitt-9":
        scenarios = suresh_whitt_layout()
    else:
        raise ValueError(f"unknown suite {name!r}")
    if max_scenarios is not None:
        scenarios = scenarios[:max_scenarios]
    seeds = [
        int(s.generate_state(1)[0])
        for s in np.random.SeedSequence(seed).spawn(len(scenarios))
    ]
    jobs = [(scn, sim_budget, 0.1, seeds[i]) for i, scn in enumerate(scenarios)]
    truths = []
    if threads > 1:
        # simulations dominate the cost and are independent; merge by index
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for truth in pool.map(_scenario_truth, jobs, chunksize=4):
                truths.append(truth)
                if progress:
                    progress(len(truths), len(scenarios))
    else:
        for job in jobs:
            truths.append(_scenario_truth(job))
            if progress:
                progress(len(truths), len(scenarios))
    rows = [
        run_benchmark_scenario(scn, bundle, sim_budget, seeds[i], truth=truths[i])
        for i, scn in enumerate(scenarios)
    ]
    result = {
        "suite": name,
        "total_defined": len(two_station_grid()) if name == "two-station-grid" else 2,
        "scenarios": rows,
    }
    if name == "two-station-grid":
        result["groups"] = _grid_groups(rows)
    return result


def _grid_groups(rows: list) -> list:
    """Aggregate grid scenarios into rho1 x rho2-bin x SCV-class cells."""
    edges = (0.0, 0.25, 0.5, 0.75, 1.0)
    cells = {}
    for row in rows:
        rho2_bin = min(int(np.searchsorted(edges, row["rho2"], side="right")) - 1, 3)
        key = (
            row["rho1"],
            rho2_bin,
            int(MENU_SCV[row["arrival"]] >= 4.0),
            int(MENU_SCV[row["service1"]] >= 4.0),
            int(MENU_SCV[row["service2"]] >= 4.0),
        )
        cells.setdefault(key, []).append(row)
    out = []
    for key in sorted(cells):
        group = cells[key]
        entry = {
            "rho1": key[0],
            "rho2_lb": edges[key[1]],
            "rho2_ub": edges[key[1] + 1],
            "arrival_scv": "high" if key[2] else "low",
            "service1_scv": "high" if key[3] else "low",
            "service2_scv": "high" if key[4] else "low",
            "count": len(group),
            "qna_mape": float(np.mean([g["qna_mape"][-1] for g in group])),
        }
        if "nn_mape" in group[0]:
            entry["nn_mape"] = float(np.mean([g["nn_mape"][-1] for g in group]))
        out.append(entry)
    return out


# ---------------------------------------------------------------------------
# Descriptor-dims sweep


def sweep_dims(cache_instances: list, cells: list, train_config: nn.TrainConfig,
               L: int, delta: float, n_arrivals: int, progress=None) -> dict:
    """Validation SAE of the PMF network per (n, n1, n2) cell.

    All cells consume the same cached simulations, so differences come
    only from the descriptor dims. Emits the two standard data series:
    SAE against n (at n1=n2=2 where available) and SAE against (n1, n2)
    at n=5, including the no-autocorrelation point.
    """
    from .metrics import sae as sae_metric

    table = []
    for idx, (n, n1, n2) in enumerate(cells):
        dims = DescriptorDims(n, n1, n2)
        rows = records_from_cache(cache_instances, dims, L, delta, n_arrivals)["nn2"]
        tr = [r for r in rows if r["split"] == "train"]
        va = [r for r in rows if r["split"] == "val"]
        x = np.array([r["input"] for r in tr])
        y = np.array([r["label"] for r in tr])
        xv = np.array([r["input"] for r in va])
        yv = np.array([r["label"] for r in va])
        model, curves = nn.train(
            (x, y), (xv, yv), train_config, head="softmax", dims=dims
        )
        val_sae = sae_metric(yv, nn.forward(model, xv))
        table.append({"n": n, "n1": n1, "n2": n2, "val_sae": float(val_sae)})
        if progress:
            progress(idx + 1, len(cells))
    series_n = [row for row in table if (row["n1"], row["n2"]) == (2, 2)]
    series_ac = [row for row in table if row["n"] == 5]
    return {"cells": table, "sae_vs_n": series_n, "sae_vs_autocorr": series_ac}
