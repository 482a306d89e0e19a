"""Seedable simulation of single-server FIFO tandem lines.

For an infinite-buffer FIFO tandem the event-driven dynamics collapse to
the departure recursion D_i = max(A_i, D_{i-1}) + S_i per station, which
this module evaluates in vectorized form (prefix sums plus a running
maximum); occupancy statistics come from a time-ordered merge of each
station's arrival and departure epochs. The sample path is identical to
an event-queue execution and bitwise reproducible for a fixed seed.

Statistics are collected over the observation window that starts at the
first post-warmup arrival and ends at the last arrival; occupancy is
time-averaged (area under the sample path), not arrival-averaged, since
internal streams are not Poisson.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptors import SeriesStats, DescriptorDims
from .errors import UnstableSystemError
from .phdist import PhaseType, draw_variates, ph_mean

_MEAN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TandemSpec:
    """External arrival distribution plus one service distribution per station."""

    arrival: PhaseType
    services: tuple

    def __post_init__(self):
        object.__setattr__(self, "services", tuple(self.services))
        if len(self.services) < 1:
            raise ValueError("need at least one station")
        a_mean = ph_mean(self.arrival)
        if abs(a_mean - 1.0) > _MEAN_TOL:
            raise UnstableSystemError(
                f"arrival mean must be 1 (got {a_mean}); rescale the distribution"
            )
        for j, svc in enumerate(self.services):
            rho = ph_mean(svc) / a_mean
            if rho >= 1.0 - _MEAN_TOL:
                raise UnstableSystemError(
                    f"station {j + 1} utilization {rho:.4f} is not stable"
                )

    @property
    def m(self) -> int:
        return len(self.services)

    def to_json_dict(self) -> dict:
        return {
            "arrival": self.arrival.to_json_dict(),
            "services": [s.to_json_dict() for s in self.services],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TandemSpec":
        return cls(
            PhaseType.from_json_dict(d["arrival"]),
            tuple(PhaseType.from_json_dict(s) for s in d["services"]),
        )


@dataclass(frozen=True, eq=False)
class SimResult:
    """Post-warmup labeling material for one simulation run.

    departures[j] holds inter-departure times of station j+1 (customer
    indices past the warmup count); pmf_counts[j] is the time-weighted
    occupancy histogram over the observation window, so its entries sum
    to ``sim_time``.
    """

    departures: tuple      # per station: np.ndarray of inter-departure times
    pmf_counts: tuple      # per station: np.ndarray of dwell time per level
    busy_time: tuple       # per station: float
    arrivals_seen: int
    sim_time: float        # observation window length
    seed: int

    def mean_occupancy(self, station: int) -> float:
        w = self.pmf_counts[station]
        return float(np.arange(w.size) @ w / w.sum())

    def utilization(self, station: int) -> float:
        return self.busy_time[station] / self.sim_time


def _departure_epochs(arrivals: np.ndarray, services: np.ndarray) -> np.ndarray:
    # D_i = max_{k<=i}(A_k + sum_{j=k..i} S_j), via prefix sums + running max
    ss = np.cumsum(services)
    return ss + np.maximum.accumulate(arrivals - (ss - services))


def _occupancy_histogram(arr, dep, t0, t1):
    """Time-weighted level histogram over [t0, t1].

    All events are kept but clipped to the window, so pre-window events
    establish the level at t0 with zero dwell.
    """
    times = np.concatenate([arr, dep])
    deltas = np.concatenate(
        [np.ones(arr.size, dtype=np.int64), -np.ones(dep.size, dtype=np.int64)]
    )
    # chronological order; stability puts arrivals before departures on
    # ties (arrival block comes first), and the two pre-sorted runs make
    # this near-linear
    order = np.argsort(times, kind="stable")
    level = np.cumsum(deltas[order])
    ts = np.clip(times[order], t0, t1)
    dwell = np.diff(np.concatenate([ts, [t1]]))
    np.clip(dwell, 0.0, None, out=dwell)
    # level-0 span from t0 to the first in-window event
    lead = ts[0] - t0 if ts.size else t1 - t0
    hist = np.bincount(level, weights=dwell)
    hist[0] += max(lead, 0.0)
    return hist


def simulate_tandem(
    spec: TandemSpec,
    n_arrivals: int,
    warmup_fraction: float = 0.1,
    seed: int = 0,
) -> SimResult:
    """Run the tandem for ``n_arrivals`` customers and collect labels.

    One RNG substream drives the arrival process and one each service
    process, all derived from the master seed, so identical inputs give
    bitwise-identical results at any worker-pool size.
    """
    if n_arrivals < 1000:
        raise ValueError("need at least 1000 arrivals for meaningful statistics")
    if not 0.0 <= warmup_fraction < 1.0:
        raise ValueError("warmup_fraction must be in [0, 1)")
    streams = [
        np.random.default_rng(s)
        for s in np.random.SeedSequence(seed).spawn(1 + spec.m)
    ]
    inter = draw_variates(spec.arrival, n_arrivals, streams[0])
    arrivals = np.cumsum(inter)
    warm = int(np.floor(warmup_fraction * n_arrivals))
    t0 = arrivals[warm] if warm > 0 else 0.0
    t1 = arrivals[-1]

    departures = []
    pmf_counts = []
    busy = []
    upstream = arrivals
    for j, svc in enumerate(spec.services):
        service = draw_variates(svc, n_arrivals, streams[1 + j])
        dep = _departure_epochs(upstream, service)
        departures.append(np.diff(dep[warm:]))
        pmf_counts.append(_occupancy_histogram(upstream, dep, t0, t1))
        starts = dep - service
        overlap = np.minimum(dep, t1) - np.maximum(starts, t0)
        busy.append(float(np.clip(overlap, 0.0, None).sum()))
        upstream = dep

    return SimResult(
        departures=tuple(departures),
        pmf_counts=tuple(pmf_counts),
        busy_time=tuple(busy),
        arrivals_seen=n_arrivals,
        sim_time=float(t1 - t0),
        seed=seed,
    )


# quantities tracked by the replication study
CI_MOMENTS = 5
CI_PMF_LEVELS = 5


def replicate_ci(
    spec: TandemSpec,
    reps: int,
    n_arrivals: int,
    seed: int = 0,
    warmup_fraction: float = 0.1,
    seeds=None,
) -> dict:
    """95% CI lengths across independent replications.

    Covers departure moments 1..5 and the first-lag linear
    autocorrelation per station, plus P(0..4) and the mean occupancy at
    station 2. CI length is 2 * 1.96 * std / sqrt(reps). Explicit
    ``seeds`` override the derived per-replication streams.
    """
    if reps < 2:
        raise ValueError("need at least two replications")
    if spec.m < 2:
        raise ValueError("the replication study tracks station-2 quantities")
    if seeds is None:
        seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(reps)]
    if len(seeds) != reps:
        raise ValueError("len(seeds) must equal reps")

    moments = np.empty((reps, spec.m, CI_MOMENTS))
    rho1 = np.empty((reps, spec.m))
    probs = np.empty((reps, CI_PMF_LEVELS))
    mean_occ = np.empty(reps)
    dims = DescriptorDims(n=CI_MOMENTS, n1=1, n2=1)
    for r, s in enumerate(seeds):
        res = simulate_tandem(spec, n_arrivals, warmup_fraction, int(s))
        for j in range(spec.m):
            stats = SeriesStats(res.departures[j], dims)
            moments[r, j] = stats.moments(CI_MOMENTS)
            rho1[r, j] = stats.autocorr(1, 1, 1)
        w = res.pmf_counts[1]
        pl = np.zeros(CI_PMF_LEVELS)
        lv = min(CI_PMF_LEVELS, w.size)
        pl[:lv] = w[:lv] / w.sum()
        probs[r] = pl
        mean_occ[r] = res.mean_occupancy(1)

    def ci(sample, axis=0):
        return 2.0 * 1.96 * sample.std(axis=axis, ddof=1) / np.sqrt(reps)

    return {
        "departure_moments": ci(moments),      # (m, 5)
        "rho111": ci(rho1),                    # (m,)
        "pmf_levels": ci(probs),               # (5,)
        "mean_occupancy": float(ci(mean_occ)),
        "reps": reps,
        "n_arrivals": n_arrivals,
        "seeds": list(map(int, seeds)),
    }
