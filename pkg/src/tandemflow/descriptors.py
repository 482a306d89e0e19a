"""Learning targets from raw simulation output.

Inter-departure series are summarized by log raw moments plus polynomial
lag autocorrelations; queue-length sample paths become truncated PMFs
with a lumped tail. The descriptor vector layout is fixed: n log-moments
first, then autocorrelations in lexicographic (lag, power1, power2)
order. This ordering is the wire format shared by datasets, models and
the inference chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroVarianceError


@dataclass(frozen=True)
class DescriptorDims:
    """Moment count n, max autocorrelation lag n1, max polynomial degree n2."""

    n: int = 5
    n1: int = 2
    n2: int = 2

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two moments")
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError("lags and degrees must be nonnegative")

    @property
    def autocorr_keys(self) -> list[tuple[int, int, int]]:
        return [
            (k, a1, a2)
            for k in range(1, self.n1 + 1)
            for a1 in range(1, self.n2 + 1)
            for a2 in range(1, self.n2 + 1)
        ]

    @property
    def vector_length(self) -> int:
        return self.n + self.n1 * self.n2 * self.n2


@dataclass(frozen=True, eq=False)
class DepartureDescriptor:
    """n log-moments plus the polynomial lag-autocorrelation block."""

    log_moments: np.ndarray
    autocorr: dict  # (k, a1, a2) -> value
    dims: DescriptorDims

    def vector(self) -> np.ndarray:
        ac = [self.autocorr[key] for key in self.dims.autocorr_keys]
        return np.concatenate([self.log_moments, np.array(ac)])

    @classmethod
    def from_vector(cls, vec, dims: DescriptorDims) -> "DepartureDescriptor":
        vec = np.asarray(vec, dtype=float)
        if vec.shape[0] != dims.vector_length:
            raise ValueError(
                f"vector length {vec.shape[0]} != {dims.vector_length} for dims {dims}"
            )
        ac = dict(zip(dims.autocorr_keys, vec[dims.n :]))
        return cls(vec[: dims.n].copy(), ac, dims)


def estimate_moments(series, n: int) -> np.ndarray:
    """Log of the first n sample raw moments.

    Accumulation runs in extended precision: high powers of heavy-tailed
    samples square the dynamic range.
    """
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("empty series")
    if np.any(x <= 0):
        raise ValueError("series must be strictly positive")
    out = np.empty(n)
    powered = np.ones_like(x)
    for i in range(1, n + 1):
        powered = powered * x
        out[i - 1] = float(np.log(np.sum(powered, dtype=np.longdouble) / x.size))
    return out


def estimate_autocorr(series, k: int, a1: int, a2: int) -> float:
    """Correlation between x_t^a1 and x_{t-k}^a2 over the lag-k pair window.

    Plain Pearson correlation of the (N-k) aligned pairs; the shared
    normalization cancels, so the value is guaranteed to lie in [-1, 1].
    """
    x = np.asarray(series, dtype=float)
    if k < 1:
        raise ValueError("lag must be >= 1")
    if x.size <= k + 1:
        raise ValueError(f"series of length {x.size} too short for lag {k}")
    u = x[k:] ** a1
    v = x[: x.size - k] ** a2
    du = u - u.mean()
    dv = v - v.mean()
    vu = float(du @ du)
    vv = float(dv @ dv)
    scale = max(float(np.abs(u).max()), float(np.abs(v).max()), 1.0)
    if vu <= (1e-12 * scale) ** 2 * u.size or vv <= (1e-12 * scale) ** 2 * v.size:
        raise ZeroVarianceError(
            f"powered series (a1={a1}, a2={a2}) is near-constant at lag {k}"
        )
    return float(du @ dv) / np.sqrt(vu * vv)


class SeriesStats:
    """Sufficient statistics for descriptors at any dims within a cap.

    Stores power sums, lagged cross sums and the few boundary values
    needed to reconstruct moments and pair-window autocorrelations, so a
    cached simulation can be re-summarized for different (n, n1, n2)
    without keeping the raw series.
    """

    def __init__(self, series, max_dims: DescriptorDims | None = None):
        x = np.asarray(series, dtype=float)
        if np.any(x <= 0):
            raise ValueError("series must be strictly positive")
        dims = max_dims or DescriptorDims()
        self.max_n = max(dims.n, 2 * dims.n2)
        self.max_lag = dims.n1
        self.max_deg = dims.n2
        self.count = int(x.size)
        if x.size <= self.max_lag + 1:
            raise ValueError("series too short for the requested lags")
        powers = {0: np.ones_like(x)}
        for a in range(1, max(self.max_n, 2 * self.max_deg) + 1):
            powers[a] = powers[a - 1] * x
        top = max(self.max_n, 2 * self.max_deg)
        self.pow_sums = np.array(
            [float(np.sum(powers[a], dtype=np.longdouble)) for a in range(1, top + 1)]
        )
        self.head = x[: self.max_lag].copy()
        self.tail = x[x.size - self.max_lag :].copy() if self.max_lag else x[:0].copy()
        self.cross = {}
        for k in range(1, self.max_lag + 1):
            for a1 in range(1, self.max_deg + 1):
                for a2 in range(1, self.max_deg + 1):
                    self.cross[(k, a1, a2)] = float(
                        powers[a1][k:] @ powers[a2][: x.size - k]
                    )

    def _pow_sum(self, a: int) -> float:
        return self.pow_sums[a - 1]

    def moments(self, n: int) -> np.ndarray:
        if n > self.max_n:
            raise ValueError(f"stats only cover moments up to {self.max_n}")
        return np.array([self._pow_sum(a) / self.count for a in range(1, n + 1)])

    def log_moments(self, n: int) -> np.ndarray:
        return np.log(self.moments(n))

    def autocorr(self, k: int, a1: int, a2: int) -> float:
        if k > self.max_lag or max(a1, a2) > self.max_deg:
            raise ValueError("requested lag/degree beyond what the stats cover")
        m = self.count - k
        su = self._pow_sum(a1) - float(np.sum(self.head[:k] ** a1))
        sv = self._pow_sum(a2) - float(np.sum(self.tail[self.max_lag - k :] ** a2))
        suu = self._pow_sum(2 * a1) - float(np.sum(self.head[:k] ** (2 * a1)))
        svv = self._pow_sum(2 * a2) - float(np.sum(self.tail[self.max_lag - k :] ** (2 * a2)))
        cov = self.cross[(k, a1, a2)] - su * sv / m
        vu = suu - su * su / m
        vv = svv - sv * sv / m
        scale = max(abs(su / m), abs(sv / m), 1.0)
        if vu <= (1e-12 * scale) ** 2 * m or vv <= (1e-12 * scale) ** 2 * m:
            raise ZeroVarianceError(
                f"powered series (a1={a1}, a2={a2}) is near-constant at lag {k}"
            )
        return cov / np.sqrt(vu * vv)

    def descriptor(self, dims: DescriptorDims) -> DepartureDescriptor:
        ac = {key: self.autocorr(*key) for key in dims.autocorr_keys}
        return DepartureDescriptor(self.log_moments(dims.n), ac, dims)

    def to_arrays(self) -> dict:
        """Flat array form for binary caching."""
        keys = sorted(self.cross)
        return {
            "meta": np.array(
                [self.count, self.max_n, self.max_lag, self.max_deg], dtype=np.int64
            ),
            "pow_sums": self.pow_sums,
            "head": self.head,
            "tail": self.tail,
            "cross": np.array([self.cross[k] for k in keys]),
        }

    @classmethod
    def from_arrays(cls, arrays: dict) -> "SeriesStats":
        obj = cls.__new__(cls)
        count, max_n, max_lag, max_deg = (int(v) for v in arrays["meta"])
        obj.count = count
        obj.max_n = max_n
        obj.max_lag = max_lag
        obj.max_deg = max_deg
        obj.pow_sums = np.asarray(arrays["pow_sums"], dtype=float)
        obj.head = np.asarray(arrays["head"], dtype=float)
        obj.tail = np.asarray(arrays["tail"], dtype=float)
        keys = [
            (k, a1, a2)
            for k in range(1, max_lag + 1)
            for a1 in range(1, max_deg + 1)
            for a2 in range(1, max_deg + 1)
        ]
        keys.sort()
        obj.cross = dict(zip(keys, np.asarray(arrays["cross"], dtype=float)))
        return obj


def build_descriptor(series, dims: DescriptorDims) -> DepartureDescriptor:
    """Full descriptor of an inter-departure series at the given dims."""
    return SeriesStats(series, dims).descriptor(dims)


@dataclass(frozen=True, eq=False)
class QueuePmf:
    """Truncated stationary queue-length distribution with a lumped tail.

    ``probs[L-1]`` carries all mass at levels >= L-1. ``tail_mass`` is
    the pre-lumping probability of levels beyond L-1; ``tail_flag`` is
    set when it exceeds ``delta``.
    """

    probs: np.ndarray
    L: int
    delta: float
    tail_mass: float
    tail_flag: bool

    def mean(self) -> float:
        return float(np.arange(self.L) @ self.probs)


def build_pmf(pmf_counts, L: int, delta: float = 1e-3) -> QueuePmf:
    """Normalize an occupancy histogram and lump mass at levels >= L-1."""
    counts = np.asarray(pmf_counts, dtype=float)
    if counts.size == 0 or np.any(counts < 0) or counts.sum() <= 0:
        raise ValueError("histogram must be nonnegative with positive total weight")
    probs = counts / counts.sum()
    if probs.size >= L:
        tail_mass = float(probs[L:].sum())
        out = np.zeros(L)
        out[: L - 1] = probs[: L - 1]
        out[L - 1] = probs[L - 1 :].sum()
    else:
        tail_mass = 0.0
        out = np.zeros(L)
        out[: probs.size] = probs
    return QueuePmf(out, L, delta, tail_mass, tail_mass > delta)


@dataclass(frozen=True, eq=False)
class IdcCurve:
    """Index of dispersion for counts over a time grid."""

    t_grid: np.ndarray
    values: np.ndarray
    rate: float


def estimate_idc(event_times, t_grid) -> IdcCurve:
    """Variance-to-mean ratio of window counts, per grid point.

    Uses non-overlapping windows: for each t the horizon is chopped into
    floor(horizon/t) windows and the count variance is divided by
    rate*t. Grid points above horizon/10 are rejected (too few windows).
    """
    times = np.asarray(event_times, dtype=float)
    grid = np.asarray(t_grid, dtype=float)
    if times.size < 2:
        raise ValueError("need at least two events")
    horizon = float(times[-1])
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("t_grid must be increasing and positive")
    if np.any(grid > horizon / 10.0):
        raise ValueError("grid points beyond horizon/10 leave too few windows")
    rate = times.size / horizon
    values = np.empty(grid.size)
    for i, t in enumerate(grid):
        nwin = int(horizon / t)
        edges = np.arange(1, nwin + 1) * t
        cum = np.searchsorted(times, edges, side="right")
        counts = np.diff(np.concatenate([[0], cum]))
        values[i] = counts.var(ddof=1) / (rate * t)
    return IdcCurve(grid, values, rate)
