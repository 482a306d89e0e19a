"""Evaluation metrics and grouped accuracy reports.

MAPE for moments and occupancy means, MAE for autocorrelations (their
small magnitudes make percentage errors misleading), SAE for PMF
batches, and percentile errors with CDF inversion. Reports aggregate
per utilization/SCV group or per first-lag-autocorrelation bin and are
emitted as CSV plus a JSON metadata sidecar.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

PERCENTILES = (25.0, 50.0, 75.0, 90.0, 99.0, 99.9)
SCV_SPLIT = 4.0  # low/high threshold for SCV grouping
UTIL_EDGES = (0.0, 0.25, 0.5, 0.75, 1.0)
AUTOCORR_EDGES = (-0.5, -0.25, 0.0, 0.25, 0.5)


def mape(truth, pred) -> float:
    """Mean absolute percentage error; zero-truth entries are excluded.

    Exclusion (rather than failure) keeps percentile errors well-defined
    when the true percentile is 0; callers needing the exclusion count
    use ``mape_detail``.
    """
    value, _ = mape_detail(truth, pred)
    return value


def mape_detail(truth, pred) -> tuple[float, int]:
    t = np.asarray(truth, dtype=float)
    p = np.asarray(pred, dtype=float)
    if t.shape != p.shape:
        raise ValueError("truth and prediction must have the same shape")
    keep = t != 0
    excluded = int((~keep).sum())
    if not keep.any():
        return float("nan"), excluded
    return float(np.mean(np.abs((t[keep] - p[keep]) / t[keep])) * 100.0), excluded


def mae(truth, pred) -> float:
    t = np.asarray(truth, dtype=float)
    p = np.asarray(pred, dtype=float)
    if t.shape != p.shape:
        raise ValueError("truth and prediction must have the same shape")
    return float(np.mean(np.abs(t - p)))


def sae(truth_pmfs, pred_pmfs) -> float:
    """Batch mean of the summed absolute PMF differences (bounded by 2)."""
    t = np.atleast_2d(np.asarray(truth_pmfs, dtype=float))
    p = np.atleast_2d(np.asarray(pred_pmfs, dtype=float))
    if t.shape != p.shape:
        raise ValueError("batches must have the same shape")
    return float(np.abs(t - p).sum(axis=1).mean())


def pmf_percentile(pmf, q: float) -> int:
    """Smallest level whose cumulative probability reaches q percent."""
    if not 0.0 < q < 100.0:
        raise ValueError("q must be in (0, 100)")
    probs = np.asarray(pmf, dtype=float)
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, q / 100.0, side="left"))
    return min(idx, probs.size - 1)


def mean_from_pmf(pmf) -> float:
    probs = np.asarray(pmf, dtype=float)
    return float(np.arange(probs.size) @ probs)


def wait_from_little(mean_occupancy: float, throughput: float) -> float:
    """Mean time in system from the mean number in system."""
    if throughput <= 0:
        raise ValueError("throughput must be positive")
    return mean_occupancy / throughput


# ---------------------------------------------------------------------------
# Grouped reports


@dataclass
class EvalRecord:
    """One evaluation item: truth/prediction vectors plus grouping covariates.

    For PMF roles the vectors are queue-length PMFs; for descriptor
    roles they follow the descriptor layout (n log-moments then the
    autocorrelation block).
    """

    role: str                      # "nn1" | "nn2" | "nn3"
    truth: np.ndarray
    pred: np.ndarray
    covariates: dict               # utilization, arrival_scv, service_scv, rho111
    dims: object = None            # DescriptorDims for descriptor roles


@dataclass
class GroupRow:
    bounds: dict
    count: int
    metrics: dict | None


@dataclass
class MetricsReport:
    grouping: str
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols: list[str] = []
        for row in self.rows:
            for key in list(row.bounds) + list(row.metrics or {}):
                if key not in cols:
                    cols.append(key)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["group"] + cols + ["count"])
        for i, row in enumerate(self.rows, start=1):
            data = dict(row.bounds)
            data.update(row.metrics or {})
            writer.writerow(
                [i] + [_fmt(data.get(c)) for c in cols] + [row.count]
            )
        return buf.getvalue()

    def write(self, csv_path):
        with open(csv_path, "w") as fh:
            fh.write(self.to_csv())
        sidecar = str(csv_path) + ".meta.json"
        with open(sidecar, "w") as fh:
            json.dump(
                {"grouping": self.grouping, "meta": self.meta},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _bin_index(value, edges):
    idx = int(np.searchsorted(edges, value, side="right")) - 1
    return min(max(idx, 0), len(edges) - 2)


def _pmf_group_metrics(records: list) -> dict:
    truths = np.array([r.truth for r in records])
    preds = np.array([r.pred for r in records])
    t_means = truths @ np.arange(truths.shape[1])
    p_means = preds @ np.arange(preds.shape[1])
    out = {"mape_mean": mape(t_means, p_means), "sae": sae(truths, preds)}
    for q in PERCENTILES:
        tq = np.array([pmf_percentile(t, q) for t in truths], dtype=float)
        pq = np.array([pmf_percentile(p, q) for p in preds], dtype=float)
        value, excluded = mape_detail(tq, pq)
        out[f"mape_p{q:g}"] = value
        out[f"excluded_p{q:g}"] = excluded
    return out


def _descriptor_group_metrics(records: list) -> dict:
    dims = records[0].dims
    n = dims.n
    truths = np.array([r.truth for r in records])
    preds = np.array([r.pred for r in records])
    out = {}
    for i in range(n):
        # moments are compared on the natural scale, labels store logs
        out[f"mape_m{i + 1}"] = mape(np.exp(truths[:, i]), np.exp(preds[:, i]))
    for j, key in enumerate(dims.autocorr_keys):
        out["mae_rho_%d%d%d" % key] = mae(truths[:, n + j], preds[:, n + j])
    return out


def _group_metrics(records: list) -> dict:
    if records[0].role == "nn2":
        return _pmf_group_metrics(records)
    return _descriptor_group_metrics(records)


def grouped_report(records: list, grouping: str) -> MetricsReport:
    """Aggregate evaluation records into the accuracy-table layout.

    ``util-scv``: four utilization bins of width 0.25 crossed with
    low/high SCV (threshold 4) of the arrival and service processes.
    ``autocorr``: four bins of width 0.25 on the first-lag linear
    autocorrelation of the station's arrival stream.
    """
    if not records:
        raise ValueError("no records to report on")
    report = MetricsReport(grouping=grouping, meta={"total": len(records)})
    if grouping == "util-scv":
        cells = {}
        for rec in records:
            cov = rec.covariates
            key = (
                _bin_index(cov["utilization"], UTIL_EDGES),
                int(cov["arrival_scv"] >= SCV_SPLIT),
                int(cov["service_scv"] >= SCV_SPLIT),
            )
            cells.setdefault(key, []).append(rec)
        for ub in range(len(UTIL_EDGES) - 1):
            for a_hi in (0, 1):
                for s_hi in (0, 1):
                    group = cells.get((ub, a_hi, s_hi), [])
                    bounds = {
                        "util_lb": UTIL_EDGES[ub],
                        "util_ub": UTIL_EDGES[ub + 1],
                        "arrival_scv": "high" if a_hi else "low",
                        "service_scv": "high" if s_hi else "low",
                    }
                    report.rows.append(
                        GroupRow(bounds, len(group), _group_metrics(group) if group else None)
                    )
    elif grouping == "autocorr":
        cells = {}
        for rec in records:
            key = _bin_index(rec.covariates["rho111"], AUTOCORR_EDGES)
            cells.setdefault(key, []).append(rec)
        for b in range(len(AUTOCORR_EDGES) - 1):
            group = cells.get(b, [])
            bounds = {"rho_lb": AUTOCORR_EDGES[b], "rho_ub": AUTOCORR_EDGES[b + 1]}
            report.rows.append(
                GroupRow(bounds, len(group), _group_metrics(group) if group else None)
            )
    else:
        raise ValueError(f"unknown grouping {grouping!r}")
    report.meta["grouped"] = sum(r.count for r in report.rows)
    return report


def autocorr_space_report(covariate_rows: list) -> MetricsReport:
    """Range of the first-lag linear autocorrelation per training-box cell.

    Ten utilization bins (width 0.1, last one [0.9, 0.95]) crossed with
    low/high SCV of the inter-arrival and service distributions.
    """
    edges = [i / 10.0 for i in range(10)] + [0.95]
    report = MetricsReport(grouping="autocorr-space", meta={"total": len(covariate_rows)})
    cells = {}
    for cov in covariate_rows:
        key = (
            _bin_index(cov["utilization"], edges),
            int(cov["arrival_scv"] >= SCV_SPLIT),
            int(cov["service_scv"] >= SCV_SPLIT),
        )
        cells.setdefault(key, []).append(cov["rho111"])
    for ub in range(len(edges) - 1):
        for a_hi in (0, 1):
            for s_hi in (0, 1):
                vals = cells.get((ub, a_hi, s_hi), [])
                bounds = {
                    "util_lb": edges[ub],
                    "util_ub": edges[ub + 1],
                    "arrival_scv": "high" if a_hi else "low",
                    "service_scv": "high" if s_hi else "low",
                }
                metrics = None
                if vals:
                    arr = np.asarray(vals)
                    metrics = {
                        "rho_min": float(arr.min()),
                        "rho_max": float(arr.max()),
                        "rho_mean": float(arr.mean()),
                    }
                report.rows.append(GroupRow(bounds, len(vals), metrics))
    return report
