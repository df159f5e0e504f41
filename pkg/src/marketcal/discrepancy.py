"""Distribution discrepancies and the worst-feature aggregate objective.

The calibration objective compares feature distributions between a target
matrix and simulated candidates: per feature a 1-d Wasserstein distance (or
MSE), optionally min-max normalized, then aggregated across features by max
(default) or mean. Taking the max turns K single-feature calibration tasks
into one worst-case task, so adding features can only tighten the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .features import FeatureMatrix, extract
from .pgps import SimTrace

METRIC_WASSERSTEIN = "wasserstein"
METRIC_MSE = "mse"
AGG_MAX = "max"
AGG_MEAN = "mean"
NORM_TARGET = "target"
NORM_JOINT = "joint"
NORM_NONE = "none"


def wasserstein(x, y) -> float:
    """Exact 1-d Wasserstein-1 distance between empirical distributions.

    Integrates |U - V| over the merged sample support, where U and V are the
    empirical CDFs. Handles unequal sample counts; for equal counts it equals
    the mean absolute difference of the sorted samples.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("wasserstein needs nonempty sequences")
    xs = np.sort(x)
    ys = np.sort(y)
    support = np.sort(np.concatenate([xs, ys]))
    gaps = np.diff(support)
    cdf_x = np.searchsorted(xs, support[:-1], side="right") / xs.size
    cdf_y = np.searchsorted(ys, support[:-1], side="right") / ys.size
    return float(np.sum(np.abs(cdf_x - cdf_y) * gaps))


def mse(x, y) -> float:
    """Mean squared element-wise difference over the common prefix."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValueError("mse needs nonempty sequences")
    n = min(x.size, y.size)
    d = x[:n] - y[:n]
    return float(np.mean(d * d))


def minmax_normalize(x, bounds: tuple[float, float]) -> np.ndarray:
    """(x - lo) / (hi - lo); a collapsed range maps everything to zero."""
    lo, hi = float(bounds[0]), float(bounds[1])
    if hi < lo:
        raise ValueError(f"bounds must satisfy hi >= lo, got ({lo}, {hi})")
    x = np.asarray(x, dtype=float)
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


@dataclass(frozen=True)
class ObjectiveSpec:
    """What to compare and how to collapse it into one number.

    ``feature_ids`` = (1, ..., i) gives the objective family F_i. Replicates
    average the per-feature discrepancies over that many simulation runs
    before aggregation, which preserves monotonicity of F_i in i.
    """

    feature_ids: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    metric: str = METRIC_WASSERSTEIN
    aggregation: str = AGG_MAX
    normalization: str = NORM_TARGET
    replicates: int = 1

    def __post_init__(self):
        ids = tuple(int(f) for f in self.feature_ids)
        object.__setattr__(self, "feature_ids", ids)
        if not ids:
            raise ValueError("feature_ids must be nonempty")
        if any(f < 1 or f > 6 for f in ids):
            raise ValueError(f"feature ids must be within 1..6, got {ids}")
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate feature ids in {ids}")
        if self.metric not in (METRIC_WASSERSTEIN, METRIC_MSE):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.aggregation not in (AGG_MAX, AGG_MEAN):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        if self.normalization not in (NORM_TARGET, NORM_JOINT, NORM_NONE):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")


@dataclass
class DiscrepancyReport:
    """Per-feature discrepancies and their aggregate for one candidate."""

    feature_ids: tuple[int, ...]
    values: dict[int, float]
    aggregate: float
    metric: str
    aggregation: str
    normalization: str
    bounds: dict[int, tuple[float, float]]
    replicates: int = 1

    def as_dict(self) -> dict:
        return {
            "feature_ids": list(self.feature_ids),
            "values": {str(k): v for k, v in self.values.items()},
            "aggregate": self.aggregate,
            "metric": self.metric,
            "aggregation": self.aggregation,
            "normalization": self.normalization,
            "bounds": {str(k): list(v) for k, v in self.bounds.items()},
            "replicates": self.replicates,
        }


def _metric_fn(name: str) -> Callable:
    return wasserstein if name == METRIC_WASSERSTEIN else mse


def _series_bounds(spec: ObjectiveSpec, target_values, candidate_values):
    if spec.normalization == NORM_TARGET:
        return float(np.min(target_values)), float(np.max(target_values))
    if spec.normalization == NORM_JOINT:
        lo = min(float(np.min(target_values)), float(np.min(candidate_values)))
        hi = max(float(np.max(target_values)), float(np.max(candidate_values)))
        return lo, hi
    return 0.0, 1.0  # identity scaling


def feature_discrepancies(
    spec: ObjectiveSpec, target: FeatureMatrix, candidate: FeatureMatrix
) -> tuple[dict[int, float], dict[int, tuple[float, float]]]:
    """Per-feature discrepancy between two feature matrices under a spec."""
    metric = _metric_fn(spec.metric)
    values: dict[int, float] = {}
    bounds: dict[int, tuple[float, float]] = {}
    for fid in spec.feature_ids:
        if fid not in target:
            raise ValueError(f"target matrix lacks feature {fid}")
        if fid not in candidate:
            raise ValueError(f"candidate matrix lacks feature {fid}")
        tv = target[fid].values
        cv = candidate[fid].values
        b = _series_bounds(spec, tv, cv)
        values[fid] = metric(minmax_normalize(tv, b), minmax_normalize(cv, b))
        bounds[fid] = b
    return values, bounds


def aggregate_values(spec: ObjectiveSpec, values: dict[int, float]) -> float:
    ordered = [values[fid] for fid in spec.feature_ids]
    return float(max(ordered) if spec.aggregation == AGG_MAX else np.mean(ordered))


def discrepancy_report(
    spec: ObjectiveSpec, target: FeatureMatrix, candidate: FeatureMatrix
) -> DiscrepancyReport:
    """Compare two already-extracted matrices (no simulation involved)."""
    values, bounds = feature_discrepancies(spec, target, candidate)
    return DiscrepancyReport(
        feature_ids=spec.feature_ids,
        values=values,
        aggregate=aggregate_values(spec, values),
        metric=spec.metric,
        aggregation=spec.aggregation,
        normalization=spec.normalization,
        bounds=bounds,
        replicates=1,
    )


def evaluate_objective(
    spec: ObjectiveSpec,
    target: FeatureMatrix,
    trace_source: Callable[[int], SimTrace],
) -> DiscrepancyReport:
    """Objective value of one candidate against the target.

    ``trace_source(replicate_index)`` must return a simulated trace; the
    per-feature discrepancies are averaged over ``spec.replicates`` replicate
    traces, then aggregated. With a deterministic trace source the result is
    deterministic.
    """
    extract_ids = tuple(range(1, max(spec.feature_ids) + 1))
    totals = {fid: 0.0 for fid in spec.feature_ids}
    bounds: dict[int, tuple[float, float]] = {}
    for r in range(spec.replicates):
        candidate = extract(trace_source(r), extract_ids)
        values, bounds = feature_discrepancies(spec, target, candidate)
        for fid, v in values.items():
            totals[fid] += v
    values = {fid: total / spec.replicates for fid, total in totals.items()}
    return DiscrepancyReport(
        feature_ids=spec.feature_ids,
        values=values,
        aggregate=aggregate_values(spec, values),
        metric=spec.metric,
        aggregation=spec.aggregation,
        normalization=spec.normalization,
        bounds=bounds,
        replicates=spec.replicates,
    )


@dataclass
class ValidationReport:
    """Held-out comparison of a fitted model against the target: per-feature
    Wasserstein and MSE on target-normalized series, plus their means."""

    per_feature_w: dict[int, float]
    per_feature_mse: dict[int, float]
    mean_w: float
    mean_mse: float

    def as_dict(self) -> dict:
        return {
            "per_feature_w": {str(k): v for k, v in self.per_feature_w.items()},
            "per_feature_mse": {str(k): v for k, v in self.per_feature_mse.items()},
            "mean_w": self.mean_w,
            "mean_mse": self.mean_mse,
        }


def validation_report(target: FeatureMatrix, candidate: FeatureMatrix) -> ValidationReport:
    """Score a candidate on every feature the target carries (usually all 6)."""
    ids = target.feature_ids
    w_spec = ObjectiveSpec(feature_ids=ids, metric=METRIC_WASSERSTEIN,
                           aggregation=AGG_MEAN, normalization=NORM_TARGET)
    m_spec = ObjectiveSpec(feature_ids=ids, metric=METRIC_MSE,
                           aggregation=AGG_MEAN, normalization=NORM_TARGET)
    w_values, _ = feature_discrepancies(w_spec, target, candidate)
    m_values, _ = feature_discrepancies(m_spec, target, candidate)
    return ValidationReport(
        per_feature_w=w_values,
        per_feature_mse=m_values,
        mean_w=float(np.mean(list(w_values.values()))),
        mean_mse=float(np.mean(list(m_values.values()))),
    )
