"""Per-step feature series extracted from market traces.

Six univariate series: mid price (1), traded volume (2), log return of the
mid price (3), spread (4), best bid volume (5), best ask volume (6). The log
return series is one element shorter than the trace; all others match the
trace length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pgps import SimTrace

FEATURE_NAMES = {
    1: "mid_price",
    2: "traded_volume",
    3: "mid_log_return",
    4: "spread",
    5: "best_bid_volume",
    6: "best_ask_volume",
}

ALL_FEATURE_IDS = (1, 2, 3, 4, 5, 6)

SOURCE_SIMULATED = "simulated"
SOURCE_OBSERVED = "observed"


@dataclass(frozen=True)
class FeatureSeries:
    feature_id: int
    values: np.ndarray

    def __post_init__(self):
        if self.feature_id not in FEATURE_NAMES:
            raise ValueError(f"feature_id must be 1..6, got {self.feature_id}")
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=float)
        )
        if self.values.ndim != 1:
            raise ValueError("feature values must be a 1-d sequence")

    @property
    def name(self) -> str:
        return FEATURE_NAMES[self.feature_id]

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class FeatureMatrix:
    """A contiguous block of feature series f1..fK from one data source."""

    series: dict[int, FeatureSeries]
    source: str = SOURCE_SIMULATED

    def __post_init__(self):
        ids = sorted(self.series)
        if not ids:
            raise ValueError("feature matrix needs at least one series")
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"feature ids must be contiguous from 1, got {ids}")
        if self.source not in (SOURCE_SIMULATED, SOURCE_OBSERVED):
            raise ValueError(f"unknown source tag {self.source!r}")
        for fid, s in self.series.items():
            if s.feature_id != fid:
                raise ValueError(f"series under key {fid} carries id {s.feature_id}")

    @property
    def feature_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.series))

    @property
    def length(self) -> int:
        """Trace length the matrix was built from (f3 runs one shorter)."""
        for fid, s in self.series.items():
            if fid != 3:
                return len(s)
        return len(self.series[3]) + 1

    def __getitem__(self, feature_id: int) -> FeatureSeries:
        if feature_id not in self.series:
            raise KeyError(
                f"feature {feature_id} not present; matrix has {self.feature_ids}"
            )
        return self.series[feature_id]

    def __contains__(self, feature_id: int) -> bool:
        return feature_id in self.series


def extract(trace: SimTrace, feature_ids=ALL_FEATURE_IDS) -> FeatureMatrix:
    """Compute the requested features from a trace.

    ``feature_ids`` must be contiguous from 1 (the objective family F_i uses
    the first i features). Log returns (feature 3) need at least 2 steps.
    """
    ids = tuple(sorted(set(int(f) for f in feature_ids)))
    if not ids:
        raise ValueError("feature_ids must be nonempty")
    if any(f not in FEATURE_NAMES for f in ids):
        raise ValueError(f"feature ids must be within 1..6, got {ids}")
    if ids != tuple(range(1, len(ids) + 1)):
        raise ValueError(f"feature ids must be contiguous from 1, got {ids}")

    mid = (trace.best_bid + trace.best_ask) / 2.0
    if 3 in ids and len(mid) < 2:
        raise ValueError("log returns need a trace of at least 2 steps")

    series: dict[int, FeatureSeries] = {}
    for fid in ids:
        if fid == 1:
            values = mid
        elif fid == 2:
            values = trace.traded_volume.astype(float)
        elif fid == 3:
            log_mid = np.log(mid)
            values = log_mid[1:] - log_mid[:-1]
        elif fid == 4:
            values = (trace.best_ask - trace.best_bid).astype(float)
        elif fid == 5:
            values = trace.best_bid_volume.astype(float)
        else:
            values = trace.best_ask_volume.astype(float)
        series[fid] = FeatureSeries(fid, values)
    return FeatureMatrix(series, source=SOURCE_SIMULATED)


def matrix_from_columns(
    columns: dict[int, np.ndarray], source: str = SOURCE_OBSERVED
) -> FeatureMatrix:
    """Build a matrix from raw per-feature columns (ingested data path)."""
    series = {fid: FeatureSeries(fid, vals) for fid, vals in columns.items()}
    return FeatureMatrix(series, source=source)
