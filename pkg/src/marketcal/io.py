"""CSV and JSON serialization for traces, feature matrices, and grid reports.

All writers are deterministic (no timestamps, no absolute paths, stable key
order, shortest round-trip float formatting) so identical inputs produce
byte-identical files, and all writes are atomic (write-then-rename).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .features import (
    FeatureMatrix,
    SOURCE_OBSERVED,
    SOURCE_SIMULATED,
    extract,
    matrix_from_columns,
)
from .identifiability import GridReport, OverlapAnalysis
from .pgps import PARAM_NAMES, SimTrace
from .utils import atomic_write_text

TRACE_HEADER = "t,best_bid,best_ask,traded_volume,best_bid_volume,best_ask_volume"
EVENTS_HEADER = "step,kind,side,price,volume,order_id"
SUMMARY_HEADER = "K,cardinality,P,beta"


@dataclass
class LoadedTrace:
    """Trace columns read back from CSV; enough structure to extract features."""

    best_bid: np.ndarray
    best_ask: np.ndarray
    traded_volume: np.ndarray
    best_bid_volume: np.ndarray
    best_ask_volume: np.ndarray

    def __len__(self) -> int:
        return self.best_bid.size


def _fmt(value: float) -> str:
    """Shortest decimal string that round-trips the float exactly."""
    return repr(float(value))


def write_json(obj: dict, path) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


class RowError(ValueError):
    """A CSV body row violating the schema, identified by its 1-based row number."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


def _read_rows(path) -> tuple[str, list[list[str]]]:
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh]
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ValueError(f"{os.path.basename(os.fspath(path))}: empty file")
    header, body = lines[0], lines[1:]
    return header, [line.split(",") for line in body]


# -- simulation traces --------------------------------------------------------


def format_trace_csv(trace) -> str:
    rows = [TRACE_HEADER]
    for t in range(len(trace)):
        rows.append(
            f"{t},{trace.best_bid[t]},{trace.best_ask[t]},{trace.traded_volume[t]},"
            f"{trace.best_bid_volume[t]},{trace.best_ask_volume[t]}"
        )
    return "\n".join(rows) + "\n"


def write_trace_csv(trace, path) -> None:
    atomic_write_text(path, format_trace_csv(trace))


def read_trace_csv(path) -> LoadedTrace:
    header, rows = _read_rows(path)
    if header != TRACE_HEADER:
        raise ValueError(f"expected trace header {TRACE_HEADER!r}, got {header!r}")
    if not rows:
        raise ValueError("trace file has no data rows")
    cols = np.empty((len(rows), 6), dtype=np.int64)
    for i, cells in enumerate(rows, start=1):
        if len(cells) != 6:
            raise RowError(i, f"expected 6 columns, got {len(cells)}")
        try:
            cols[i - 1] = [int(c) for c in cells]
        except ValueError:
            raise RowError(i, f"non-integer value in {cells}") from None
        if cols[i - 1, 0] != i - 1:
            raise RowError(i, f"timestamps must run 0,1,2,...; got t={cells[0]}")
    return LoadedTrace(*(cols[:, j] for j in range(1, 6)))


def trace_metadata(trace: SimTrace) -> dict:
    cfg = trace.config
    return {
        "params": dict(
            zip(PARAM_NAMES, (float(v) for v in trace.params.as_vector()))
        ),
        "config": {
            "steps": cfg.steps,
            "warmup_steps": cfg.warmup_steps,
            "p0": cfg.p0,
            "seed": cfg.seed,
            "replicate_index": cfg.replicate_index,
            "n_providers": cfg.n_providers,
            "n_takers": cfg.n_takers,
        },
        "config_hash": trace.config_hash,
    }


def write_events_csv(events: list[tuple], path) -> None:
    rows = [EVENTS_HEADER]
    for step, kind, side, price, volume, order_id in events:
        rows.append(f"{step},{kind},{side},{price},{volume},{order_id}")
    atomic_write_text(path, "\n".join(rows) + "\n")


# -- feature matrices ---------------------------------------------------------


def format_features_csv(matrix: FeatureMatrix) -> str:
    ids = matrix.feature_ids
    length = matrix.length
    rows = ["t," + ",".join(f"f{fid}" for fid in ids)]
    for t in range(length):
        cells = [str(t)]
        for fid in ids:
            values = matrix[fid].values
            # the log-return series is one step shorter than the trace
            cells.append("" if t >= values.size else _fmt(values[t]))
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


def write_features_csv(matrix: FeatureMatrix, path) -> None:
    atomic_write_text(path, format_features_csv(matrix))


def _parse_feature_header(header: str) -> list[int]:
    cells = header.split(",")
    if cells[0] != "t" or len(cells) < 2:
        raise ValueError(f"expected header 't,f1,...,fK', got {header!r}")
    ids = []
    for pos, cell in enumerate(cells[1:], start=1):
        if cell != f"f{pos}":
            raise ValueError(
                f"expected column {pos} to be 'f{pos}', got {cell!r}; "
                "features must be contiguous from f1"
            )
        ids.append(pos)
    return ids


def read_features_csv(path, source: str = SOURCE_OBSERVED) -> FeatureMatrix:
    """Parse a feature CSV, validating the schema row by row.

    Timestamps must run 0,1,2,...; volume features (f2, f5, f6) must be
    non-negative; the f3 cell must be blank exactly on the final row.
    """
    header, rows = _read_rows(path)
    ids = _parse_feature_header(header)
    if not rows:
        raise ValueError("feature file has no data rows")
    n = len(rows)
    columns: dict[int, list[float]] = {fid: [] for fid in ids}
    for i, cells in enumerate(rows, start=1):
        if len(cells) != len(ids) + 1:
            raise RowError(i, f"expected {len(ids) + 1} columns, got {len(cells)}")
        if cells[0] != str(i - 1):
            raise RowError(i, f"timestamps must run 0,1,2,...; got t={cells[0]!r}")
        for fid, cell in zip(ids, cells[1:]):
            if fid == 3 and cell == "":
                if i != n:
                    raise RowError(i, "blank f3 only allowed on the final row")
                continue
            if fid == 3 and i == n:
                raise RowError(i, "f3 must be blank on the final row")
            try:
                value = float(cell)
            except ValueError:
                raise RowError(i, f"non-numeric f{fid} value {cell!r}") from None
            if not np.isfinite(value):
                raise RowError(i, f"non-finite f{fid} value {cell!r}")
            if fid in (2, 5, 6) and value < 0:
                raise RowError(i, f"negative volume f{fid}={cell}")
            columns[fid].append(value)
    return matrix_from_columns(
        {fid: np.array(vals) for fid, vals in columns.items()}, source=source
    )


def load_feature_matrix(path) -> FeatureMatrix:
    """Load either file kind as a feature matrix, sniffing the header.

    Trace CSVs are extracted to all six features and tagged simulated;
    feature CSVs are ingested as observed data.
    """
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
    if header == TRACE_HEADER:
        return extract(read_trace_csv(path))
    return read_features_csv(path, source=SOURCE_OBSERVED)


def ingest_real_data(path) -> FeatureMatrix:
    """Validated feature matrix from an externally produced feature CSV."""
    return read_features_csv(path, source=SOURCE_OBSERVED)


# -- grid reports -------------------------------------------------------------


def format_grid_csv(report: GridReport, analysis: OverlapAnalysis) -> str:
    names = report.spec.dim_names
    header = (
        f"{names[0]},{names[1]},"
        + ",".join(f"D{k}" for k in range(1, 7))
        + ","
        + ",".join(f"in_S{k}" for k in range(1, 7))
        + ","
        + ",".join(f"in_cap_K{k}" for k in range(1, 7))
    )
    rows = [header]
    for i in range(report.n_cells):
        cells = [_fmt(report.cell_values[i, 0]), _fmt(report.cell_values[i, 1])]
        cells += [_fmt(v) for v in report.discrepancies[i]]
        cells += [str(int(v)) for v in analysis.masks[i]]
        cells += [str(int(v)) for v in analysis.intersection_masks[i]]
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


def write_grid_csv(report: GridReport, analysis: OverlapAnalysis, path) -> None:
    atomic_write_text(path, format_grid_csv(report, analysis))


def format_grid_summary_csv(analysis: OverlapAnalysis) -> str:
    rows = [SUMMARY_HEADER]
    for k in range(1, 7):
        beta = "" if k == 1 else _fmt(analysis.betas[k - 2])
        rows.append(
            f"{k},{analysis.cardinalities[k - 1]},"
            f"{_fmt(analysis.probabilities[k - 1])},{beta}"
        )
    return "\n".join(rows) + "\n"


def write_grid_summary_csv(analysis: OverlapAnalysis, path) -> None:
    atomic_write_text(path, format_grid_summary_csv(analysis))
