"""Grid-based measurement of parameter non-identifiability.

Evaluates per-feature discrepancies against a target on a 2-d slice of the
parameter box, marks each feature's best-q fraction of cells, and tracks how
fast the intersection of those sets shrinks as features are added. A large
surviving intersection means many parameter settings reproduce every feature
at once, i.e. the features cannot pin the parameters down; calibrating to
more features shrinks that set multiplicatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import partial

import numpy as np

from .calibrate import DEFAULT_SEARCH_SPACE
from .discrepancy import (
    METRIC_WASSERSTEIN,
    NORM_TARGET,
    ObjectiveSpec,
    evaluate_objective,
)
from .features import ALL_FEATURE_IDS, FeatureMatrix
from .pgps import DEFAULT_PARAMS, PARAM_NAMES, PgpsParams, SimConfig, run_simulation
from .utils import pmap

N_FEATURES = len(ALL_FEATURE_IDS)


@dataclass(frozen=True)
class GridSpec:
    """Regular grid over two parameter dimensions, the rest held fixed.

    ``dims`` are indices into [delta, lambda0, c_lambda, delta_s, alpha, mu];
    the default slice varies alpha and mu over their full search-space spans
    with every other parameter at the recommended defaults.
    """

    dims: tuple[int, int] = (4, 5)
    ranges: tuple[tuple[float, float], tuple[float, float]] = (
        (0.05, 0.2),
        (0.01, 0.06),
    )
    resolution: tuple[int, int] = (100, 100)
    fixed: PgpsParams = DEFAULT_PARAMS

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        ranges = tuple((float(lo), float(hi)) for lo, hi in self.ranges)
        resolution = tuple(int(r) for r in self.resolution)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "ranges", ranges)
        object.__setattr__(self, "resolution", resolution)
        if len(dims) != 2 or len(ranges) != 2 or len(resolution) != 2:
            raise ValueError("grid is two-dimensional: need 2 dims, ranges, resolutions")
        if dims[0] == dims[1]:
            raise ValueError(f"grid dims must differ, got {dims}")
        for d in dims:
            if not 0 <= d < len(PARAM_NAMES):
                raise ValueError(f"dim index {d} outside 0..{len(PARAM_NAMES) - 1}")
        for axis, (d, (lo, hi), res) in enumerate(zip(dims, ranges, resolution)):
            if res < 2:
                raise ValueError(f"resolution must be >= 2 per dim, got {res}")
            if not lo < hi:
                raise ValueError(f"axis {axis} needs lo < hi, got ({lo}, {hi})")
            box_lo, box_hi = DEFAULT_SEARCH_SPACE.bounds[d]
            if lo < box_lo or hi > box_hi:
                raise ValueError(
                    f"axis {axis} range ({lo}, {hi}) leaves the "
                    f"{PARAM_NAMES[d]} box ({box_lo}, {box_hi})"
                )

    @property
    def dim_names(self) -> tuple[str, str]:
        return PARAM_NAMES[self.dims[0]], PARAM_NAMES[self.dims[1]]

    @property
    def n_cells(self) -> int:
        return self.resolution[0] * self.resolution[1]

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(
            np.linspace(lo, hi, res)
            for (lo, hi), res in zip(self.ranges, self.resolution)
        )

    def cell_values(self) -> np.ndarray:
        """(n_cells, 2) array of grid coordinates, row-major in the first axis."""
        a0, a1 = self.axes
        grid0, grid1 = np.meshgrid(a0, a1, indexing="ij")
        return np.column_stack([grid0.ravel(), grid1.ravel()])

    def cell_value(self, index: int) -> tuple[float, float]:
        a0, a1 = self.axes
        return float(a0[index // self.resolution[1]]), float(a1[index % self.resolution[1]])

    def params_at(self, index: int) -> PgpsParams:
        v0, v1 = self.cell_value(index)
        names = self.dim_names
        return self.fixed.with_values(**{names[0]: v0, names[1]: v1})


@dataclass
class GridReport:
    """Per-cell feature discrepancies over a grid slice."""

    spec: GridSpec
    cell_values: np.ndarray  # (n_cells, 2)
    discrepancies: np.ndarray  # (n_cells, 6), column k-1 holds D_k
    metric: str
    normalization: str
    replicates: int
    seed: int

    @property
    def n_cells(self) -> int:
        return self.cell_values.shape[0]


@dataclass(frozen=True)
class NonIdentEstimate:
    """Fraction of the grid that reproduces the first ``feature_count`` features."""

    feature_count: int
    cardinality: int
    grid_size: int
    probability: float

    def __post_init__(self):
        if not 0 <= self.cardinality <= self.grid_size:
            raise ValueError(
                f"cardinality {self.cardinality} outside 0..{self.grid_size}"
            )


def _evaluate_cell(
    index: int,
    spec: GridSpec,
    target: FeatureMatrix,
    objective: ObjectiveSpec,
    sim_config: SimConfig,
    seed: int,
) -> np.ndarray:
    params = spec.params_at(index)
    try:
        report = evaluate_objective(
            objective,
            target,
            lambda r: run_simulation(
                params, replace(sim_config, seed=seed, replicate_index=r)
            ),
        )
    except Exception as exc:
        names = spec.dim_names
        v0, v1 = spec.cell_value(index)
        raise RuntimeError(
            f"simulation failed at cell {index} ({names[0]}={v0:g}, {names[1]}={v1:g}): {exc}"
        ) from exc
    return np.array([report.values[fid] for fid in objective.feature_ids])


def grid_evaluate(
    spec: GridSpec,
    target: FeatureMatrix,
    seed: int,
    metric: str = METRIC_WASSERSTEIN,
    normalization: str = NORM_TARGET,
    replicates: int = 1,
    sim_config: SimConfig | None = None,
    workers: int | None = None,
) -> GridReport:
    """Simulate every grid cell and score all six features against the target.

    Every cell runs with the same simulation ``seed`` (common random numbers),
    so the landscape is a deterministic function of the spec and seed and two
    calls return identical reports regardless of ``workers``.
    """
    for fid in ALL_FEATURE_IDS:
        if fid not in target:
            raise ValueError(f"target matrix lacks feature {fid}")
    if sim_config is None:
        sim_config = SimConfig(steps=target.length)
    objective = ObjectiveSpec(
        feature_ids=tuple(ALL_FEATURE_IDS),
        metric=metric,
        normalization=normalization,
        replicates=replicates,
    )
    job = partial(
        _evaluate_cell,
        spec=spec,
        target=target,
        objective=objective,
        sim_config=sim_config,
        seed=seed,
    )
    n = spec.n_cells
    chunk = max(1, n // (8 * workers)) if workers and workers > 1 else 1
    rows = pmap(job, range(n), workers=workers, chunksize=chunk)
    return GridReport(
        spec=spec,
        cell_values=spec.cell_values(),
        discrepancies=np.array(rows),
        metric=metric,
        normalization=normalization,
        replicates=replicates,
        seed=seed,
    )


def topq_count(q: float, n: int) -> int:
    """ceil(q * n) in exact arithmetic.

    Float q*n can land just above an integer (0.07 * 100 == 7.000000000000001)
    and must not gain a cell.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must be in (0, 1], got {q}")
    return int(math.ceil(Fraction(q).limit_denominator(10**9) * n))


def topq_sets(report: GridReport, q: float = 0.10) -> np.ndarray:
    """Boolean (n_cells, 6) membership masks of each feature's best-q cells.

    Column k-1 marks the cells whose D_k ranks within the smallest
    ceil(q * n_cells); ties at the threshold go to the lowest cell index, so
    every column has exactly that many True entries.
    """
    n = report.n_cells
    count = topq_count(q, n)
    masks = np.zeros((n, N_FEATURES), dtype=bool)
    for col in range(N_FEATURES):
        order = np.argsort(report.discrepancies[:, col], kind="stable")
        masks[order[:count], col] = True
    return masks


def intersection_stats(
    masks: np.ndarray, feature_count: int
) -> tuple[NonIdentEstimate, np.ndarray]:
    """Size of the running intersection of the first ``feature_count`` masks.

    Returns the estimate for that intersection and the overlap ratios
    beta_i = |inter_{k<=i}| / |inter_{k<=i-1}| for i = 2..feature_count,
    with a ratio of 0 whenever the previous intersection is already empty.
    """
    masks = np.asarray(masks, dtype=bool)
    n, m = masks.shape
    if not 1 <= feature_count <= m:
        raise ValueError(f"feature_count must be in 1..{m}, got {feature_count}")
    running = masks[:, 0].copy()
    cards = [int(np.count_nonzero(running))]
    for k in range(1, feature_count):
        running &= masks[:, k]
        cards.append(int(np.count_nonzero(running)))
    betas = np.array(
        [cards[i] / cards[i - 1] if cards[i - 1] > 0 else 0.0
         for i in range(1, feature_count)]
    )
    estimate = NonIdentEstimate(
        feature_count=feature_count,
        cardinality=cards[-1],
        grid_size=n,
        probability=cards[-1] / n,
    )
    return estimate, betas


@dataclass
class OverlapAnalysis:
    """Top-q sets, their running intersections, and the shrink ratios."""

    q: float
    grid_size: int
    set_size: int
    masks: np.ndarray  # (n_cells, 6) bool, column k-1 marks S_k
    intersection_masks: np.ndarray  # (n_cells, 6) bool, column K-1 marks inter_{k<=K}
    cardinalities: np.ndarray  # (6,) int64, |inter_{k<=K}|
    probabilities: np.ndarray  # (6,) float, P_K
    betas: np.ndarray  # (5,) float, beta_2..beta_6

    def estimate(self, feature_count: int) -> NonIdentEstimate:
        if not 1 <= feature_count <= N_FEATURES:
            raise ValueError(f"feature_count must be in 1..{N_FEATURES}")
        return NonIdentEstimate(
            feature_count=feature_count,
            cardinality=int(self.cardinalities[feature_count - 1]),
            grid_size=self.grid_size,
            probability=float(self.probabilities[feature_count - 1]),
        )

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "grid_size": self.grid_size,
            "set_size": self.set_size,
            "cardinalities": [int(c) for c in self.cardinalities],
            "probabilities": [float(p) for p in self.probabilities],
            "betas": [float(b) for b in self.betas],
        }


def overlap_analysis(report: GridReport, q: float = 0.10) -> OverlapAnalysis:
    """Full shrinking-set analysis of a grid report at level q."""
    masks = topq_sets(report, q)
    n = report.n_cells
    intersection_masks = np.logical_and.accumulate(masks, axis=1)
    cardinalities = intersection_masks.sum(axis=0).astype(np.int64)
    probabilities = cardinalities / n
    betas = np.array(
        [
            cardinalities[i] / cardinalities[i - 1] if cardinalities[i - 1] > 0 else 0.0
            for i in range(1, N_FEATURES)
        ]
    )
    return OverlapAnalysis(
        q=q,
        grid_size=n,
        set_size=topq_count(q, n),
        masks=masks,
        intersection_masks=intersection_masks,
        cardinalities=cardinalities,
        probabilities=probabilities,
        betas=betas,
    )
