"""Particle swarm calibration of the market model parameters.

Minimizes the multi-feature discrepancy objective over a six-dimensional
parameter box with a fixed evaluation budget. Candidate evaluations share one
simulation seed (common random numbers), making the objective landscape a
deterministic function and the whole calibration reproducible from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .discrepancy import ObjectiveSpec, evaluate_objective
from .features import FeatureMatrix
from .pgps import PARAM_NAMES, PgpsParams, SimConfig, run_simulation
from .utils import derive_seed

# spans the synthetic preset value ranges with roughly 2x margin
DEFAULT_BOUNDS = (
    (0.001, 0.1),     # delta
    (50.0, 300.0),    # lambda0
    (1.0, 50.0),      # c_lambda
    (0.0005, 0.005),  # delta_s
    (0.05, 0.2),      # alpha
    (0.01, 0.06),     # mu
)


@dataclass(frozen=True)
class SearchSpace:
    """Per-dimension (lo, hi) box for [delta, lambda0, c_lambda, delta_s, alpha, mu]."""

    bounds: tuple = DEFAULT_BOUNDS

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        for i, (lo, hi) in enumerate(bounds):
            if not lo < hi:
                raise ValueError(
                    f"dimension {i} needs lo < hi, got ({lo}, {hi})"
                )

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.bounds])

    def contains(self, position) -> bool:
        position = np.asarray(position, dtype=float)
        return bool(
            position.size == self.dim
            and np.all(position >= self.lower)
            and np.all(position <= self.upper)
        )


DEFAULT_SEARCH_SPACE = SearchSpace()


@dataclass
class CalibrationResult:
    best_position: np.ndarray
    best_value: float
    history: np.ndarray
    evaluations_used: int
    seed: int
    best_params: PgpsParams | None = None

    def as_dict(self) -> dict:
        out = {
            "best_position": [float(v) for v in self.best_position],
            "best_value": self.best_value,
            "history": [float(v) for v in self.history],
            "evaluations_used": self.evaluations_used,
            "seed": self.seed,
        }
        if self.best_params is not None:
            out["best_params"] = dict(
                zip(PARAM_NAMES, (float(v) for v in self.best_params.as_vector()))
            )
        return out


def pso_run(
    objective: Callable[[np.ndarray], float],
    space: SearchSpace,
    budget: int,
    seed: int,
    popsize: int = 40,
    inertia: float = 0.8,
    cognitive: float = 0.5,
    social: float = 0.5,
) -> CalibrationResult:
    """Minimize ``objective`` over the box with a standard particle swarm.

    Uniform random initialization, zero initial velocities, synchronous
    updates v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x) with fresh
    per-dimension uniforms, positions clamped to the box with the clamped
    velocity component zeroed. Runs floor(budget / popsize) iterations where
    evaluating the initial population counts as the first; ties for the
    global best go to the lowest particle index. Deterministic given the seed
    and a deterministic objective.
    """
    if popsize < 1:
        raise ValueError(f"popsize must be >= 1, got {popsize}")
    if budget < popsize:
        raise ValueError(
            f"budget {budget} cannot cover one evaluation of a population of {popsize}"
        )
    iterations = budget // popsize
    rng = np.random.default_rng(seed)
    lower, upper = space.lower, space.upper

    pos = rng.uniform(lower, upper, size=(popsize, space.dim))
    vel = np.zeros_like(pos)
    pbest = pos.copy()
    pbest_val = np.array([float(objective(p)) for p in pos])
    g = int(np.argmin(pbest_val))
    gbest = pbest[g].copy()
    gbest_val = float(pbest_val[g])
    history = [gbest_val]

    for _ in range(iterations - 1):
        r1 = rng.random((popsize, space.dim))
        r2 = rng.random((popsize, space.dim))
        vel = inertia * vel + cognitive * r1 * (pbest - pos) + social * r2 * (gbest - pos)
        pos = pos + vel
        out_of_box = (pos < lower) | (pos > upper)
        pos = np.clip(pos, lower, upper)
        vel[out_of_box] = 0.0

        values = np.array([float(objective(p)) for p in pos])
        improved = values < pbest_val
        pbest[improved] = pos[improved]
        pbest_val[improved] = values[improved]
        g = int(np.argmin(pbest_val))
        if pbest_val[g] < gbest_val:
            gbest = pbest[g].copy()
            gbest_val = float(pbest_val[g])
        history.append(gbest_val)

    return CalibrationResult(
        best_position=gbest,
        best_value=gbest_val,
        history=np.array(history),
        evaluations_used=popsize * iterations,
        seed=seed,
    )


def make_objective(
    target: FeatureMatrix,
    spec: ObjectiveSpec,
    sim_config: SimConfig,
    sim_seed: int,
) -> Callable[[np.ndarray], float]:
    """Wrap the discrepancy evaluation as a function of the parameter vector.

    Every candidate is simulated with the same ``sim_seed`` (common random
    numbers), so two calls with the same vector return the same value and
    candidate ranking is free of evaluation noise.
    """

    def objective(position) -> float:
        params = PgpsParams.from_vector(position)
        report = evaluate_objective(
            spec,
            target,
            lambda r: run_simulation(
                params, replace(sim_config, seed=sim_seed, replicate_index=r)
            ),
        )
        return report.aggregate

    return objective


def calibrate(
    target: FeatureMatrix,
    spec: ObjectiveSpec,
    space: SearchSpace = DEFAULT_SEARCH_SPACE,
    budget: int = 2000,
    seed: int = 0,
    sim_config: SimConfig | None = None,
    popsize: int = 40,
) -> CalibrationResult:
    """Fit model parameters to a target feature matrix.

    Simulations run for the target's length after the configured warm-up
    unless ``sim_config`` overrides the shape. The candidate-evaluation
    budget is spent by a swarm of ``popsize`` particles; each candidate
    evaluation costs ``spec.replicates`` simulation runs.
    """
    for fid in spec.feature_ids:
        if fid not in target:
            raise ValueError(f"target matrix lacks feature {fid}")
    if sim_config is None:
        sim_config = SimConfig(steps=target.length)
    sim_seed = derive_seed(seed, "simulation")
    pso_seed = derive_seed(seed, "pso")
    objective = make_objective(target, spec, sim_config, sim_seed)
    result = pso_run(objective, space, budget, pso_seed, popsize=popsize)
    result.seed = seed
    result.best_params = PgpsParams.from_vector(result.best_position)
    return result
