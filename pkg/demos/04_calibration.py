"""
Calibrating parameters with the particle swarm
==============================================

A synthetic target is simulated from known parameters, then recovered by
minimizing the two-feature objective over the six-dimensional search box.
Every candidate is simulated with the same seed (common random numbers), so
the optimizer sees a deterministic landscape and the whole run reproduces
from its seed. Forty particles, inertia 0.8, cognitive and social weights
0.5 each.
"""

import numpy as np

from marketcal import (
    DEFAULT_SEARCH_SPACE,
    PARAM_NAMES,
    ObjectiveSpec,
    SYNTHETIC_PRESETS,
    SimConfig,
    calibrate,
    extract,
    run_simulation,
    validation_report,
)

truth = SYNTHETIC_PRESETS["data7"]
sim_config = SimConfig(steps=800)
target = extract(run_simulation(truth, SimConfig(steps=800, seed=4242)))

spec = ObjectiveSpec(feature_ids=(1, 2))
result = calibrate(target, spec, DEFAULT_SEARCH_SPACE,
                   budget=800, seed=17, sim_config=sim_config)

print(f"evaluations used: {result.evaluations_used}")
print(f"best objective value: {result.best_value:.4f}")
print(f"{'parameter':<10} {'true':>10} {'recovered':>10}")
for name, true_v, fit_v in zip(
    PARAM_NAMES, truth.as_vector(), result.best_params.as_vector()
):
    print(f"{name:<10} {true_v:>10.4f} {fit_v:>10.4f}")

history = np.asarray(result.history)
print("\nbest value by iteration (never rises):")
for i in range(0, len(history), max(1, len(history) // 8)):
    print(f"  iter {i + 1:>3}: {history[i]:.4f}")

# Score the fit on all six features against the target, using fresh seeds
# the optimizer never saw.
candidate = extract(run_simulation(result.best_params, SimConfig(steps=800, seed=999)))
report = validation_report(target, candidate)
print(f"\nheld-out validation: mean W {report.mean_w:.4f}, "
      f"mean MSE {report.mean_mse:.4f}")
print("(a perfect parameter recovery still shows a seed-noise floor here)")

# The loose recovery of some coordinates is not an optimizer failure: many
# parameter settings produce near-identical features. The identifiability
# demo quantifies that degeneracy on a grid.

