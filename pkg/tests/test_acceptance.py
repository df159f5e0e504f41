"""End-to-end acceptance checks for the whole toolkit.

Each test prints one summary line on success. The calibration comparison at
the bottom dominates the runtime (roughly ten minutes of simulation); the
rest of the module finishes in well under a minute.
"""

import json
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from marketcal.book import OrderBook
from marketcal.calibrate import DEFAULT_SEARCH_SPACE, SearchSpace, calibrate, pso_run
from marketcal.cli import main
from marketcal.discrepancy import (
    ObjectiveSpec,
    discrepancy_report,
    validation_report,
    wasserstein,
)
from marketcal.features import extract, matrix_from_columns
from marketcal.identifiability import GridSpec, grid_evaluate, overlap_analysis
from marketcal.pgps import (
    DEFAULT_PARAMS,
    SYNTHETIC_PRESETS,
    SimConfig,
    lambda_t,
    run_simulation,
)
from marketcal.utils import derive_seed

from oracles import NaiveBook, sorted_wasserstein
from test_book import apply_stream, random_stream


def test_matching_engine_matches_naive_oracle():
    """Trades and final book state agree with a linear-scan matcher."""
    started = time.time()
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        ops = random_stream(rng, n_ops=200)
        fast, naive = OrderBook(1000), NaiveBook(1000)
        fast_trades = apply_stream(fast, ops)
        naive_trades = apply_stream(naive, ops)
        assert fast_trades == naive_trades, f"trade mismatch on stream {seed}"
        assert fast.snapshot() == naive.snapshot(), f"state mismatch on stream {seed}"
        assert (fast.best_bid(), fast.best_ask()) == (
            naive.best_bid(), naive.best_ask(),
        )
    elapsed = time.time() - started
    assert elapsed < 60.0, f"1000 oracle streams took {elapsed:.1f}s"
    print(f"\nmatching engine: 1000 random streams bit-identical in {elapsed:.1f}s PASS")


def test_wasserstein_matches_sorted_oracle_and_axioms():
    rng = np.random.default_rng(5150)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 400))
        scale = float(rng.choice([1.0, 10.0, 100.0]))
        x = rng.normal(0, scale, n)
        y = rng.normal(rng.uniform(-scale, scale), scale, n)
        worst = max(worst, abs(wasserstein(x, y) - sorted_wasserstein(x, y)))
    assert worst <= 1e-9, f"worst oracle deviation {worst:.2e}"

    axiom_worst = 0.0
    for _ in range(300):
        x = rng.normal(0, 1, int(rng.integers(2, 120)))
        y = rng.normal(0.5, 2, int(rng.integers(2, 120)))
        z = rng.normal(-1, 0.5, int(rng.integers(2, 120)))
        axiom_worst = max(axiom_worst, abs(wasserstein(x, y) - wasserstein(y, x)))
        axiom_worst = max(axiom_worst, wasserstein(x, x))
        violation = wasserstein(x, z) - (wasserstein(x, y) + wasserstein(y, z))
        axiom_worst = max(axiom_worst, violation)
    assert axiom_worst <= 1e-9, f"worst axiom violation {axiom_worst:.2e}"
    print(f"\nwasserstein: oracle within {worst:.1e}, axioms within {axiom_worst:.1e} PASS")


def test_order_depth_scaling_spot_values():
    """The placement-depth scale is lambda0 at the walk mean and grows with |q - 1/2|."""
    for sigma in (0.01, 0.05, 0.2):
        assert lambda_t(0.5, sigma, 100.0, 10.0) == 100.0  # exact at the mean
    # 100 * (1 + (0.1 / 0.05) * 10) = 2100, up to one float subtraction
    value = lambda_t(0.6, 0.05, 100.0, 10.0)
    assert value == pytest.approx(2100.0, abs=1e-9)
    print(f"\ndepth scaling: lambda(q=0.5)=100 exact, lambda(q=0.6)={value!r} PASS")


def random_matrix(rng, n=120):
    mid = np.exp(np.cumsum(rng.normal(0, 0.01, n)) + rng.uniform(4, 6))
    return matrix_from_columns(
        {
            1: mid,
            2: rng.poisson(3, n).astype(float),
            3: np.diff(np.log(mid)),
            4: rng.integers(1, 6, n).astype(float),
            5: rng.poisson(5, n).astype(float),
            6: rng.poisson(5, n).astype(float),
        }
    )


def test_objective_family_monotone_in_feature_count():
    """Adding a feature to the max-aggregated objective can only raise it."""
    rng = np.random.default_rng(99)
    for _ in range(100):
        target = random_matrix(rng)
        candidate = random_matrix(rng)
        values = [
            discrepancy_report(
                ObjectiveSpec(feature_ids=tuple(range(1, k + 1))), target, candidate
            ).aggregate
            for k in range(1, 7)
        ]
        for k in range(5):
            assert values[k + 1] >= values[k], (
                f"F_{k + 2}={values[k + 1]} fell below F_{k + 1}={values[k]}"
            )
    print("\nobjective family: F_1 <= ... <= F_6 on 100 random pairs PASS")


def test_pso_minimizes_sphere_on_every_seed():
    cube = SearchSpace(bounds=((-5.0, 5.0),) * 6)

    def sphere(x):
        return float(np.sum(np.asarray(x) ** 2))

    bests = []
    for seed in range(5):
        result = pso_run(sphere, cube, budget=10_000, seed=seed, popsize=40)
        assert np.all(np.diff(result.history) <= 0), f"history rose on seed {seed}"
        assert result.best_value < 1e-2, (
            f"seed {seed} stalled at {result.best_value:.3e}"
        )
        bests.append(result.best_value)
    print(f"\npso sphere: 5/5 seeds below 1e-2 (worst {max(bests):.1e}) PASS")


def test_cli_reruns_are_byte_identical(tmp_path):
    target = tmp_path / "target.csv"
    assert main(["generate", "--preset", "data3", "--steps", "40", "--seed", "7",
                 "--out", str(tmp_path / "t")]) == 0
    (tmp_path / "t" / "trace.csv").rename(target)

    cal_cfg = tmp_path / "cal.cfg"
    cal_cfg.write_text("popsize=8\n")
    grid_cfg = tmp_path / "grid.cfg"
    grid_cfg.write_text("steps=30\n")
    commands = {
        "generate": (["generate", "--preset", "data5", "--steps", "30", "--seed", "11"],
                     ["trace.csv", "trace_meta.json"]),
        "calibrate": (["calibrate", "--target", str(target), "--features", "1,2",
                       "--budget", "16", "--seed", "11", "--config", str(cal_cfg)],
                      ["calibration.json", "history.csv", "best_trace.csv",
                       "best_trace_meta.json"]),
        "evaluate": (["evaluate", "--target", str(target), "--simulated", str(target)],
                     ["evaluation.json"]),
        "grid": (["grid", "--resolution", "3", "--seed", "11", "--config", str(grid_cfg)],
                 ["grid.csv", "grid_summary.csv", "grid_meta.json"]),
    }
    for name, (args, files) in commands.items():
        first, second = tmp_path / f"{name}_1", tmp_path / f"{name}_2"
        assert main(args + ["--out", str(first)]) == 0
        assert main(args + ["--out", str(second)]) == 0
        for file in files:
            a = (first / file).read_bytes()
            b = (second / file).read_bytes()
            assert a == b, f"{name}: {file} differs between reruns"
    print("\ncli determinism: all four commands byte-identical on rerun PASS")


@pytest.fixture(scope="module")
def shrinkage_experiment():
    """Shared 50x50 grid run: the overlap analysis consumes it twice."""
    started = time.time()
    sim_config = SimConfig(steps=600)
    target = extract(
        run_simulation(
            DEFAULT_PARAMS, replace(sim_config, seed=derive_seed(42, "target"))
        )
    )
    spec = GridSpec(resolution=(50, 50))
    report = grid_evaluate(
        spec, target, seed=derive_seed(42, "simulation"), sim_config=sim_config
    )
    analysis = overlap_analysis(report, q=0.10)
    return analysis, time.time() - started


def test_topq_intersection_shrinks_with_features(shrinkage_experiment):
    """More features leave fewer parameter cells that reproduce all of them."""
    analysis, elapsed = shrinkage_experiment
    assert elapsed < 1800.0, f"grid evaluation took {elapsed:.0f}s"
    cards = analysis.cardinalities
    assert analysis.grid_size == 2500
    assert cards[0] == 250  # exact-size top-decile set
    assert np.all(np.diff(cards) <= 0), f"cardinalities rose: {cards}"
    assert analysis.probabilities[5] <= 0.5 * analysis.probabilities[0], (
        f"P_6={analysis.probabilities[5]} vs P_1={analysis.probabilities[0]}"
    )
    print(
        f"\nshrinkage: cells {[int(c) for c in cards]} in {elapsed:.0f}s, "
        f"P_6/P_1={cards[5] / cards[0]:.3f} PASS"
    )


def test_probability_chain_identity(shrinkage_experiment):
    """P_K factors exactly into P_1 times the overlap ratios, and is bounded
    by the worst ratio raised to the number of added features."""
    analysis, _ = shrinkage_experiment
    n = analysis.grid_size
    cards = [int(c) for c in analysis.cardinalities]
    ratios = [
        Fraction(cards[i], cards[i - 1]) if cards[i - 1] else Fraction(0)
        for i in range(1, 6)
    ]
    for k in range(1, 7):
        p_k = Fraction(cards[k - 1], n)
        chain = Fraction(cards[0], n)
        for r in ratios[: k - 1]:
            chain *= r
        assert p_k == chain, f"chain identity broke at K={k}"
        if k >= 2:
            bound = Fraction(cards[0], n) * max(ratios[: k - 1]) ** (k - 1)
            assert p_k <= bound, f"worst-ratio bound broke at K={k}"
    print("\nprobability chain: exact factorization and worst-ratio bound PASS")


def test_two_feature_calibration_beats_univariate():
    """Calibrating on mid-price plus traded volume yields a better all-round
    fit than calibrating on mid-price alone, in most independent repetitions.

    Each fit is scored the way the command-line pipeline scores it: the
    best-parameter trace the calibration itself produces (simulated at the
    fit's derived seed) is compared with the target on all six features and
    the per-feature Wasserstein values are averaged. Scoring on fresh
    held-out seeds instead would drown the comparison in noise: the
    mid-price level is a random walk, so even the true parameters score a
    six-feature mean of 0.13 to 0.19 with a seed-to-seed spread of the same
    magnitude, which is larger than typical differences between the two
    fits. Each objective gets its own fit seed so the two optimizer runs
    are independent experiments; sharing the seed lets the two trajectories
    coincide whenever the volume feature never dominates, which forces an
    exact tie."""
    started = time.time()
    base = 2024
    sim_config = SimConfig(steps=1200)
    outcomes = {}
    for name in ("data1", "data7", "data9"):
        params = SYNTHETIC_PRESETS[name]
        target = extract(
            run_simulation(
                params, replace(sim_config, seed=derive_seed(base, "target", name))
            )
        )
        wins = 0
        for rep in range(5):
            scores = {}
            for n_features in (1, 2):
                master = derive_seed(base, "fit", name, rep, n_features)
                spec = ObjectiveSpec(feature_ids=tuple(range(1, n_features + 1)))
                result = calibrate(
                    target, spec, DEFAULT_SEARCH_SPACE,
                    budget=2000, seed=master, sim_config=sim_config,
                )
                best_trace = run_simulation(
                    result.best_params,
                    replace(sim_config, seed=derive_seed(master, "simulation")),
                )
                scores[n_features] = validation_report(
                    target, extract(best_trace)
                ).mean_w
            wins += scores[2] < scores[1]
        outcomes[name] = wins
        assert wins >= 3, f"{name}: two-feature fit won only {wins}/5 seeds"
    elapsed = time.time() - started
    assert elapsed < 7200.0, f"calibration comparison took {elapsed:.0f}s"
    summary = ", ".join(f"{k} {v}/5" for k, v in outcomes.items())
    print(f"\ncalibration direction: wins {summary} in {elapsed:.0f}s PASS")
