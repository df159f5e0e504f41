"""Market simulation: parameter handling, the q_taker walk, placement depth,
and engine behavior."""

import numpy as np
import pytest

from marketcal.book import ASK, BID, OrderBook
from marketcal.pgps import (
    DEFAULT_PARAMS,
    SYNTHETIC_PRESETS,
    MarketState,
    PgpsParams,
    SimConfig,
    _q_path_py,
    lambda_t,
    precompute_sigma_q,
    provider_order_price,
    q_taker_path,
    run_simulation,
    step_q_taker,
)


class TestParams:
    def test_vector_round_trip(self):
        params = PgpsParams(0.025, 100, 10, 0.001, 0.15, 0.025)
        assert PgpsParams.from_vector(params.as_vector()) == params

    def test_preset_values(self):
        assert SYNTHETIC_PRESETS["data1"].as_vector().tolist() == [
            0.025, 100, 10, 0.001, 0.15, 0.025,
        ]
        assert SYNTHETIC_PRESETS["data10"].as_vector().tolist() == [
            0.01, 87, 23, 0.001, 0.09, 0.05,
        ]
        assert len(SYNTHETIC_PRESETS) == 10
        assert DEFAULT_PARAMS == SYNTHETIC_PRESETS["data1"]

    @pytest.mark.parametrize(
        "field,value",
        [
            ("delta", -0.1), ("delta", 1.5),
            ("lambda0", 0.0), ("lambda0", -5),
            ("c_lambda", -1),
            ("delta_s", 0.0), ("delta_s", 0.5),
            ("alpha", -0.01), ("alpha", 2),
            ("mu", -1), ("mu", 1.01),
        ],
    )
    def test_out_of_range_rejected(self, field, value):
        kwargs = dict(delta=0.025, lambda0=100, c_lambda=10, delta_s=0.001, alpha=0.15, mu=0.025)
        kwargs[field] = value
        with pytest.raises(ValueError, match=field):
            PgpsParams(**kwargs)

    def test_wrong_vector_length(self):
        with pytest.raises(ValueError, match="6"):
            PgpsParams.from_vector([0.1, 0.2, 0.3])

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SimConfig(steps=0)
        with pytest.raises(ValueError):
            SimConfig(warmup_steps=-1)
        with pytest.raises(ValueError):
            SimConfig(p0=1)

    def test_market_state_validation(self):
        with pytest.raises(ValueError, match="sigma_q"):
            MarketState(sigma_q=0.0)
        with pytest.raises(ValueError, match="q_taker"):
            MarketState(sigma_q=0.01, q_taker=1.5)


class TestQWalk:
    def test_step_from_mean_moves_one_increment(self):
        rng = np.random.default_rng(0)
        seen = {step_q_taker(0.5, 0.01, rng) for _ in range(50)}
        assert seen == {0.49, 0.51}

    def test_full_deviation_forces_reversion(self):
        # |q - 0.5| = 0.5 makes the reversion probability 1
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert step_q_taker(1.0, 0.002, rng) == 0.998
            assert step_q_taker(0.0, 0.002, rng) == 0.002

    def test_clamped_to_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            assert 0.0 <= step_q_taker(0.999, 0.05, rng) <= 1.0
            assert 0.0 <= step_q_taker(0.001, 0.05, rng) <= 1.0

    def test_reversion_probability_at_point_six(self):
        # from q=0.6 the walk steps toward 0.5 with probability 0.6
        rng = np.random.default_rng(42)
        n = 20_000
        toward = sum(step_q_taker(0.6, 0.01, rng) < 0.6 for _ in range(n))
        se = np.sqrt(0.6 * 0.4 / n)
        assert abs(toward / n - 0.6) < 3 * se

    def test_path_matches_scalar_steps(self):
        rng_a = np.random.default_rng(11)
        rng_b = np.random.default_rng(11)
        path = q_taker_path(500, 0.003, rng_a)
        q = 0.5
        expected = []
        for _ in range(500):
            q = step_q_taker(q, 0.003, rng_b)
            expected.append(q)
        assert np.array_equal(path, np.array(expected))

    def test_batch_kernel_matches_python_loop(self):
        us = np.random.default_rng(5).random(2000)
        from marketcal.pgps import _q_path
        assert np.array_equal(_q_path(us, 0.5, 0.002), _q_path_py(us, 0.5, 0.002))

    def test_long_run_mean_near_half(self):
        # grand mean of independent walk means stays within 3 SE of 1/2
        means = []
        for seed in range(30):
            rng = np.random.default_rng(seed)
            means.append(q_taker_path(100_000, 0.01, rng).mean())
        means = np.array(means)
        se = means.std(ddof=1) / np.sqrt(len(means))
        assert abs(means.mean() - 0.5) < 3 * se


class TestSigmaQ:
    def test_positive_and_bounded(self):
        sigma = precompute_sigma_q(0.002)
        assert 0.0 < sigma < 0.5

    def test_deterministic(self):
        assert precompute_sigma_q(0.0031) == precompute_sigma_q(0.0031)

    def test_smaller_steps_give_smaller_deviation(self):
        assert precompute_sigma_q(0.001) < precompute_sigma_q(0.01)

    def test_matches_direct_recomputation(self):
        # independent reconstruction from the walk path and the fixed seed
        from marketcal.pgps import SIGMA_Q_SEED
        rng = np.random.default_rng(np.random.SeedSequence([SIGMA_Q_SEED]))
        path = _q_path_py(rng.random(100_000), 0.5, 0.004)
        expected = float(np.sqrt(np.mean((path - 0.5) ** 2)))
        assert precompute_sigma_q(0.004) == pytest.approx(expected, abs=1e-15)

    def test_invalid_delta_s(self):
        with pytest.raises(ValueError):
            precompute_sigma_q(0.0)
        with pytest.raises(ValueError):
            precompute_sigma_q(0.6)


class TestLambda:
    def test_at_mean_equals_base_depth(self):
        assert lambda_t(0.5, 0.05, 100.0, 10.0) == 100.0

    def test_zero_coupling_ignores_deviation(self):
        for q in (0.0, 0.3, 0.9):
            assert lambda_t(q, 0.05, 123.0, 0.0) == 123.0

    def test_spot_value(self):
        # 100 * (1 + (0.1 / 0.05) * 10) = 2100
        assert lambda_t(0.6, 0.05, 100.0, 10.0) == pytest.approx(2100.0, abs=1e-9)

    def test_array_input_matches_scalar(self):
        qs = np.array([0.2, 0.5, 0.81])
        arr = lambda_t(qs, 0.03, 80.0, 5.0)
        assert np.array_equal(arr, np.array([lambda_t(q, 0.03, 80.0, 5.0) for q in qs]))

    def test_never_below_base(self):
        qs = np.linspace(0, 1, 101)
        assert np.all(lambda_t(qs, 0.02, 50.0, 7.0) >= 50.0)


class _StubRng:
    """Deterministic stand-in yielding a fixed uniform value."""

    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value


class TestProviderPrice:
    def test_zero_depth_prices_one_past_opposite(self):
        book = OrderBook(10_000)
        # rng.random() -> 0 makes u = 1, ln(u) = 0, depth 0
        assert provider_order_price(book, ASK, 100.0, _StubRng(0.0)) == 10_000
        assert provider_order_price(book, BID, 100.0, _StubRng(0.0)) == 10_000

    def test_floor_at_one_tick(self):
        book = OrderBook(5)
        # huge depth pushes the bid price below the grid; it clamps to 1
        assert provider_order_price(book, BID, 100.0, _StubRng(0.9999)) == 1

    def test_depth_distribution_mean(self):
        # E[-lambda ln u] = lambda; flooring shifts the mean by about 1/2
        book = OrderBook(10_000)
        rng = np.random.default_rng(3)
        depths = [
            provider_order_price(book, ASK, 100.0, rng) - book.best_bid() - 1
            for _ in range(100_000)
        ]
        assert np.mean(depths) == pytest.approx(100.0, rel=0.02)

    def test_prices_relative_to_current_quotes(self):
        book = OrderBook(10_000)
        from marketcal.book import LIMIT, Order
        book.submit_limit(Order(1, BID, LIMIT, 9_990, 1, (0, 1)))
        book.submit_limit(Order(2, ASK, LIMIT, 10_010, 1, (0, 2)))
        assert provider_order_price(book, ASK, 50.0, _StubRng(0.0)) == 9_991
        assert provider_order_price(book, BID, 50.0, _StubRng(0.0)) == 10_009


def trace_fields(trace):
    return (
        trace.best_bid,
        trace.best_ask,
        trace.traded_volume,
        trace.best_bid_volume,
        trace.best_ask_volume,
    )


def traces_equal(a, b):
    return all(np.array_equal(x, y) for x, y in zip(trace_fields(a), trace_fields(b)))


class TestRunSimulation:
    def test_no_agents_no_activity(self):
        params = PgpsParams(0.025, 100, 10, 0.001, 0.0, 0.0)
        trace = run_simulation(params, SimConfig(steps=50, warmup_steps=10, seed=0))
        assert np.all(trace.traded_volume == 0)
        assert np.all(trace.best_bid == 9_999)
        assert np.all(trace.best_ask == 10_001)
        assert np.all(trace.best_bid_volume == 0)

    def test_default_preset_full_horizon_nondegenerate(self):
        trace = run_simulation(DEFAULT_PARAMS, SimConfig(steps=3600, warmup_steps=200, seed=1))
        assert len(trace) == 3600
        assert trace.traded_volume.sum() > 0
        mid = (trace.best_bid + trace.best_ask) / 2
        assert np.unique(mid).size > 10
        assert np.all(trace.best_ask > trace.best_bid)

    def test_bit_identical_reruns(self):
        cfg = SimConfig(steps=400, warmup_steps=100, seed=9)
        a = run_simulation(DEFAULT_PARAMS, cfg)
        b = run_simulation(DEFAULT_PARAMS, cfg)
        assert traces_equal(a, b)
        assert a.config_hash == b.config_hash

    def test_seed_and_replicate_change_the_trace(self):
        base = SimConfig(steps=200, warmup_steps=50, seed=3, replicate_index=0)
        other_seed = SimConfig(steps=200, warmup_steps=50, seed=4, replicate_index=0)
        other_rep = SimConfig(steps=200, warmup_steps=50, seed=3, replicate_index=1)
        a = run_simulation(DEFAULT_PARAMS, base)
        assert not traces_equal(a, run_simulation(DEFAULT_PARAMS, other_seed))
        assert not traces_equal(a, run_simulation(DEFAULT_PARAMS, other_rep))

    def test_p0_must_dominate_depth_scale(self):
        with pytest.raises(ValueError, match="p0"):
            run_simulation(DEFAULT_PARAMS, SimConfig(steps=10, p0=500))

    def test_vector_accepted_in_place_of_params(self):
        cfg = SimConfig(steps=60, warmup_steps=10, seed=2)
        a = run_simulation(DEFAULT_PARAMS.as_vector(), cfg)
        b = run_simulation(DEFAULT_PARAMS, cfg)
        assert traces_equal(a, b)

    def test_event_log_requires_reference_engine(self):
        cfg = SimConfig(steps=20, warmup_steps=5, seed=0)
        with pytest.raises(ValueError, match="reference"):
            run_simulation(DEFAULT_PARAMS, cfg, track_events=True, engine="fast")
        trace = run_simulation(DEFAULT_PARAMS, cfg, track_events=True)
        assert trace.events is not None and len(trace.events) > 0

    def test_unknown_engine_rejected(self):
        with pytest.raises(ValueError, match="engine"):
            run_simulation(DEFAULT_PARAMS, SimConfig(steps=10), engine="warp")


class TestEngineEquivalence:
    """The compiled loop and the order-book loop must agree bit for bit."""

    @pytest.mark.parametrize("name", sorted(SYNTHETIC_PRESETS))
    def test_presets(self, name):
        cfg = SimConfig(steps=150, warmup_steps=40, seed=17, p0=20_000)
        fast = run_simulation(SYNTHETIC_PRESETS[name], cfg, engine="fast")
        ref = run_simulation(SYNTHETIC_PRESETS[name], cfg, engine="reference")
        assert traces_equal(fast, ref)

    @pytest.mark.parametrize(
        "params",
        [
            PgpsParams(0.001, 50, 1, 0.0005, 0.05, 0.01),
            PgpsParams(0.1, 300, 50, 0.005, 0.2, 0.06),
            PgpsParams(0.05, 60, 5, 0.002, 0.9, 0.5),
            PgpsParams(0.0, 100, 10, 0.001, 0.15, 0.025),
            PgpsParams(1.0, 100, 10, 0.001, 0.15, 0.025),
            PgpsParams(0.025, 100, 10, 0.001, 0.15, 0.0),
            PgpsParams(0.025, 100, 10, 0.001, 0.0, 0.2),
        ],
        ids=["box_low", "box_high", "dense_flow", "no_cancel", "all_cancel",
             "no_takers", "no_providers"],
    )
    def test_corner_parameterizations(self, params):
        for seed in (0, 1):
            cfg = SimConfig(steps=200, warmup_steps=50, seed=seed, p0=20_000)
            fast = run_simulation(params, cfg, engine="fast")
            ref = run_simulation(params, cfg, engine="reference")
            assert traces_equal(fast, ref)
