"""Market simulation calibration toolkit.

A two-population limit-order-book market model, per-step feature extraction,
distribution discrepancies with a worst-feature aggregate objective, particle
swarm calibration, and a grid-based parameter identifiability analysis.
"""

from .book import ASK, BID, LIMIT, MARKET, Order, OrderBook, Trade
from .calibrate import (
    DEFAULT_SEARCH_SPACE,
    CalibrationResult,
    SearchSpace,
    calibrate,
    make_objective,
    pso_run,
)
from .discrepancy import (
    AGG_MAX,
    AGG_MEAN,
    METRIC_MSE,
    METRIC_WASSERSTEIN,
    NORM_JOINT,
    NORM_NONE,
    NORM_TARGET,
    DiscrepancyReport,
    ObjectiveSpec,
    ValidationReport,
    discrepancy_report,
    evaluate_objective,
    minmax_normalize,
    mse,
    validation_report,
    wasserstein,
)
from .features import (
    ALL_FEATURE_IDS,
    FEATURE_NAMES,
    SOURCE_OBSERVED,
    SOURCE_SIMULATED,
    FeatureMatrix,
    FeatureSeries,
    extract,
    matrix_from_columns,
)
from .identifiability import (
    GridReport,
    GridSpec,
    NonIdentEstimate,
    OverlapAnalysis,
    grid_evaluate,
    intersection_stats,
    overlap_analysis,
    topq_count,
    topq_sets,
)
from .io import (
    ingest_real_data,
    load_feature_matrix,
    read_features_csv,
    read_trace_csv,
    write_features_csv,
    write_grid_csv,
    write_grid_summary_csv,
    write_trace_csv,
)
from .pgps import (
    DEFAULT_PARAMS,
    PARAM_NAMES,
    SYNTHETIC_PRESETS,
    MarketState,
    PgpsParams,
    SimConfig,
    SimTrace,
    lambda_t,
    precompute_sigma_q,
    provider_order_price,
    q_taker_path,
    run_simulation,
    step_q_taker,
)

__version__ = "0.1.0"

__all__ = [
    "ASK",
    "BID",
    "LIMIT",
    "MARKET",
    "Order",
    "OrderBook",
    "Trade",
    "DEFAULT_SEARCH_SPACE",
    "CalibrationResult",
    "SearchSpace",
    "calibrate",
    "make_objective",
    "pso_run",
    "AGG_MAX",
    "AGG_MEAN",
    "METRIC_MSE",
    "METRIC_WASSERSTEIN",
    "NORM_JOINT",
    "NORM_NONE",
    "NORM_TARGET",
    "DiscrepancyReport",
    "ObjectiveSpec",
    "ValidationReport",
    "discrepancy_report",
    "evaluate_objective",
    "minmax_normalize",
    "mse",
    "validation_report",
    "wasserstein",
    "ALL_FEATURE_IDS",
    "FEATURE_NAMES",
    "SOURCE_OBSERVED",
    "SOURCE_SIMULATED",
    "FeatureMatrix",
    "FeatureSeries",
    "extract",
    "matrix_from_columns",
    "GridReport",
    "GridSpec",
    "NonIdentEstimate",
    "OverlapAnalysis",
    "grid_evaluate",
    "intersection_stats",
    "overlap_analysis",
    "topq_count",
    "topq_sets",
    "ingest_real_data",
    "load_feature_matrix",
    "read_features_csv",
    "read_trace_csv",
    "write_features_csv",
    "write_grid_csv",
    "write_grid_summary_csv",
    "write_trace_csv",
    "DEFAULT_PARAMS",
    "PARAM_NAMES",
    "SYNTHETIC_PRESETS",
    "MarketState",
    "PgpsParams",
    "SimConfig",
    "SimTrace",
    "lambda_t",
    "precompute_sigma_q",
    "provider_order_price",
    "q_taker_path",
    "run_simulation",
    "step_q_taker",
    "__version__",
]
