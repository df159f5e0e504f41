"""Command-line surface: generate, calibrate, evaluate, grid.

Settings resolve in three layers: command-line flags win over `key=value`
lines in the --config file, which win over built-in defaults. One master
--seed drives each command, namespaced internally per purpose, so a command
re-run with the same config and seed writes byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import io
from .calibrate import DEFAULT_SEARCH_SPACE, calibrate
from .discrepancy import (
    AGG_MAX,
    AGG_MEAN,
    METRIC_MSE,
    METRIC_WASSERSTEIN,
    NORM_JOINT,
    NORM_NONE,
    NORM_TARGET,
    ObjectiveSpec,
    validation_report,
)
from .features import extract
from .identifiability import GridSpec, grid_evaluate, overlap_analysis
from .pgps import (
    PARAM_NAMES,
    PgpsParams,
    SimConfig,
    SYNTHETIC_PRESETS,
    run_simulation,
)
from .utils import derive_seed

METRIC_ALIASES = {"w": METRIC_WASSERSTEIN, "wasserstein": METRIC_WASSERSTEIN,
                  "mse": METRIC_MSE}

_SHARED_KEYS = {"seed", "out", "workers"}
_COMMAND_KEYS = {
    "generate": {"preset", "params", "steps", "warmup", "event_log"},
    "calibrate": {"target", "features", "budget", "replicates", "metric", "agg",
                  "norm", "popsize", "steps", "warmup"},
    "evaluate": {"target", "simulated"},
    "grid": {"target", "resolution", "q", "dims", "steps", "warmup",
             "replicates", "metric", "norm"},
}


class CliError(Exception):
    """A user-facing configuration or input problem (exit status 2)."""


def read_config_file(path) -> dict[str, str]:
    """Parse `key=value` lines; blank lines and `#` comments are skipped."""
    if not os.path.exists(path):
        raise CliError(f"config file not found: {path}")
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


class Settings:
    """Flag-over-config-over-default resolution for one command."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.config = read_config_file(args.config) if args.config else {}
        allowed = _SHARED_KEYS | _COMMAND_KEYS[command]
        for key in self.config:
            if key not in allowed:
                raise CliError(
                    f"unknown config key {key!r} for command {command!r} "
                    f"(allowed: {', '.join(sorted(allowed))})"
                )
        self.args = args

    def get(self, name: str, cast, default):
        flag = getattr(self.args, name, None)
        if flag is not None:
            return flag
        if name in self.config:
            raw = self.config[name]
            try:
                return cast(raw)
            except ValueError as exc:
                raise CliError(f"config key {name}={raw!r}: {exc}") from None
        return default


def _cast_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def parse_feature_list(raw: str) -> tuple[int, ...]:
    try:
        ids = tuple(int(part) for part in raw.split(","))
    except ValueError:
        raise CliError(f"--features must be comma-separated integers, got {raw!r}")
    return ids


def parse_params(raw: str) -> PgpsParams:
    parts = raw.split(",")
    if len(parts) != len(PARAM_NAMES):
        raise CliError(
            f"--params needs {len(PARAM_NAMES)} comma-separated values "
            f"({','.join(PARAM_NAMES)}), got {len(parts)}"
        )
    return PgpsParams.from_vector([float(p) for p in parts])


def parse_dims(raw: str) -> tuple[int, int]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise CliError(f"--dims needs two entries like 'alpha,mu', got {raw!r}")
    dims = []
    for part in parts:
        if part in PARAM_NAMES:
            dims.append(PARAM_NAMES.index(part))
        else:
            try:
                dims.append(int(part))
            except ValueError:
                raise CliError(
                    f"unknown dimension {part!r}; use an index 0..5 or one of "
                    f"{', '.join(PARAM_NAMES)}"
                ) from None
    return dims[0], dims[1]


def _metric(name: str) -> str:
    if name not in METRIC_ALIASES:
        raise CliError(f"unknown metric {name!r}; use one of {sorted(METRIC_ALIASES)}")
    return METRIC_ALIASES[name]


def _outdir(settings: Settings) -> str:
    out = settings.get("out", str, "out")
    os.makedirs(out, exist_ok=True)
    return out


def _require_file(path, what: str) -> str:
    if path is None:
        raise CliError(f"missing required {what}")
    if not os.path.exists(path):
        raise CliError(f"{what} not found: {path}")
    return path


def _load_target(path):
    try:
        return io.load_feature_matrix(path)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from None


# -- commands -----------------------------------------------------------------


def cmd_generate(settings: Settings) -> int:
    preset = settings.get("preset", str, None)
    params_raw = settings.get("params", str, None)
    if preset is not None and params_raw is not None:
        raise CliError("give either --preset or --params, not both")
    if params_raw is not None:
        params = parse_params(params_raw)
    else:
        preset = preset or "data1"
        if preset not in SYNTHETIC_PRESETS:
            raise CliError(
                f"unknown preset {preset!r}; available: "
                f"{', '.join(sorted(SYNTHETIC_PRESETS, key=lambda k: int(k[4:])))}"
            )
        params = SYNTHETIC_PRESETS[preset]
    steps = settings.get("steps", int, 3600)
    warmup = settings.get("warmup", int, 200)
    seed = settings.get("seed", int, 0)
    event_log = settings.get("event_log", _cast_bool, False)
    out = _outdir(settings)

    config = SimConfig(steps=steps, warmup_steps=warmup,
                       seed=derive_seed(seed, "simulation"))
    trace = run_simulation(params, config, track_events=event_log,
                           engine="reference" if event_log else "auto")
    trace_path = os.path.join(out, "trace.csv")
    io.write_trace_csv(trace, trace_path)
    meta = io.trace_metadata(trace)
    meta["command"] = "generate"
    meta["seed"] = seed
    meta["preset"] = preset
    io.write_json(meta, os.path.join(out, "trace_meta.json"))
    written = [trace_path, os.path.join(out, "trace_meta.json")]
    if event_log:
        events_path = os.path.join(out, "events.csv")
        io.write_events_csv(trace.events, events_path)
        written.append(events_path)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_calibrate(settings: Settings) -> int:
    target_path = _require_file(settings.get("target", str, None), "target file (--target)")
    features = settings.get("features", parse_feature_list, (1, 2, 3, 4, 5, 6))
    if isinstance(features, str):
        features = parse_feature_list(features)
    budget = settings.get("budget", int, 2000)
    replicates = settings.get("replicates", int, 1)
    metric = _metric(settings.get("metric", str, "w"))
    agg = settings.get("agg", str, AGG_MAX)
    norm = settings.get("norm", str, NORM_TARGET)
    popsize = settings.get("popsize", int, 40)
    seed = settings.get("seed", int, 0)
    out = _outdir(settings)
    if budget < popsize:
        raise CliError(f"budget {budget} is below the population size {popsize}")

    target = _load_target(target_path)
    try:
        spec = ObjectiveSpec(feature_ids=features, metric=metric,
                             aggregation=agg, normalization=norm,
                             replicates=replicates)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    for fid in spec.feature_ids:
        if fid not in target:
            raise CliError(f"target file lacks feature f{fid} required by --features")

    steps = settings.get("steps", int, target.length)
    warmup = settings.get("warmup", int, 200)
    sim_config = SimConfig(steps=steps, warmup_steps=warmup)
    result = calibrate(target, spec, DEFAULT_SEARCH_SPACE, budget=budget,
                       seed=seed, sim_config=sim_config, popsize=popsize)

    payload = result.as_dict()
    payload["command"] = "calibrate"
    payload["objective"] = {
        "features": list(spec.feature_ids),
        "metric": spec.metric,
        "aggregation": spec.aggregation,
        "normalization": spec.normalization,
        "replicates": spec.replicates,
    }
    payload["target"] = os.path.basename(target_path)
    payload["budget"] = budget
    payload["popsize"] = popsize
    io.write_json(payload, os.path.join(out, "calibration.json"))

    history_rows = ["iteration,best_value"]
    history_rows += [f"{i + 1},{float(v)!r}" for i, v in enumerate(result.history)]
    io.atomic_write_text(os.path.join(out, "history.csv"),
                         "\n".join(history_rows) + "\n")

    best_trace = run_simulation(
        result.best_params,
        replace(sim_config, seed=derive_seed(seed, "simulation"), replicate_index=0),
    )
    io.write_trace_csv(best_trace, os.path.join(out, "best_trace.csv"))
    io.write_json(io.trace_metadata(best_trace),
                  os.path.join(out, "best_trace_meta.json"))

    for name in ("calibration.json", "history.csv", "best_trace.csv",
                 "best_trace_meta.json"):
        print(f"wrote {os.path.join(out, name)}")
    print(f"best value {result.best_value!r} after {result.evaluations_used} evaluations")
    return 0


def cmd_evaluate(settings: Settings) -> int:
    target_path = _require_file(settings.get("target", str, None), "target file (--target)")
    simulated_path = _require_file(settings.get("simulated", str, None),
                                   "simulated file (--simulated)")
    out = _outdir(settings)
    target = _load_target(target_path)
    candidate = _load_target(simulated_path)
    missing = [fid for fid in target.feature_ids if fid not in candidate]
    if missing:
        raise CliError(
            "simulated file lacks features required by the target: "
            + ", ".join(f"f{fid}" for fid in missing)
        )
    report = validation_report(target, candidate)
    payload = report.as_dict()
    payload["command"] = "evaluate"
    payload["target"] = os.path.basename(target_path)
    payload["simulated"] = os.path.basename(simulated_path)
    io.write_json(payload, os.path.join(out, "evaluation.json"))
    print(f"wrote {os.path.join(out, 'evaluation.json')}")
    print(f"mean W {report.mean_w!r}")
    print(f"mean MSE {report.mean_mse!r}")
    return 0


def cmd_grid(settings: Settings) -> int:
    resolution = settings.get("resolution", int, 100)
    q = settings.get("q", float, 0.10)
    dims_raw = settings.get("dims", str, "alpha,mu")
    dims = parse_dims(dims_raw) if isinstance(dims_raw, str) else dims_raw
    steps = settings.get("steps", int, 1200)
    warmup = settings.get("warmup", int, 200)
    replicates = settings.get("replicates", int, 1)
    metric = _metric(settings.get("metric", str, "w"))
    norm = settings.get("norm", str, NORM_TARGET)
    seed = settings.get("seed", int, 0)
    workers = settings.get("workers", int, None)
    target_path = settings.get("target", str, None)
    out = _outdir(settings)

    ranges = tuple(DEFAULT_SEARCH_SPACE.bounds[d] for d in dims)
    try:
        spec = GridSpec(dims=dims, ranges=ranges,
                        resolution=(resolution, resolution))
    except ValueError as exc:
        raise CliError(str(exc)) from None

    if target_path is not None:
        target = _load_target(_require_file(target_path, "target file (--target)"))
        sim_steps = settings.get("steps", int, target.length)
        sim_config = SimConfig(steps=sim_steps, warmup_steps=warmup)
    else:
        # self-calibration study: the target comes from the fixed parameters
        sim_config = SimConfig(steps=steps, warmup_steps=warmup)
        target_trace = run_simulation(
            spec.fixed, replace(sim_config, seed=derive_seed(seed, "target"))
        )
        target = extract(target_trace)

    report = grid_evaluate(
        spec, target, seed=derive_seed(seed, "simulation"),
        metric=metric, normalization=norm, replicates=replicates,
        sim_config=sim_config, workers=workers,
    )
    analysis = overlap_analysis(report, q=q)

    io.write_grid_csv(report, analysis, os.path.join(out, "grid.csv"))
    io.write_grid_summary_csv(analysis, os.path.join(out, "grid_summary.csv"))
    meta = analysis.as_dict()
    meta["command"] = "grid"
    meta["seed"] = seed
    meta["dims"] = list(spec.dim_names)
    meta["resolution"] = list(spec.resolution)
    meta["metric"] = metric
    meta["normalization"] = norm
    meta["replicates"] = replicates
    meta["steps"] = sim_config.steps
    meta["target"] = os.path.basename(target_path) if target_path else "self"
    io.write_json(meta, os.path.join(out, "grid_meta.json"))

    for name in ("grid.csv", "grid_summary.csv", "grid_meta.json"):
        print(f"wrote {os.path.join(out, name)}")
    for k in range(1, 7):
        beta = "" if k == 1 else f" beta={analysis.betas[k - 2]:.4f}"
        print(f"K={k} cells={analysis.cardinalities[k - 1]} "
              f"P={analysis.probabilities[k - 1]:.4f}{beta}")
    return 0


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marketcal",
        description="Market simulation, multi-feature calibration, and "
                    "parameter identifiability analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--config", help="key=value settings file; flags win")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--out", help="output directory (default ./out)")
        p.add_argument("--workers", type=int,
                       help="parallel processes for cell evaluation")

    p = sub.add_parser("generate", help="simulate a trace from preset or explicit parameters")
    shared(p)
    p.add_argument("--preset", help="built-in parameter set data1..data10")
    p.add_argument("--params", help="six comma-separated values "
                                    f"({','.join(PARAM_NAMES)})")
    p.add_argument("--steps", type=int, help="recorded steps (default 3600)")
    p.add_argument("--warmup", type=int, help="discarded warm-up steps (default 200)")
    p.add_argument("--event-log", dest="event_log", action="store_const",
                   const=True, help="also write the order event log")

    p = sub.add_parser("calibrate", help="fit parameters to a target file")
    shared(p)
    p.add_argument("--target", help="target trace or feature CSV")
    p.add_argument("--features", help="comma list like 1,2,3 (default all six)")
    p.add_argument("--budget", type=int, help="candidate evaluations (default 2000)")
    p.add_argument("--replicates", type=int, help="simulations per candidate (default 1)")
    p.add_argument("--metric", choices=sorted(METRIC_ALIASES), help="w or mse")
    p.add_argument("--agg", choices=[AGG_MAX, AGG_MEAN], help="feature aggregation")
    p.add_argument("--norm", choices=[NORM_TARGET, NORM_JOINT, NORM_NONE],
                   help="series normalization")

    p = sub.add_parser("evaluate", help="score a simulated file against a target")
    shared(p)
    p.add_argument("--target", help="target trace or feature CSV")
    p.add_argument("--simulated", help="simulated trace or feature CSV")

    p = sub.add_parser("grid", help="evaluate a parameter grid and the overlap analysis")
    shared(p)
    p.add_argument("--target", help="target file (default: simulate from defaults)")
    p.add_argument("--resolution", type=int, help="cells per dimension (default 100)")
    p.add_argument("--q", type=float, help="top fraction per feature (default 0.10)")
    p.add_argument("--dims", help="two grid dimensions, names or indices (default alpha,mu)")
    return parser


COMMANDS = {
    "generate": cmd_generate,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "grid": cmd_grid,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings(args.command, args)
        return COMMANDS[args.command](settings)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
