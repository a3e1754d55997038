"""Command-line entry point.

Verbs: validate, plan, simulate, calibrate, sweep, compare.  Every command
takes --scenario pointing at a scenario file; outputs land in --out (or the
scenario's output_dir).  Exit codes: 0 success, 1 domain violation or fit
failure, 2 unreadable/unparseable configuration.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import (
    ConfigError,
    ScenarioConfig,
    load_observations,
    load_perf_model,
    load_scenario,
    save_perf_model,
)
from .costs import ROUNDING_CONTINUOUS, compare
from .perf import CalibrationError, PerfModel, SimulationError, calibrate, simulate, stage_duration
from .planner import PlanningError, parse_config_notation, plan_execution, validate_config
from .pipeline import validate_pipeline
from .reports import (
    CSV_FORMAT,
    cost_summary,
    fit_summary,
    plan_table,
    timeline_summary,
    write_breakdown,
    write_cost_report,
    write_phase_shares,
    write_plan,
    write_residuals,
    write_sweep,
    write_timeline,
)
from .topology import Cluster, NodeRole, NodeSpec, plan_placement, validate_placement

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2


def _perf_model(scenario: ScenarioConfig, args) -> PerfModel:
    model = scenario.perf_model
    if getattr(args, "model", None):
        model = load_perf_model(Path(args.model))
    if args.interpolate_efficiency and not model.interpolate:
        model = replace(model, interpolate=True)
    return model


def _out_dir(scenario: ScenarioConfig, args) -> Path:
    out = Path(args.out) if args.out else (scenario.output_dir or Path("out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_violations(report) -> None:
    for v in report.errors:
        print(str(v))
    for v in report.warnings:
        print(str(v), file=sys.stderr)


def cmd_validate(args) -> int:
    scenario = load_scenario(Path(args.scenario))
    report = validate_pipeline(scenario.pipeline)
    report.extend(validate_config(scenario.spark_config, scenario.cluster))
    if scenario.services is not None:
        placement = plan_placement(scenario.cluster, scenario.services)
        report.extend(validate_placement(scenario.cluster, scenario.pipeline, placement))
    _print_violations(report)
    if report.ok:
        print(f"scenario {scenario.name!r}: valid "
              f"({len(report.warnings)} warning(s))")
        return EXIT_OK
    return EXIT_VIOLATION


def _plan(scenario: ScenarioConfig):
    placement = None
    if scenario.services is not None:
        placement = plan_placement(scenario.cluster, scenario.services)
    return plan_execution(scenario.pipeline, scenario.batch, scenario.cluster,
                          scenario.spark_config, placement=placement)


def cmd_plan(args) -> int:
    scenario = load_scenario(Path(args.scenario))
    plan = _plan(scenario)
    out = _out_dir(scenario, args)
    path = write_plan(plan, out)
    print(plan_table(plan))
    print(f"plan written to {path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = load_scenario(Path(args.scenario))
    model = _perf_model(scenario, args)
    plan = _plan(scenario)
    timeline = simulate(plan, model)
    out = _out_dir(scenario, args)
    paths = [
        write_timeline(timeline, out, args.format),
        write_breakdown(timeline, plan, out, args.format),
        write_phase_shares(timeline, out, args.format),
    ]
    report = compare(timeline, scenario.cluster, scenario.batch, scenario.pricing,
                     service_minutes_per_sample=args.service_minutes_per_sample)
    paths.append(write_cost_report(report, out, args.format))
    print(timeline_summary(timeline))
    print(cost_summary(report))
    print("wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def cmd_compare(args) -> int:
    scenario = load_scenario(Path(args.scenario))
    model = _perf_model(scenario, args)
    plan = _plan(scenario)
    timeline = simulate(plan, model)
    report = compare(timeline, scenario.cluster, scenario.batch, scenario.pricing,
                     service_minutes_per_sample=args.service_minutes_per_sample,
                     rounding=args.rounding)
    out = _out_dir(scenario, args)
    path = write_cost_report(report, out, args.format)
    print(cost_summary(report))
    print(f"cost report written to {path}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    scenario = load_scenario(Path(args.scenario))
    obs_path = Path(args.observations) if args.observations else scenario.observations_path
    if obs_path is None:
        raise ConfigError("no observations file: give --observations or set it in the scenario")
    observations = load_observations(obs_path)
    model = _perf_model(scenario, args)
    fit = calibrate(observations, scenario.pipeline, model)
    out = _out_dir(scenario, args)
    model_path = out / "fitted_model.json"
    save_perf_model(fit.model, model_path)
    residuals_path = write_residuals(fit, out, args.format)
    print(fit_summary(fit))
    print(f"fitted model written to {model_path}, residuals to {residuals_path}")
    return EXIT_OK


def _sweep_cluster(base: Cluster, nodes: int, cores: int | None = None) -> Cluster:
    """A homogeneous cluster of ``nodes`` copies of the base manager's spec."""
    template = base.manager
    specs = []
    for i in range(nodes):
        specs.append(NodeSpec(
            id=f"node-{i + 1:02d}",
            cores=cores if cores is not None else template.cores,
            ram_gb=template.ram_gb,
            hourly_price=template.hourly_price,
            role=NodeRole.MANAGER if i == 0 else NodeRole.WORKER,
        ))
    return Cluster(specs, id=f"{base.id}-x{nodes}")


def _subset_duration(scenario, model, stage_ids, sizes, nodes, cores) -> float:
    total = 0.0
    for size in sizes:
        for sid in stage_ids:
            stage = scenario.pipeline.stage(sid)
            total += stage_duration(stage, size, nodes, cores, model=model)
    return total


def cmd_sweep(args) -> int:
    scenario = load_scenario(Path(args.scenario))
    model = _perf_model(scenario, args)
    base_cores = scenario.cluster.manager.cores

    stage_ids = None
    if args.stages:
        stage_ids = [s.strip() for s in args.stages.replace("+", ",").split(",") if s.strip()]
        for sid in stage_ids:
            scenario.pipeline.stage(sid)  # raises KeyError for unknown stages
    if args.sample:
        sizes = [s.size_gb for s in scenario.batch if s.id == args.sample]
        if not sizes:
            raise KeyError(f"no sample named {args.sample!r} in the batch")
    else:
        sizes = [s.size_gb for s in scenario.batch]
    size_total = sum(sizes)
    stages_label = "+".join(stage_ids) if stage_ids else "ALL"

    rows = []
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    for raw in values:
        if args.axis == "config":
            cfg = parse_config_notation(raw)
            nodes = len(scenario.cluster.nodes)
            cores = base_cores
            scenario_cfg = cfg
        else:
            value = int(raw)
            if args.axis == "nodes":
                nodes, cores = value, base_cores
            else:  # cores
                nodes, cores = 1, value
            scenario_cfg = scenario.spark_config

        if stage_ids is not None:
            predicted = _subset_duration(scenario, model, stage_ids, sizes, nodes, cores)
        else:
            cluster = (_sweep_cluster(scenario.cluster, nodes, cores)
                       if args.axis != "config" else scenario.cluster)
            plan = plan_execution(scenario.pipeline, scenario.batch, cluster, scenario_cfg)
            predicted = simulate(plan, model).makespan_min
        rows.append([args.axis, raw, nodes, cores, scenario_cfg.notation, stages_label,
                     size_total, predicted])

    out = _out_dir(scenario, args)
    path = write_sweep(rows, out, args.format)
    for row in rows:
        print(f"{args.axis}={row[1]}: {row[-1]:.1f} min")
    print(f"sweep written to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pipecast",
        description="Plan, simulate and price hybrid distributed pipelines.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", help="output directory (default: scenario's or ./out)")
        p.add_argument("--format", choices=["csv", "json"], default=CSV_FORMAT,
                       help="data file format")
        p.add_argument("--interpolate-efficiency", action="store_true",
                       help="interpolate scale-out efficiency for uncalibrated node counts")
        p.add_argument("--model", help="perf model JSON overriding the scenario's")

    p = sub.add_parser("validate", help="run all validators")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plan", help="compile the execution plan")
    common(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="plan, time and price the scenario")
    common(p)
    p.add_argument("--service-minutes-per-sample", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit the perf model to observations")
    common(p)
    p.add_argument("--observations", help="observations CSV (default: scenario's)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sweep", help="predict across nodes, cores or configs")
    common(p)
    p.add_argument("--axis", choices=["nodes", "cores", "config"], required=True)
    p.add_argument("--values", required=True,
                   help="comma-separated axis values (config values in a/b/c/d notation)")
    p.add_argument("--stages", help="restrict to a stage subset, e.g. 'BWA/MD+BQSRP' "
                                    "(predictions are then compute-only)")
    p.add_argument("--sample", help="restrict to one sample id (default: whole batch)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="cost comparison against the managed service")
    common(p)
    p.add_argument("--service-minutes-per-sample", type=float, default=None)
    p.add_argument("--rounding", choices=["continuous", "ceil-hour"],
                   default=ROUNDING_CONTINUOUS)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PlanningError, SimulationError, CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except KeyError as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
