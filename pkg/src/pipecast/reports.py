"""Report emission: CSV/JSON data files and plain-text console tables.

Data files carry full-precision floats and never include timestamps, so two
runs over the same inputs are byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .costs import CostReport
from .perf import FitResult, Timeline
from .planner import ExecutionPlan, StageRun
from .pipeline import StageScope

CSV_FORMAT = "csv"
JSON_FORMAT = "json"


def format_table(headers: list[str], rows: list[list]) -> str:
    cells = [[str(c) for c in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        for i, c in enumerate(row):
            widths[i] = max(widths[i], len(c))
    def fmt(row):
        return "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in cells)
    return "\n".join(lines)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _write_rows(path_base: Path, fmt: str, header: list[str], rows: list[list]) -> Path:
    if fmt == JSON_FORMAT:
        path = path_base.with_suffix(".json")
        _write_json(path, [dict(zip(header, row)) for row in rows])
    else:
        path = path_base.with_suffix(".csv")
        _write_csv(path, header, rows)
    return path


# ---------------------------------------------------------------- timeline

TIMELINE_HEADER = ["step", "kind", "label", "samples", "size_gb",
                   "start_min", "end_min", "duration_min"]


def timeline_rows(timeline: Timeline) -> list[list]:
    return [
        [e.index, e.kind, e.label, " ".join(e.sample_ids), e.size_gb,
         e.start_min, e.end_min, e.duration_min]
        for e in timeline.entries
    ]


def write_timeline(timeline: Timeline, out_dir: Path, fmt: str = CSV_FORMAT) -> Path:
    return _write_rows(out_dir / "timeline", fmt, TIMELINE_HEADER, timeline_rows(timeline))


BREAKDOWN_HEADER = ["sample", "stage", "phase", "size_gb", "duration_min"]


def breakdown_rows(timeline: Timeline, plan: ExecutionPlan) -> list[list]:
    """One row per sample and per-sample stage, then one row per batch stage."""
    rows = []
    for entry, step in zip(timeline.entries, plan.steps):
        if not isinstance(step, StageRun):
            continue
        if step.stage.scope is StageScope.PER_SAMPLE:
            sample = step.sample_ids[0] if step.sample_ids else "*"
        else:
            sample = "*"
        rows.append([sample, step.stage.id, step.stage.phase_label,
                     entry.size_gb, entry.duration_min])
    return rows


def write_breakdown(timeline: Timeline, plan: ExecutionPlan, out_dir: Path,
                    fmt: str = CSV_FORMAT) -> Path:
    return _write_rows(out_dir / "stage_breakdown", fmt, BREAKDOWN_HEADER,
                       breakdown_rows(timeline, plan))


PHASE_HEADER = ["phase", "minutes", "share_pct"]


def phase_rows(timeline: Timeline) -> list[list]:
    shares = timeline.phase_shares()
    return [[phase, timeline.phase_minutes[phase], shares[phase]]
            for phase in timeline.phase_minutes]


def write_phase_shares(timeline: Timeline, out_dir: Path, fmt: str = CSV_FORMAT) -> Path:
    return _write_rows(out_dir / "phase_shares", fmt, PHASE_HEADER, phase_rows(timeline))


def timeline_summary(timeline: Timeline) -> str:
    lines = [
        f"makespan: {timeline.makespan_min:.1f} min "
        f"({timeline.makespan_min / 60.0:.2f} h)",
        f"compute: {timeline.compute_min:.1f} min, staging: {timeline.staging_min:.1f} min",
    ]
    shares = timeline.phase_shares()
    if shares:
        rows = [[p, f"{timeline.phase_minutes[p]:.1f}", f"{s:.1f}"] for p, s in shares.items()]
        lines.append(format_table(["phase", "minutes", "share %"], rows))
    return "\n".join(lines)


# -------------------------------------------------------------------- plan

def plan_to_dict(plan: ExecutionPlan) -> dict:
    steps = []
    for step in plan.steps:
        if isinstance(step, StageRun):
            steps.append({
                "kind": step.kind,
                "stage": step.stage.id,
                "samples": list(step.sample_ids),
                "nodes": list(step.node_ids),
                "effective_cores": step.effective_cores,
                "cores_per_node": step.cores_per_node,
                "size_gb": step.size_gb,
            })
        else:
            steps.append({
                "kind": step.kind,
                "dataset": step.dataset,
                "from": step.from_loc.value,
                "to": step.to_loc.value,
                "size_gb": step.size_gb,
            })
    return {
        "pipeline": plan.metadata.pipeline_id,
        "cluster": plan.metadata.cluster_id,
        "config": plan.metadata.config,
        "sample_count": plan.metadata.sample_count,
        "steps": steps,
    }


def write_plan(plan: ExecutionPlan, out_dir: Path) -> Path:
    path = out_dir / "plan.json"
    _write_json(path, plan_to_dict(plan))
    return path


def plan_table(plan: ExecutionPlan) -> str:
    rows = []
    for i, step in enumerate(plan.steps):
        if isinstance(step, StageRun):
            rows.append([i, step.kind, step.stage.id, " ".join(step.sample_ids),
                         " ".join(step.node_ids), f"{step.size_gb:g}"])
        else:
            rows.append([i, step.kind, step.dataset,
                         f"{step.from_loc.value}->{step.to_loc.value}", "-",
                         f"{step.size_gb:g}"])
    return format_table(["step", "kind", "what", "detail", "nodes", "size_gb"], rows)


# -------------------------------------------------------------------- cost

def cost_report_to_dict(report: CostReport) -> dict:
    return {
        "currency": report.currency,
        "cluster_cost": report.cluster_cost,
        "service_cost": report.service_cost,
        "cost_ratio": report.cost_ratio,
        "cluster_makespan_min": report.cluster_makespan_min,
        "service_makespan_min": report.service_makespan_min,
        "time_ratio": report.time_ratio,
        "per_sample": [
            {"sample": r.sample_id, "size_gb": r.size_gb, "service_cost": r.service_cost,
             "cluster_minutes": r.cluster_minutes, "cluster_cost": r.cluster_cost}
            for r in report.per_sample
        ],
    }


COST_CSV_HEADER = ["sample", "size_gb", "service_cost", "cluster_minutes", "cluster_cost"]


def write_cost_report(report: CostReport, out_dir: Path, fmt: str = CSV_FORMAT) -> Path:
    if fmt == JSON_FORMAT:
        path = out_dir / "cost_report.json"
        _write_json(path, cost_report_to_dict(report))
        return path
    rows = [[r.sample_id, r.size_gb, r.service_cost, r.cluster_minutes, r.cluster_cost]
            for r in report.per_sample]
    rows.append(["TOTAL", sum(r.size_gb for r in report.per_sample),
                 report.service_cost, report.cluster_makespan_min, report.cluster_cost])
    path = out_dir / "cost_report.csv"
    _write_csv(path, COST_CSV_HEADER, rows)
    return path


def sig3(value: float) -> str:
    """Format to three significant figures, the precision used in summaries."""
    return f"{value:.3g}"


def cost_summary(report: CostReport) -> str:
    cur = report.currency
    lines = [
        f"cluster run: {cur} {report.cluster_cost:.2f} over "
        f"{report.cluster_makespan_min:.0f} min",
        f"managed service: {cur} {report.service_cost:.2f} over "
        f"{report.service_makespan_min:.0f} min",
    ]
    if report.cost_ratio is not None:
        lines.append(f"cost ratio (cluster/service): {sig3(report.cost_ratio)}")
    if report.time_ratio is not None:
        lines.append(f"time ratio (cluster/service): {sig3(report.time_ratio)}")
    return "\n".join(lines)


# ------------------------------------------------------------- calibration

RESIDUAL_HEADER = ["nodes", "cores_per_node", "config", "stages", "size_gb",
                   "measured_min", "predicted_min", "relative_error"]


def residual_rows(fit: FitResult) -> list[list]:
    return [
        [r.observation.nodes, r.observation.cores_per_node, r.observation.config,
         "+".join(r.observation.stage_ids), r.observation.size_gb,
         r.observation.measured_min, r.predicted_min, r.relative_error]
        for r in fit.residuals
    ]


def write_residuals(fit: FitResult, out_dir: Path, fmt: str = CSV_FORMAT) -> Path:
    return _write_rows(out_dir / "calibration_residuals", fmt, RESIDUAL_HEADER,
                       residual_rows(fit))


def fit_summary(fit: FitResult) -> str:
    lines = [f"core_cap: {fit.core_cap}"]
    if fit.rate_scale is not None:
        lines.append(f"rate_scale: {fit.rate_scale:.4f}")
    for n in sorted(fit.fitted_efficiencies):
        lines.append(f"efficiency({n}): {fit.fitted_efficiencies[n]:.4f}")
    lines.append(f"sse: {fit.sse:.4f}, max |relative error|: {fit.max_relative_error:.2%}")
    rows = [[r.observation.nodes, r.observation.cores_per_node,
             "+".join(r.observation.stage_ids), f"{r.observation.measured_min:g}",
             f"{r.predicted_min:.1f}", f"{r.relative_error:+.2%}"]
            for r in fit.residuals]
    lines.append(format_table(["nodes", "cores", "stages", "measured", "predicted", "error"],
                              rows))
    return "\n".join(lines)


# ------------------------------------------------------------------- sweep

SWEEP_HEADER = ["axis", "value", "nodes", "cores_per_node", "config", "stages",
                "size_gb", "predicted_min"]


def write_sweep(rows: list[list], out_dir: Path, fmt: str = CSV_FORMAT) -> Path:
    return _write_rows(out_dir / "sweep", fmt, SWEEP_HEADER, rows)
