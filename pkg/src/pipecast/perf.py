"""Duration model, timeline simulation and parameter calibration.

Wrapped stages never speed up: their duration is overhead plus rate times
input size, whatever the cluster looks like.  Distributed stages scale from
the baseline point (one node, ``baseline_cores`` cores) with two factors:

* scale-up: more cores on one node divide the time, but only up to
  ``core_cap`` cores (the observed deployments stop benefiting there);
* scale-out: more nodes divide the time too, discounted by a per-node-count
  efficiency in (0, 1] that captures distribution overhead.

``calibrate`` fits core_cap (grid search), the per-node-count efficiencies
and a rate scale for the observed stages against measured durations, and
reports every residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .pipeline import ExecMode, Pipeline, Stage
from .planner import DataTransfer, ExecutionPlan, StageRun

CORE_CAP_GRID = (8, 16, 24, 32)


class SimulationError(Exception):
    """Raised when a plan cannot be timed with the given model."""


class CalibrationError(Exception):
    """Raised when observations cannot determine the requested parameters."""


@dataclass(frozen=True)
class PerfModel:
    """Resource-dependent timing parameters.

    ``scaleout_efficiency`` maps node count to the efficiency factor.  Node
    counts without an entry are an error unless ``interpolate`` is set, in
    which case missing counts are linearly interpolated between the nearest
    known counts (constant beyond the known range).  ``rate_overrides``
    replaces a stage's baseline rate; ``per_stage_core_cap`` replaces the
    global core cap for stages known to stop scaling earlier.
    """

    baseline_cores: int = 8
    core_cap: int = 16
    scaleout_efficiency: dict[int, float] = field(default_factory=lambda: {1: 1.0})
    staging_bandwidth_gb_per_min: float = 1.0
    rate_overrides: dict[str, float] = field(default_factory=dict)
    per_stage_core_cap: dict[str, int] = field(default_factory=dict)
    interpolate: bool = False

    def __post_init__(self) -> None:
        if self.baseline_cores < 1:
            raise ValueError(f"baseline_cores must be >= 1, got {self.baseline_cores}")
        if self.core_cap < self.baseline_cores:
            raise ValueError(
                f"core_cap ({self.core_cap}) must be >= baseline_cores ({self.baseline_cores})")
        if not self.staging_bandwidth_gb_per_min > 0:
            raise ValueError("staging_bandwidth_gb_per_min must be positive")
        eff = dict(self.scaleout_efficiency)
        eff.setdefault(1, 1.0)
        if eff[1] != 1.0:
            raise ValueError(f"efficiency at 1 node must be 1.0, got {eff[1]}")
        for n, e in eff.items():
            if n < 1:
                raise ValueError(f"efficiency node counts must be >= 1, got {n}")
            if not 0 < e <= 1:
                raise ValueError(f"efficiency({n}) must be in (0, 1], got {e}")
        object.__setattr__(self, "scaleout_efficiency", eff)
        for stage_id, cap in self.per_stage_core_cap.items():
            if cap < 1:
                raise ValueError(f"per-stage core cap for {stage_id!r} must be >= 1, got {cap}")

    def rate_for(self, stage: Stage) -> float:
        return self.rate_overrides.get(stage.id, stage.rate_min_per_gb)

    def core_cap_for(self, stage: Stage) -> int:
        return self.per_stage_core_cap.get(stage.id, self.core_cap)

    def efficiency(self, nodes: int) -> float:
        if nodes in self.scaleout_efficiency:
            return self.scaleout_efficiency[nodes]
        if not self.interpolate:
            raise SimulationError(
                f"no scale-out efficiency calibrated for {nodes} nodes; "
                "enable interpolation or calibrate that node count")
        known = sorted(self.scaleout_efficiency)
        if nodes <= known[0]:
            return self.scaleout_efficiency[known[0]]
        if nodes >= known[-1]:
            return self.scaleout_efficiency[known[-1]]
        for lo, hi in zip(known, known[1:]):
            if lo < nodes < hi:
                e_lo = self.scaleout_efficiency[lo]
                e_hi = self.scaleout_efficiency[hi]
                return e_lo + (e_hi - e_lo) * (nodes - lo) / (hi - lo)
        raise AssertionError("unreachable")


def stage_duration(
    stage: Stage,
    size_gb: float,
    nodes: int,
    cores_per_node: int,
    cfg=None,
    model: PerfModel | None = None,
) -> float:
    """Minutes to process ``size_gb`` through one stage.

    ``cfg`` (the driver/executor resource settings) is accepted for the
    record but deliberately ignored: measured times were not sensitive to it.
    """
    if model is None:
        model = PerfModel()
    if size_gb < 0:
        raise ValueError(f"size_gb must be >= 0, got {size_gb}")
    rate = model.rate_for(stage)
    if stage.exec_mode is ExecMode.CENTRALIZED_WRAPPED:
        return stage.fixed_overhead_min + rate * size_gb
    usable_cores = min(cores_per_node, model.core_cap_for(stage))
    return stage.fixed_overhead_min + rate * size_gb * model.baseline_cores / (
        nodes * usable_cores * model.efficiency(nodes))


@dataclass(frozen=True)
class TimelineEntry:
    index: int
    kind: str                    # "StageRun" or "DataTransfer"
    label: str                   # stage id or dataset label
    phase: str | None            # reporting phase for stage runs
    sample_ids: tuple[str, ...]
    size_gb: float
    start_min: float
    end_min: float

    @property
    def duration_min(self) -> float:
        return self.end_min - self.start_min


@dataclass(frozen=True)
class Timeline:
    entries: tuple[TimelineEntry, ...]
    makespan_min: float
    compute_min: float                 # total stage-run minutes
    staging_min: float                 # total data-transfer minutes
    stage_minutes: dict[str, float]
    phase_minutes: dict[str, float]

    def phase_shares(self) -> dict[str, float]:
        """Share of compute time per phase, in percent (staging excluded)."""
        if self.compute_min <= 0:
            return {}
        return {p: 100.0 * m / self.compute_min for p, m in self.phase_minutes.items()}


def simulate(plan: ExecutionPlan, model: PerfModel) -> Timeline:
    """Sequentially accumulate step durations into a timeline."""
    entries: list[TimelineEntry] = []
    clock = 0.0
    compute = 0.0
    staging = 0.0
    stage_minutes: dict[str, float] = {}
    phase_minutes: dict[str, float] = {}
    for i, step in enumerate(plan.steps):
        if isinstance(step, StageRun):
            minutes = stage_duration(
                step.stage, step.size_gb, len(step.node_ids), step.cores_per_node, model=model)
            label = step.stage.id
            phase = step.stage.phase_label
            samples = step.sample_ids
            size = step.size_gb
            compute += minutes
            stage_minutes[label] = stage_minutes.get(label, 0.0) + minutes
            phase_minutes[phase] = phase_minutes.get(phase, 0.0) + minutes
        else:
            transfer: DataTransfer = step
            minutes = transfer.size_gb / model.staging_bandwidth_gb_per_min
            label = transfer.dataset
            phase = None
            samples = (transfer.dataset,)
            size = transfer.size_gb
            staging += minutes
        entries.append(TimelineEntry(
            index=i,
            kind=step.kind,
            label=label,
            phase=phase,
            sample_ids=samples,
            size_gb=size,
            start_min=clock,
            end_min=clock + minutes,
        ))
        clock += minutes
    return Timeline(
        entries=tuple(entries),
        makespan_min=clock,
        compute_min=compute,
        staging_min=staging,
        stage_minutes=stage_minutes,
        phase_minutes=phase_minutes,
    )


@dataclass(frozen=True)
class Observation:
    """One measured duration for a subset of stages at a resource point."""

    nodes: int
    cores_per_node: int
    config: str
    stage_ids: tuple[str, ...]
    size_gb: float
    measured_min: float

    def __post_init__(self) -> None:
        if not self.measured_min > 0:
            raise ValueError(f"measured_min must be > 0, got {self.measured_min}")
        if self.nodes < 1 or self.cores_per_node < 1:
            raise ValueError("nodes and cores_per_node must be >= 1")
        if self.size_gb < 0:
            raise ValueError(f"size_gb must be >= 0, got {self.size_gb}")


@dataclass(frozen=True)
class ObservationFit:
    observation: Observation
    predicted_min: float
    relative_error: float


@dataclass(frozen=True)
class FitResult:
    model: PerfModel
    core_cap: int
    rate_scale: float | None            # None when no single-node observations anchor it
    fitted_efficiencies: dict[int, float]
    residuals: tuple[ObservationFit, ...]
    sse: float

    @property
    def max_relative_error(self) -> float:
        return max((abs(r.relative_error) for r in self.residuals), default=0.0)


def _observation_parts(obs: Observation, pipeline: Pipeline, model: PerfModel, cap: int):
    """Split an observation's prediction into fixed, wrapped and distributed parts.

    Returns (fixed_min, wrapped_min, dist_min) at efficiency 1, so that the
    prediction is fixed + s*(wrapped + dist/eff(nodes)) for rate scale s.
    """
    fixed = 0.0
    wrapped = 0.0
    dist = 0.0
    for sid in obs.stage_ids:
        stage = pipeline.stage(sid)
        rate = model.rate_for(stage)
        fixed += stage.fixed_overhead_min
        if stage.exec_mode is ExecMode.CENTRALIZED_WRAPPED:
            wrapped += rate * obs.size_gb
        else:
            stage_cap = model.per_stage_core_cap.get(stage.id, cap)
            usable = min(obs.cores_per_node, stage_cap)
            dist += rate * obs.size_gb * model.baseline_cores / (obs.nodes * usable)
    return fixed, wrapped, dist


def calibrate(
    observations: list[Observation],
    pipeline: Pipeline,
    seed: PerfModel,
) -> FitResult:
    """Least-squares fit of the scale-up cap, scale-out efficiencies and a
    rate scale for the observed stages.

    The core cap is grid-searched over {8, 16, 24, 32}.  The rate scale is
    anchored by single-node observations only (without them it stays 1) and
    is written back as per-stage rate overrides.  Each multi-node count seen
    in the observations gets its efficiency fitted in closed form.  Ties in
    the grid search prefer the scale closest to 1, then the seed's cap.
    """
    if not observations:
        raise CalibrationError("no observations given; nothing can be fitted")
    for obs in observations:
        for sid in obs.stage_ids:
            try:
                pipeline.stage(sid)
            except KeyError as exc:
                raise CalibrationError(str(exc)) from exc

    single = [o for o in observations if o.nodes == 1]
    multi_counts = sorted({o.nodes for o in observations if o.nodes > 1})

    best: tuple[float, float, float] | None = None
    best_fit: dict | None = None
    for cap in CORE_CAP_GRID:
        if cap < seed.baseline_cores:
            continue
        parts = {id(o): _observation_parts(o, pipeline, seed, cap) for o in observations}

        # Rate scale from single-node points: o = fixed + s*(wrapped + dist).
        scale: float | None = None
        if single:
            num = 0.0
            den = 0.0
            for o in single:
                fixed, wrapped, dist = parts[id(o)]
                mass = wrapped + dist
                num += mass * (o.measured_min - fixed)
                den += mass * mass
            if den == 0.0:
                raise CalibrationError(
                    "rate_scale is unfittable: single-node observations have no rate mass")
            scale = num / den
        s = 1.0 if scale is None else scale

        # Efficiency per observed multi-node count: o = fixed + s*wrapped + s*dist*u,
        # with u = 1/efficiency, linear least squares in u, clamped into (0, 1].
        efficiencies: dict[int, float] = {}
        for n in multi_counts:
            group = [o for o in observations if o.nodes == n]
            num = 0.0
            den = 0.0
            for o in group:
                fixed, wrapped, dist = parts[id(o)]
                r = s * dist
                num += r * (o.measured_min - fixed - s * wrapped)
                den += r * r
            if den == 0.0:
                raise CalibrationError(
                    f"efficiency({n}) is unfittable: observations at {n} nodes have no "
                    "distributed rate mass")
            u = num / den
            if u <= 0:
                raise CalibrationError(
                    f"efficiency({n}) is unfittable: measured times imply a non-positive "
                    "efficiency")
            efficiencies[n] = min(1.0, 1.0 / u)

        sse = 0.0
        for o in observations:
            fixed, wrapped, dist = parts[id(o)]
            eff = 1.0 if o.nodes == 1 else efficiencies[o.nodes]
            pred = fixed + s * wrapped + s * dist / eff
            sse += (pred - o.measured_min) ** 2

        key = (sse, abs(s - 1.0), abs(cap - seed.core_cap))
        if best is None or key < best:
            best = key
            best_fit = {"cap": cap, "scale": scale, "efficiencies": efficiencies}

    if best_fit is None:
        raise CalibrationError(
            f"core_cap is unfittable: every grid value {CORE_CAP_GRID} is below "
            f"baseline_cores ({seed.baseline_cores})")
    cap = best_fit["cap"]
    scale = best_fit["scale"]

    overrides = dict(seed.rate_overrides)
    if scale is not None:
        observed_stage_ids = sorted({sid for o in observations for sid in o.stage_ids})
        for sid in observed_stage_ids:
            stage = pipeline.stage(sid)
            overrides[sid] = seed.rate_for(stage) * scale

    efficiency_map = dict(seed.scaleout_efficiency)
    efficiency_map.update(best_fit["efficiencies"])
    fitted = replace(
        seed,
        core_cap=cap,
        scaleout_efficiency=dict(sorted(efficiency_map.items())),
        rate_overrides=overrides,
    )

    residuals = []
    sse = 0.0
    for o in observations:
        pred = predict_observation(o, pipeline, fitted)
        rel = (pred - o.measured_min) / o.measured_min
        residuals.append(ObservationFit(observation=o, predicted_min=pred, relative_error=rel))
        sse += (pred - o.measured_min) ** 2
    return FitResult(
        model=fitted,
        core_cap=cap,
        rate_scale=scale,
        fitted_efficiencies=dict(best_fit["efficiencies"]),
        residuals=tuple(residuals),
        sse=sse,
    )


def predict_observation(obs: Observation, pipeline: Pipeline, model: PerfModel) -> float:
    """Model prediction for an observation's stage subset (compute only)."""
    return sum(
        stage_duration(pipeline.stage(sid), obs.size_gb, obs.nodes, obs.cores_per_node,
                       model=model)
        for sid in obs.stage_ids)
