"""Compile a pipeline, batch and cluster into an ordered execution plan.

The plan realizes the cluster execution flow: wrapped stages run on the
manager against its local file system, distributed stages run over all
worker nodes against the DFS, and a data-transfer step is inserted whenever
a dataset is not where the next stage needs it.  Each sample's per-sample
chain is planned contiguously (one iteration per sample); per-batch stages
follow as barriers over the whole batch.
"""

from __future__ import annotations

from dataclasses import dataclass

from .pipeline import Batch, DataLocation, ExecMode, Pipeline, Stage, StageScope, validate_pipeline
from .topology import Cluster, Placement, ServiceRole
from .validation import ERROR, WARNING, ValidationReport


class PlanningError(Exception):
    """Raised when inputs cannot be compiled into a plan."""


@dataclass(frozen=True)
class SparkResourceConfig:
    """Driver/executor resource settings, written driver_mem/executors/cores/executor_mem."""

    driver_mem_gb: float
    num_executors: int
    cores_per_executor: int
    executor_mem_gb: float

    def __post_init__(self) -> None:
        for name in ("driver_mem_gb", "num_executors", "cores_per_executor", "executor_mem_gb"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def total_executor_cores(self) -> int:
        return self.num_executors * self.cores_per_executor

    @property
    def total_mem_gb(self) -> float:
        return self.driver_mem_gb + self.num_executors * self.executor_mem_gb

    @property
    def notation(self) -> str:
        def fmt(x: float) -> str:
            return str(int(x)) if float(x).is_integer() else str(x)
        return "/".join([fmt(self.driver_mem_gb), str(self.num_executors),
                         str(self.cores_per_executor), fmt(self.executor_mem_gb)])


def parse_config_notation(text: str) -> SparkResourceConfig:
    """Parse the compact a/b/c/d resource notation."""
    parts = text.strip().split("/")
    if len(parts) != 4:
        raise ValueError(f"resource notation needs 4 fields separated by '/', got {text!r}")
    try:
        return SparkResourceConfig(
            driver_mem_gb=float(parts[0]),
            num_executors=int(parts[1]),
            cores_per_executor=int(parts[2]),
            executor_mem_gb=float(parts[3]),
        )
    except ValueError as exc:
        raise ValueError(f"bad resource notation {text!r}: {exc}") from exc


def validate_config(cfg: SparkResourceConfig, cluster: Cluster) -> ValidationReport:
    """Core oversubscription is a hard error; RAM oversubscription only warns,
    since oversubscribed-memory settings are run in practice."""
    report = ValidationReport()
    if cfg.total_executor_cores > cluster.total_cores:
        report.add(ERROR, "executor-cores-exceed-cluster", cfg.notation,
                   f"executors need {cfg.total_executor_cores} cores but the cluster "
                   f"has {cluster.total_cores}")
    if cfg.total_mem_gb > cluster.total_ram_gb:
        report.add(WARNING, "ram-oversubscribed", cfg.notation,
                   f"driver + executors need {cfg.total_mem_gb:g} GB but the cluster "
                   f"has {cluster.total_ram_gb:g} GB")
    return report


@dataclass(frozen=True)
class StageRun:
    kind = "StageRun"
    stage: Stage
    sample_ids: tuple[str, ...]
    node_ids: tuple[str, ...]
    effective_cores: int
    cores_per_node: int
    size_gb: float


@dataclass(frozen=True)
class DataTransfer:
    kind = "DataTransfer"
    dataset: str
    from_loc: DataLocation
    to_loc: DataLocation
    size_gb: float


PlanStep = StageRun | DataTransfer


@dataclass(frozen=True)
class PlanMetadata:
    pipeline_id: str
    cluster_id: str
    config: str  # resource notation actually used
    sample_count: int


@dataclass(frozen=True)
class ExecutionPlan:
    steps: tuple[PlanStep, ...]
    metadata: PlanMetadata

    @property
    def stage_runs(self) -> list[StageRun]:
        return [s for s in self.steps if isinstance(s, StageRun)]

    @property
    def transfers(self) -> list[DataTransfer]:
        return [s for s in self.steps if isinstance(s, DataTransfer)]


@dataclass
class _DatasetState:
    location: DataLocation
    size_gb: float


def plan_execution(
    pipeline: Pipeline,
    batch: Batch,
    cluster: Cluster,
    cfg: SparkResourceConfig,
    placement: Placement | None = None,
) -> ExecutionPlan:
    """Produce the ordered step list for one batch run.

    Raises PlanningError when the pipeline is invalid or the configuration
    asks for more executor cores than the cluster has.  When a placement is
    given, distributed stages run on the nodes hosting a Worker-role service;
    otherwise they run on every node (the default global deployment).
    """
    pipeline_report = validate_pipeline(pipeline)
    if not pipeline_report.ok:
        raise PlanningError(
            "pipeline is invalid: " + "; ".join(str(v) for v in pipeline_report.errors))
    cfg_report = validate_config(cfg, cluster)
    if not cfg_report.ok:
        raise PlanningError("; ".join(v.message for v in cfg_report.errors))

    manager_id = cluster.manager.id
    if placement is not None:
        worker_ids: list[str] = []
        for svc in placement.services_with_role(ServiceRole.WORKER):
            for nid in placement.nodes_for(svc.id):
                if nid not in worker_ids:
                    worker_ids.append(nid)
    else:
        worker_ids = [n.id for n in cluster.nodes]
    worker_cores = min((cluster.node(nid).cores for nid in worker_ids), default=0)
    effective_cores = min(cfg.total_executor_cores, cluster.total_cores)

    steps: list[PlanStep] = []
    # One dataset per sample; raw inputs start on the manager's local file system.
    datasets = {s.id: _DatasetState(DataLocation.LOCAL_FS, s.size_gb) for s in batch}

    def stage_targets(stage: Stage) -> tuple[tuple[str, ...], int, int]:
        if stage.exec_mode is ExecMode.CENTRALIZED_WRAPPED:
            return (manager_id,), 1, cluster.manager.cores
        if not worker_ids:
            raise PlanningError(
                f"stage {stage.id!r} is distributed but the placement defines no "
                "Worker-role service nodes")
        return tuple(worker_ids), effective_cores, worker_cores

    def ensure_location(sample_id: str, needed: DataLocation) -> None:
        state = datasets[sample_id]
        if state.location is not needed:
            steps.append(DataTransfer(
                dataset=sample_id,
                from_loc=state.location,
                to_loc=needed,
                size_gb=state.size_gb,
            ))
            state.location = needed

    def run_stage(stage: Stage, sample_ids: tuple[str, ...]) -> None:
        node_ids, cores, per_node = stage_targets(stage)
        size = sum(datasets[sid].size_gb for sid in sample_ids)
        steps.append(StageRun(
            stage=stage,
            sample_ids=sample_ids,
            node_ids=node_ids,
            effective_cores=cores,
            cores_per_node=per_node,
            size_gb=size,
        ))
        for sid in sample_ids:
            state = datasets[sid]
            state.location = stage.output_loc
            state.size_gb *= stage.output_size_factor

    per_sample = [s for s in pipeline.stages if s.scope is StageScope.PER_SAMPLE]
    per_batch = [s for s in pipeline.stages if s.scope is StageScope.PER_BATCH]

    for sample in batch:
        for stage in per_sample:
            ensure_location(sample.id, stage.input_loc)
            run_stage(stage, (sample.id,))
    for stage in per_batch:
        for sample in batch:
            ensure_location(sample.id, stage.input_loc)
        run_stage(stage, tuple(s.id for s in batch))

    return ExecutionPlan(
        steps=tuple(steps),
        metadata=PlanMetadata(
            pipeline_id=pipeline.id,
            cluster_id=cluster.id,
            config=cfg.notation,
            sample_count=len(batch),
        ),
    )
