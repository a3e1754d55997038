"""Domain model of pipelines, stages, samples and batches.

A pipeline is an ordered list of stages.  Each stage either runs as a native
distributed job over the cluster's data layer (reading and writing the
distributed file system) or as a wrapped legacy tool pinned to the manager
node (reading and writing its local file system).  Stage and Pipeline are
deliberately permissive at construction time: ``validate_pipeline`` reports
invariant violations as data so tools can surface all of them at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .validation import ERROR, ValidationReport


class ExecMode(str, Enum):
    DISTRIBUTED_NATIVE = "DistributedNative"
    CENTRALIZED_WRAPPED = "CentralizedWrapped"


class StageScope(str, Enum):
    PER_SAMPLE = "PerSample"
    PER_BATCH = "PerBatch"


class DataLocation(str, Enum):
    LOCAL_FS = "LocalFS"
    DFS = "DFS"


@dataclass(frozen=True)
class Stage:
    """One pipeline step.

    ``rate_min_per_gb`` is the processing rate at the baseline resource point
    (one node, eight cores); everything resource-dependent lives in the
    performance model.  ``output_size_factor`` scales the size of the dataset
    a stage emits relative to its input (1.0 = same size).  ``phase`` groups
    stages for reporting; it defaults to the stage id.
    """

    id: str
    exec_mode: ExecMode
    scope: StageScope
    input_loc: DataLocation
    output_loc: DataLocation
    rate_min_per_gb: float
    fixed_overhead_min: float = 0.0
    output_size_factor: float = 1.0
    phase: str | None = None

    @property
    def phase_label(self) -> str:
        return self.phase if self.phase is not None else self.id


@dataclass(frozen=True)
class Pipeline:
    id: str
    stages: tuple[Stage, ...]

    def __init__(self, id: str, stages) -> None:
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "stages", tuple(stages))

    def stage(self, stage_id: str) -> Stage:
        for s in self.stages:
            if s.id == stage_id:
                return s
        raise KeyError(f"no stage named {stage_id!r} in pipeline {self.id!r}")


@dataclass(frozen=True)
class Sample:
    id: str
    size_gb: float

    def __post_init__(self) -> None:
        if not self.size_gb > 0:
            raise ValueError(f"sample {self.id!r}: size_gb must be > 0, got {self.size_gb}")


@dataclass(frozen=True)
class Batch:
    samples: tuple[Sample, ...]

    def __init__(self, samples) -> None:
        samples = tuple(samples)
        seen: set[str] = set()
        for s in samples:
            if s.id in seen:
                raise ValueError(f"duplicate sample id {s.id!r} in batch")
            seen.add(s.id)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def total_gb(self) -> float:
        return sum(s.size_gb for s in self.samples)


@dataclass(frozen=True)
class BatchStats:
    count: int
    total_gb: float
    mean_gb: float
    min_gb: float
    max_gb: float


def batch_stats(batch: Batch) -> BatchStats:
    """Arithmetic aggregates over a batch; an empty batch yields all zeros."""
    if not batch.samples:
        return BatchStats(count=0, total_gb=0.0, mean_gb=0.0, min_gb=0.0, max_gb=0.0)
    sizes = [s.size_gb for s in batch.samples]
    total = sum(sizes)
    return BatchStats(
        count=len(sizes),
        total_gb=total,
        mean_gb=total / len(sizes),
        min_gb=min(sizes),
        max_gb=max(sizes),
    )


def validate_pipeline(pipeline: Pipeline) -> ValidationReport:
    """Check every stage and pipeline invariant.

    Violations are sorted by (stage id, code) so the enumeration does not
    depend on stage order.  A valid pipeline yields an empty report.
    """
    report = ValidationReport()
    seen: set[str] = set()
    batch_stage_seen = False
    for stage in pipeline.stages:
        if stage.id in seen:
            report.add(ERROR, "duplicate-stage-id", stage.id, "stage id appears more than once")
        seen.add(stage.id)

        if stage.rate_min_per_gb < 0:
            report.add(ERROR, "negative-rate", stage.id,
                       f"rate_min_per_gb must be >= 0, got {stage.rate_min_per_gb}")
        if stage.fixed_overhead_min < 0:
            report.add(ERROR, "negative-overhead", stage.id,
                       f"fixed_overhead_min must be >= 0, got {stage.fixed_overhead_min}")
        if stage.output_size_factor < 0:
            report.add(ERROR, "negative-size-factor", stage.id,
                       f"output_size_factor must be >= 0, got {stage.output_size_factor}")

        if stage.exec_mode is ExecMode.DISTRIBUTED_NATIVE:
            wrong = [name for name, loc in (("input_loc", stage.input_loc),
                                            ("output_loc", stage.output_loc))
                     if loc is not DataLocation.DFS]
            if wrong:
                report.add(ERROR, "distributed-stage-location", stage.id,
                           f"DistributedNative stages must read and write {DataLocation.DFS.value}; "
                           f"offending fields: {', '.join(wrong)}")
        else:
            wrong = [name for name, loc in (("input_loc", stage.input_loc),
                                            ("output_loc", stage.output_loc))
                     if loc is not DataLocation.LOCAL_FS]
            if wrong:
                report.add(ERROR, "wrapped-stage-location", stage.id,
                           f"CentralizedWrapped stages must read and write {DataLocation.LOCAL_FS.value}; "
                           f"offending fields: {', '.join(wrong)}")

        if stage.scope is StageScope.PER_BATCH:
            batch_stage_seen = True
        elif batch_stage_seen:
            # Batch stages are barriers over the whole batch: once one has
            # appeared, no per-sample stage may follow.
            report.add(ERROR, "per-sample-after-batch", stage.id,
                       "per-sample stage occurs after a per-batch stage")

    report.violations.sort(key=lambda v: (v.subject, v.code))
    return report
