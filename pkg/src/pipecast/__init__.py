"""Planner and performance/cost simulator for hybrid distributed pipelines.

Models a pipeline of per-sample and per-batch stages with mixed execution
modes (distributed-native over a DFS vs wrapped tools on the manager's local
file system), plans its deployment and execution over a container-swarm
cluster, and predicts makespan and monetary cost.
"""

from .costs import CostReport, Pricing, cluster_cost, compare, service_cost
from .perf import (
    CalibrationError,
    FitResult,
    Observation,
    PerfModel,
    SimulationError,
    Timeline,
    calibrate,
    predict_observation,
    simulate,
    stage_duration,
)
from .pipeline import (
    Batch,
    BatchStats,
    DataLocation,
    ExecMode,
    Pipeline,
    Sample,
    Stage,
    StageScope,
    batch_stats,
    validate_pipeline,
)
from .planner import (
    DataTransfer,
    ExecutionPlan,
    PlanningError,
    SparkResourceConfig,
    StageRun,
    parse_config_notation,
    plan_execution,
    validate_config,
)
from .topology import (
    Cluster,
    NodeRole,
    NodeSpec,
    Placement,
    PlacementPolicy,
    ServiceRole,
    ServiceSpec,
    plan_placement,
    validate_placement,
)
from .validation import ValidationReport, Violation

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "BatchStats",
    "CalibrationError",
    "Cluster",
    "CostReport",
    "DataLocation",
    "DataTransfer",
    "ExecMode",
    "ExecutionPlan",
    "FitResult",
    "NodeRole",
    "NodeSpec",
    "Observation",
    "PerfModel",
    "Pipeline",
    "Placement",
    "PlacementPolicy",
    "PlanningError",
    "Pricing",
    "Sample",
    "ServiceRole",
    "ServiceSpec",
    "SimulationError",
    "SparkResourceConfig",
    "Stage",
    "StageRun",
    "StageScope",
    "Timeline",
    "ValidationReport",
    "Violation",
    "batch_stats",
    "calibrate",
    "cluster_cost",
    "compare",
    "parse_config_notation",
    "plan_execution",
    "plan_placement",
    "predict_observation",
    "service_cost",
    "simulate",
    "stage_duration",
    "validate_config",
    "validate_pipeline",
    "validate_placement",
]
