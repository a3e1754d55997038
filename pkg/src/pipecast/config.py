"""Loading and saving of the JSON/CSV configuration file family.

A scenario file references the pipeline, batch, cluster, services, resource
configuration, performance model and pricing files (paths are resolved
relative to the scenario file).  All files are UTF-8; enum values use the
exact strings documented in the README.  Parse problems raise ConfigError
with the file and, for malformed JSON, the position.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .costs import Pricing
from .perf import Observation, PerfModel
from .pipeline import Batch, DataLocation, ExecMode, Pipeline, Sample, Stage, StageScope
from .planner import SparkResourceConfig, parse_config_notation
from .topology import Cluster, NodeRole, NodeSpec, PlacementPolicy, ServiceRole, ServiceSpec


class ConfigError(Exception):
    """A configuration file is missing, unreadable or malformed."""


def _fail(path: Path | None, message: str) -> "ConfigError":
    where = f"{path}: " if path is not None else ""
    return ConfigError(f"{where}{message}")


def load_json(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise _fail(path, f"cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _fail(path, f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _enum(cls, value, path: Path | None, what: str):
    try:
        return cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise _fail(path, f"{what}: unknown value {value!r} (allowed: {allowed})") from None


def _require(data: dict, key: str, path: Path | None, what: str):
    if key not in data:
        raise _fail(path, f"{what}: missing required field {key!r}")
    return data[key]


# ---------------------------------------------------------------- pipeline

def stage_from_dict(data: dict, path: Path | None = None) -> Stage:
    what = f"stage {data.get('id', '?')!r}"
    return Stage(
        id=str(_require(data, "id", path, "stage")),
        exec_mode=_enum(ExecMode, _require(data, "exec_mode", path, what), path, what),
        scope=_enum(StageScope, _require(data, "scope", path, what), path, what),
        input_loc=_enum(DataLocation, _require(data, "input_loc", path, what), path, what),
        output_loc=_enum(DataLocation, _require(data, "output_loc", path, what), path, what),
        rate_min_per_gb=float(_require(data, "rate_min_per_gb", path, what)),
        fixed_overhead_min=float(data.get("fixed_overhead_min", 0.0)),
        output_size_factor=float(data.get("output_size_factor", 1.0)),
        phase=data.get("phase"),
    )


def stage_to_dict(stage: Stage) -> dict:
    out = {
        "id": stage.id,
        "exec_mode": stage.exec_mode.value,
        "scope": stage.scope.value,
        "input_loc": stage.input_loc.value,
        "output_loc": stage.output_loc.value,
        "rate_min_per_gb": stage.rate_min_per_gb,
        "fixed_overhead_min": stage.fixed_overhead_min,
        "output_size_factor": stage.output_size_factor,
    }
    if stage.phase is not None:
        out["phase"] = stage.phase
    return out


def pipeline_from_dict(data: dict, path: Path | None = None) -> Pipeline:
    stages = [stage_from_dict(s, path) for s in _require(data, "stages", path, "pipeline")]
    return Pipeline(id=str(data.get("id", "pipeline")), stages=stages)


def pipeline_to_dict(pipeline: Pipeline) -> dict:
    return {"id": pipeline.id, "stages": [stage_to_dict(s) for s in pipeline.stages]}


def load_pipeline(path: Path) -> Pipeline:
    return pipeline_from_dict(load_json(path), path)


# ------------------------------------------------------------------- batch

def batch_from_dict(data: dict, path: Path | None = None) -> Batch:
    try:
        samples = [
            Sample(id=str(_require(s, "id", path, "sample")),
                   size_gb=float(_require(s, "size_gb", path, "sample")))
            for s in _require(data, "samples", path, "batch")
        ]
        return Batch(samples)
    except ValueError as exc:
        raise _fail(path, str(exc)) from exc


def batch_to_dict(batch: Batch) -> dict:
    return {"samples": [{"id": s.id, "size_gb": s.size_gb} for s in batch]}


def load_batch(path: Path) -> Batch:
    return batch_from_dict(load_json(path), path)


# ----------------------------------------------------------------- cluster

def cluster_from_dict(data: dict, path: Path | None = None) -> Cluster:
    try:
        nodes = [
            NodeSpec(
                id=str(_require(n, "id", path, "node")),
                cores=int(_require(n, "cores", path, "node")),
                ram_gb=float(_require(n, "ram_gb", path, "node")),
                hourly_price=float(_require(n, "hourly_price", path, "node")),
                role=_enum(NodeRole, n.get("role", NodeRole.WORKER.value), path,
                           f"node {n.get('id', '?')!r}"),
            )
            for n in _require(data, "nodes", path, "cluster")
        ]
        return Cluster(nodes, id=str(data.get("id", "cluster")))
    except ValueError as exc:
        raise _fail(path, str(exc)) from exc


def cluster_to_dict(cluster: Cluster) -> dict:
    return {
        "id": cluster.id,
        "nodes": [
            {"id": n.id, "cores": n.cores, "ram_gb": n.ram_gb,
             "hourly_price": n.hourly_price, "role": n.role.value}
            for n in cluster.nodes
        ],
    }


def load_cluster(path: Path) -> Cluster:
    return cluster_from_dict(load_json(path), path)


# ---------------------------------------------------------------- services

def services_from_list(data: list, path: Path | None = None) -> list[ServiceSpec]:
    try:
        return [
            ServiceSpec(
                id=str(_require(s, "id", path, "service")),
                placement=_enum(PlacementPolicy, _require(s, "placement", path, "service"),
                                path, f"service {s.get('id', '?')!r}"),
                instances_requested=int(s.get("instances_requested", 1)),
                role=_enum(ServiceRole, s.get("role", ServiceRole.OTHER.value), path,
                           f"service {s.get('id', '?')!r}"),
            )
            for s in data
        ]
    except ValueError as exc:
        raise _fail(path, str(exc)) from exc


def services_to_list(services) -> list[dict]:
    return [
        {"id": s.id, "placement": s.placement.value,
         "instances_requested": s.instances_requested, "role": s.role.value}
        for s in services
    ]


def load_services(path: Path) -> list[ServiceSpec]:
    data = load_json(path)
    if isinstance(data, dict):
        data = _require(data, "services", path, "services file")
    return services_from_list(data, path)


# ------------------------------------------------------ resource config

def spark_config_from_dict(data: dict, path: Path | None = None) -> SparkResourceConfig:
    try:
        if isinstance(data, str):
            return parse_config_notation(data)
        if "notation" in data:
            return parse_config_notation(data["notation"])
        return SparkResourceConfig(
            driver_mem_gb=float(_require(data, "driver_mem_gb", path, "resource config")),
            num_executors=int(_require(data, "num_executors", path, "resource config")),
            cores_per_executor=int(_require(data, "cores_per_executor", path, "resource config")),
            executor_mem_gb=float(_require(data, "executor_mem_gb", path, "resource config")),
        )
    except ValueError as exc:
        raise _fail(path, str(exc)) from exc


def spark_config_to_dict(cfg: SparkResourceConfig) -> dict:
    return {
        "driver_mem_gb": cfg.driver_mem_gb,
        "num_executors": cfg.num_executors,
        "cores_per_executor": cfg.cores_per_executor,
        "executor_mem_gb": cfg.executor_mem_gb,
    }


def load_spark_config(path: Path) -> SparkResourceConfig:
    return spark_config_from_dict(load_json(path), path)


# -------------------------------------------------------------- perf model

def perf_model_from_dict(data: dict, path: Path | None = None) -> PerfModel:
    try:
        efficiency = {int(k): float(v)
                      for k, v in data.get("scaleout_efficiency", {"1": 1.0}).items()}
        return PerfModel(
            baseline_cores=int(data.get("baseline_cores", 8)),
            core_cap=int(data.get("core_cap", 16)),
            scaleout_efficiency=efficiency,
            staging_bandwidth_gb_per_min=float(data.get("staging_bandwidth_gb_per_min", 1.0)),
            rate_overrides={str(k): float(v) for k, v in data.get("rate_overrides", {}).items()},
            per_stage_core_cap={str(k): int(v)
                                for k, v in data.get("per_stage_core_cap", {}).items()},
            interpolate=bool(data.get("interpolate", False)),
        )
    except ValueError as exc:
        raise _fail(path, str(exc)) from exc


def perf_model_to_dict(model: PerfModel) -> dict:
    return {
        "baseline_cores": model.baseline_cores,
        "core_cap": model.core_cap,
        "scaleout_efficiency": {str(k): model.scaleout_efficiency[k]
                                for k in sorted(model.scaleout_efficiency)},
        "staging_bandwidth_gb_per_min": model.staging_bandwidth_gb_per_min,
        "rate_overrides": {k: model.rate_overrides[k] for k in sorted(model.rate_overrides)},
        "per_stage_core_cap": {k: model.per_stage_core_cap[k]
                               for k in sorted(model.per_stage_core_cap)},
        "interpolate": model.interpolate,
    }


def load_perf_model(path: Path) -> PerfModel:
    return perf_model_from_dict(load_json(path), path)


def save_perf_model(model: PerfModel, path: Path) -> None:
    path.write_text(json.dumps(perf_model_to_dict(model), indent=2) + "\n", encoding="utf-8")


# ----------------------------------------------------------------- pricing

def pricing_from_dict(data: dict, path: Path | None = None) -> Pricing:
    try:
        return Pricing(
            service_rate_per_gb=float(_require(data, "service_rate_per_gb", path, "pricing")),
            currency=str(data.get("currency", "GBP")),
            service_minutes_per_sample=float(data.get("service_minutes_per_sample", 77.0)),
        )
    except ValueError as exc:
        raise _fail(path, str(exc)) from exc


def pricing_to_dict(pricing: Pricing) -> dict:
    return {
        "currency": pricing.currency,
        "service_rate_per_gb": pricing.service_rate_per_gb,
        "service_minutes_per_sample": pricing.service_minutes_per_sample,
    }


def load_pricing(path: Path) -> Pricing:
    return pricing_from_dict(load_json(path), path)


# -------------------------------------------------------------- observations

OBSERVATION_COLUMNS = ("nodes", "cores_per_node", "config", "stages", "size_gb", "minutes")
STAGE_SUBSET_SEPARATOR = "+"


def load_observations(path: Path) -> list[Observation]:
    """Read measured durations from CSV with columns
    nodes, cores_per_node, config, stages, size_gb, minutes."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise _fail(path, f"cannot read file ({exc.strerror})") from exc
    reader = csv.DictReader(text.splitlines())
    missing = [c for c in OBSERVATION_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise _fail(path, f"observations CSV is missing columns: {', '.join(missing)}")
    observations = []
    for lineno, row in enumerate(reader, start=2):
        try:
            observations.append(Observation(
                nodes=int(row["nodes"]),
                cores_per_node=int(row["cores_per_node"]),
                config=row["config"].strip(),
                stage_ids=tuple(s.strip() for s in row["stages"].split(STAGE_SUBSET_SEPARATOR)),
                size_gb=float(row["size_gb"]),
                measured_min=float(row["minutes"]),
            ))
        except ValueError as exc:
            raise _fail(path, f"line {lineno}: {exc}") from exc
    return observations


def save_observations(observations, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(OBSERVATION_COLUMNS)
        for o in observations:
            writer.writerow([o.nodes, o.cores_per_node, o.config,
                             STAGE_SUBSET_SEPARATOR.join(o.stage_ids), o.size_gb, o.measured_min])


# ---------------------------------------------------------------- scenario

@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    pipeline: Pipeline
    batch: Batch
    cluster: Cluster
    spark_config: SparkResourceConfig
    perf_model: PerfModel
    pricing: Pricing
    services: tuple[ServiceSpec, ...] | None
    observations_path: Path | None
    output_dir: Path | None


def load_scenario(path: Path) -> ScenarioConfig:
    """Load a scenario and every file it references."""
    data = load_json(path)
    base = path.parent

    def resolve(key: str) -> Path:
        return base / str(_require(data, key, path, "scenario"))

    services = None
    if "services" in data:
        services = tuple(load_services(base / str(data["services"])))
    observations_path = None
    if "observations" in data:
        observations_path = base / str(data["observations"])
    output_dir = Path(data["output_dir"]) if "output_dir" in data else None

    return ScenarioConfig(
        name=str(data.get("name", path.stem)),
        pipeline=load_pipeline(resolve("pipeline")),
        batch=load_batch(resolve("batch")),
        cluster=load_cluster(resolve("cluster")),
        spark_config=load_spark_config(resolve("spark_config")),
        perf_model=load_perf_model(resolve("perf_model")),
        pricing=load_pricing(resolve("pricing")),
        services=services,
        observations_path=observations_path,
        output_dir=output_dir,
    )
