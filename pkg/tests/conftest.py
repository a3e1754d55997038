"""Shared fixtures: the reference workload and random scenario generators."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from pipecast import (
    Batch,
    Cluster,
    DataLocation,
    DataTransfer,
    ExecMode,
    NodeRole,
    NodeSpec,
    Pipeline,
    Sample,
    SparkResourceConfig,
    Stage,
    StageScope,
)
from pipecast.config import (
    load_batch,
    load_cluster,
    load_observations,
    load_perf_model,
    load_pipeline,
    load_pricing,
    load_services,
    load_spark_config,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def reference_pipeline():
    return load_pipeline(FIXTURES / "pipeline.json")


@pytest.fixture(scope="session")
def reference_batch():
    return load_batch(FIXTURES / "batch.json")


@pytest.fixture(scope="session")
def single_node_cluster():
    return load_cluster(FIXTURES / "cluster_single_node.json")


@pytest.fixture(scope="session")
def swarm_cluster():
    return load_cluster(FIXTURES / "cluster_swarm.json")


@pytest.fixture(scope="session")
def reference_services():
    return load_services(FIXTURES / "services.json")


@pytest.fixture(scope="session")
def reference_config():
    return load_spark_config(FIXTURES / "spark_config_20-2-4-16.json")


@pytest.fixture(scope="session")
def reference_model():
    return load_perf_model(FIXTURES / "perf_model.json")


@pytest.fixture(scope="session")
def reference_pricing():
    return load_pricing(FIXTURES / "pricing.json")


@pytest.fixture(scope="session")
def scaling_observations():
    return load_observations(FIXTURES / "observations_preprocessing_scaling.csv")


# --------------------------------------------------- random scenario makers

def make_stage(rng: random.Random, idx: int, scope: StageScope) -> Stage:
    if rng.random() < 0.5:
        mode = ExecMode.DISTRIBUTED_NATIVE
        loc_in = loc_out = DataLocation.DFS
    else:
        mode = ExecMode.CENTRALIZED_WRAPPED
        loc_in = loc_out = DataLocation.LOCAL_FS
    return Stage(
        id=f"stage-{idx:02d}",
        exec_mode=mode,
        scope=scope,
        input_loc=loc_in,
        output_loc=loc_out,
        rate_min_per_gb=round(rng.uniform(0.0, 25.0), 3),
        fixed_overhead_min=round(rng.uniform(0.0, 5.0), 3) if rng.random() < 0.3 else 0.0,
        output_size_factor=round(rng.uniform(0.5, 2.0), 3),
    )


def make_pipeline(rng: random.Random) -> Pipeline:
    n_sample = rng.randint(0, 5)
    n_batch = rng.randint(0, 3)
    stages = [make_stage(rng, i, StageScope.PER_SAMPLE) for i in range(n_sample)]
    stages += [make_stage(rng, n_sample + i, StageScope.PER_BATCH) for i in range(n_batch)]
    return Pipeline("random-pipeline", stages)


def make_batch(rng: random.Random) -> Batch:
    return Batch([Sample(f"sample-{i}", round(rng.uniform(0.5, 20.0), 3))
                  for i in range(rng.randint(0, 5))])


def make_cluster(rng: random.Random) -> Cluster:
    nodes = [
        NodeSpec(
            id=f"n{i}",
            cores=rng.choice([4, 8, 16]),
            ram_gb=rng.choice([32.0, 55.0, 110.0]),
            hourly_price=round(rng.uniform(0.0, 2.0), 3),
            role=NodeRole.MANAGER if i == 0 else NodeRole.WORKER,
        )
        for i in range(rng.randint(1, 5))
    ]
    return Cluster(nodes, id="random-cluster")


def make_config(rng: random.Random, cluster: Cluster) -> SparkResourceConfig:
    total = cluster.total_cores
    cores_per_executor = rng.randint(1, total)
    executors = rng.randint(1, max(1, total // cores_per_executor))
    return SparkResourceConfig(
        driver_mem_gb=rng.choice([10.0, 20.0]),
        num_executors=executors,
        cores_per_executor=cores_per_executor,
        executor_mem_gb=rng.choice([6.0, 8.0, 16.0]),
    )


def scan_staging(plan, batch) -> None:
    """Independent oracle: replay the plan tracking every dataset's location.

    Asserts that each stage run finds its inputs where the stage needs them,
    that transfers always move data from where it currently is to somewhere
    else, and that no dataset is transferred twice in a row.
    """
    location = {s.id: DataLocation.LOCAL_FS for s in batch}
    previous_was_transfer = {s.id: False for s in batch}
    for step in plan.steps:
        if isinstance(step, DataTransfer):
            assert step.from_loc != step.to_loc
            assert location[step.dataset] == step.from_loc
            assert not previous_was_transfer[step.dataset], (
                f"dataset {step.dataset} transferred twice in a row")
            location[step.dataset] = step.to_loc
            previous_was_transfer[step.dataset] = True
        else:
            for sid in step.sample_ids:
                assert location[sid] == step.stage.input_loc
                location[sid] = step.stage.output_loc
                previous_was_transfer[sid] = False
