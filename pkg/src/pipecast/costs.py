"""Price a simulated run and compare it with a per-GB managed service.

Cluster cost bills every node for the whole makespan at its hourly price
(cloud VMs charge while allocated, busy or not).  The managed service bills
per GB of input and its turnaround per sample is an external figure, not
something this model predicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .pipeline import Batch
from .perf import Timeline
from .topology import Cluster

ROUNDING_CONTINUOUS = "continuous"
ROUNDING_CEIL_HOUR = "ceil-hour"


@dataclass(frozen=True)
class Pricing:
    service_rate_per_gb: float
    currency: str = "GBP"
    service_minutes_per_sample: float = 77.0

    def __post_init__(self) -> None:
        if self.service_rate_per_gb < 0:
            raise ValueError("service_rate_per_gb must be >= 0")
        if self.service_minutes_per_sample < 0:
            raise ValueError("service_minutes_per_sample must be >= 0")


@dataclass(frozen=True)
class SampleCost:
    sample_id: str
    size_gb: float
    service_cost: float
    cluster_minutes: float
    cluster_cost: float


@dataclass(frozen=True)
class CostReport:
    currency: str
    cluster_cost: float
    service_cost: float
    cost_ratio: float | None           # cluster / service, None when service cost is 0
    cluster_makespan_min: float
    service_makespan_min: float
    time_ratio: float | None           # cluster / service makespan, None when service is 0
    per_sample: tuple[SampleCost, ...]


def cluster_cost(timeline: Timeline, cluster: Cluster, rounding: str = ROUNDING_CONTINUOUS) -> float:
    """Sum of node hourly prices over the makespan.

    ``continuous`` bills fractional hours; ``ceil-hour`` rounds each node's
    billed hours up to the next whole hour.
    """
    hours = timeline.makespan_min / 60.0
    if rounding == ROUNDING_CEIL_HOUR:
        hours = math.ceil(hours)
    elif rounding != ROUNDING_CONTINUOUS:
        raise ValueError(f"unknown rounding mode {rounding!r}")
    return sum(node.hourly_price * hours for node in cluster.nodes)


def service_cost(batch: Batch, pricing: Pricing) -> float:
    return pricing.service_rate_per_gb * batch.total_gb


def _per_sample_minutes(timeline: Timeline, batch: Batch) -> dict[str, float]:
    """Attribute timeline minutes to samples.

    Per-sample runs and transfers are attributed directly; per-batch runs are
    split in proportion to sample size.
    """
    minutes = {s.id: 0.0 for s in batch}
    total_gb = batch.total_gb
    sizes = {s.id: s.size_gb for s in batch}
    for entry in timeline.entries:
        covered = [sid for sid in entry.sample_ids if sid in minutes]
        if not covered:
            continue
        if len(covered) == 1:
            minutes[covered[0]] += entry.duration_min
        elif total_gb > 0:
            for sid in covered:
                minutes[sid] += entry.duration_min * sizes[sid] / total_gb
    return minutes


def compare(
    timeline: Timeline,
    cluster: Cluster,
    batch: Batch,
    pricing: Pricing,
    service_minutes_per_sample: float | None = None,
    rounding: str = ROUNDING_CONTINUOUS,
) -> CostReport:
    """Build the run-vs-service comparison report.

    The service makespan is ``service_minutes_per_sample`` (defaulting to the
    pricing's value) times the number of samples.
    """
    per_sample_svc = (pricing.service_minutes_per_sample
                      if service_minutes_per_sample is None else service_minutes_per_sample)
    run_cost = cluster_cost(timeline, cluster, rounding=rounding)
    svc_cost = service_cost(batch, pricing)
    svc_makespan = per_sample_svc * len(batch)

    minutes = _per_sample_minutes(timeline, batch)
    total_minutes = sum(minutes.values())
    rows = []
    for sample in batch:
        share = minutes[sample.id] / total_minutes if total_minutes > 0 else 0.0
        rows.append(SampleCost(
            sample_id=sample.id,
            size_gb=sample.size_gb,
            service_cost=pricing.service_rate_per_gb * sample.size_gb,
            cluster_minutes=minutes[sample.id],
            cluster_cost=run_cost * share,
        ))

    return CostReport(
        currency=pricing.currency,
        cluster_cost=run_cost,
        service_cost=svc_cost,
        cost_ratio=(run_cost / svc_cost) if svc_cost > 0 else None,
        cluster_makespan_min=timeline.makespan_min,
        service_makespan_min=svc_makespan,
        time_ratio=(timeline.makespan_min / svc_makespan) if svc_makespan > 0 else None,
        per_sample=tuple(rows),
    )
