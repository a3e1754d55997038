"""Swarm cluster model and container placement.

A cluster is one manager node plus workers.  Services (compute master and
workers, DFS name/data nodes, the replicated reference-data image) are placed
on nodes according to a strategy: pinned to the manager, one instance per
node, or greedily onto the least-loaded node.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .pipeline import ExecMode, Pipeline
from .validation import ERROR, ValidationReport


class NodeRole(str, Enum):
    MANAGER = "Manager"
    WORKER = "Worker"


class PlacementPolicy(str, Enum):
    MANAGER_ONLY = "ManagerOnly"
    GLOBAL = "Global"
    EMPTIEST_NODE = "EmptiestNode"


class ServiceRole(str, Enum):
    """What a service does, independent of where it is placed."""

    MASTER = "Master"          # compute framework master
    WORKER = "Worker"          # compute framework worker
    NAME_NODE = "NameNode"     # DFS metadata service
    DATA_NODE = "DataNode"     # DFS data service; doubles as the local volume mount
    REFERENCE = "Reference"    # replicated reference-dataset image
    OTHER = "Other"


@dataclass(frozen=True)
class NodeSpec:
    id: str
    cores: int
    ram_gb: float
    hourly_price: float
    role: NodeRole = NodeRole.WORKER

    def __post_init__(self) -> None:
        if self.cores < 1:
            raise ValueError(f"node {self.id!r}: cores must be >= 1, got {self.cores}")
        if not self.ram_gb > 0:
            raise ValueError(f"node {self.id!r}: ram_gb must be > 0, got {self.ram_gb}")
        if self.hourly_price < 0:
            raise ValueError(f"node {self.id!r}: hourly_price must be >= 0, got {self.hourly_price}")


@dataclass(frozen=True)
class Cluster:
    nodes: tuple[NodeSpec, ...]
    id: str = "cluster"

    def __init__(self, nodes, id: str = "cluster") -> None:
        nodes = tuple(nodes)
        if not nodes:
            raise ValueError("cluster must have at least one node")
        seen: set[str] = set()
        for n in nodes:
            if n.id in seen:
                raise ValueError(f"duplicate node id {n.id!r} in cluster")
            seen.add(n.id)
        managers = [n for n in nodes if n.role is NodeRole.MANAGER]
        if len(managers) != 1:
            raise ValueError(f"cluster must have exactly one manager node, got {len(managers)}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "id", id)

    @property
    def manager(self) -> NodeSpec:
        return next(n for n in self.nodes if n.role is NodeRole.MANAGER)

    @property
    def total_cores(self) -> int:
        return sum(n.cores for n in self.nodes)

    @property
    def total_ram_gb(self) -> float:
        return sum(n.ram_gb for n in self.nodes)

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(f"no node named {node_id!r} in cluster {self.id!r}")


@dataclass(frozen=True)
class ServiceSpec:
    id: str
    placement: PlacementPolicy
    instances_requested: int = 1
    role: ServiceRole = ServiceRole.OTHER

    def __post_init__(self) -> None:
        if self.instances_requested < 1:
            raise ValueError(
                f"service {self.id!r}: instances_requested must be >= 1, "
                f"got {self.instances_requested}")


@dataclass(frozen=True)
class Placement:
    """Realized service-to-node assignment, with the service specs retained."""

    assignments: dict[str, tuple[str, ...]]
    services: tuple[ServiceSpec, ...]

    def nodes_for(self, service_id: str) -> tuple[str, ...]:
        return self.assignments.get(service_id, ())

    def service(self, service_id: str) -> ServiceSpec | None:
        for s in self.services:
            if s.id == service_id:
                return s
        return None

    def services_with_role(self, role: ServiceRole) -> list[ServiceSpec]:
        return [s for s in self.services if s.role is role]


def plan_placement(
    cluster: Cluster,
    services: Iterable[ServiceSpec],
    initial_load: Mapping[str, int] | None = None,
) -> Placement:
    """Assign services to nodes, one service at a time in declaration order.

    ManagerOnly services land on the manager; Global services get exactly one
    instance per node (the manager included).  EmptiestNode services place
    their instances one at a time: each goes to the node with the fewest
    containers, spreading replicas of the same service before stacking them
    (ties after that break on lexicographic node id).  ``initial_load`` seeds
    the per-node container counts for clusters that are not empty.
    """
    services = tuple(services)
    load: dict[str, int] = {n.id: 0 for n in cluster.nodes}
    for node_id, count in (initial_load or {}).items():
        if node_id not in load:
            raise KeyError(f"initial_load references unknown node {node_id!r}")
        load[node_id] = count

    assignments: dict[str, tuple[str, ...]] = {}
    for svc in services:
        if svc.placement is PlacementPolicy.MANAGER_ONLY:
            placed = [cluster.manager.id]
            for nid in placed:
                load[nid] += 1
        elif svc.placement is PlacementPolicy.GLOBAL:
            placed = [n.id for n in cluster.nodes]
            for nid in placed:
                load[nid] += 1
        else:  # EMPTIEST_NODE
            placed = []
            replicas = {n.id: 0 for n in cluster.nodes}
            for _ in range(svc.instances_requested):
                target = min(load, key=lambda nid: (replicas[nid], load[nid], nid))
                placed.append(target)
                replicas[target] += 1
                load[target] += 1
        assignments[svc.id] = tuple(placed)
    return Placement(assignments=assignments, services=services)


def validate_placement(cluster: Cluster, pipeline: Pipeline, placement: Placement) -> ValidationReport:
    """Check a placement against the data-access needs of a pipeline.

    Rules: distributed stages need the DFS data service deployed globally;
    wrapped stages need the manager to carry the data service so its volume
    mount exposes DFS content on the local file system; the reference-data
    image must cover every node that hosts a compute worker.
    """
    report = ValidationReport()
    node_ids = {n.id for n in cluster.nodes}
    for service_id, nids in placement.assignments.items():
        for nid in nids:
            if nid not in node_ids:
                report.add(ERROR, "unknown-node", service_id,
                           f"assigned to node {nid!r} which is not in the cluster")

    if not pipeline.stages:
        report.violations.sort(key=lambda v: (v.subject, v.code))
        return report

    has_distributed = any(s.exec_mode is ExecMode.DISTRIBUTED_NATIVE for s in pipeline.stages)
    has_wrapped = any(s.exec_mode is ExecMode.CENTRALIZED_WRAPPED for s in pipeline.stages)
    datanodes = placement.services_with_role(ServiceRole.DATA_NODE)

    if has_distributed:
        if not datanodes:
            report.add(ERROR, "missing-datanode-service", pipeline.id,
                       "pipeline has distributed stages but no DataNode-role service is defined")
        else:
            for svc in datanodes:
                if svc.placement is not PlacementPolicy.GLOBAL:
                    report.add(ERROR, "datanode-not-global", svc.id,
                               "distributed stages require the DFS data service to be Global, "
                               f"got {svc.placement.value}")

    if has_wrapped:
        manager_id = cluster.manager.id
        mounted = any(manager_id in placement.nodes_for(svc.id) for svc in datanodes)
        if not mounted:
            report.add(ERROR, "manager-missing-volume-mount", manager_id,
                       "wrapped stages run on the manager and need a DataNode instance there "
                       "to expose DFS content through a local volume mount")

    worker_nodes: set[str] = set()
    for svc in placement.services_with_role(ServiceRole.WORKER):
        worker_nodes.update(placement.nodes_for(svc.id))
    reference_nodes: set[str] = set()
    for svc in placement.services_with_role(ServiceRole.REFERENCE):
        reference_nodes.update(placement.nodes_for(svc.id))
    uncovered = sorted(worker_nodes - reference_nodes)
    if uncovered:
        report.add(ERROR, "reference-data-not-replicated", ",".join(uncovered),
                   "reference-data image missing from nodes that host a worker service: "
                   + ", ".join(uncovered))

    report.violations.sort(key=lambda v: (v.subject, v.code))
    return report
