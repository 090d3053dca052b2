"""Shared helpers for the analyses: name resolution, taxonomy membership, result refs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..errors import AmbiguousNameError, UnknownNameError
from ..graph_store import (
    BLOCK, FLOWS, HYPERNODE, INSTANCE, IS_INSTANCE_OF, IS_OF_TYPE, IS_PART_OF, PORT,
    PropertyGraph,
)

STRUCTURAL = (
    "parts_of", "port_census", "type_queries", "datapath", "anomaly_suggestions",
    "fault_candidates", "add_volatile_flows", "short_fallout", "power_source_of",
)
BEHAVIORAL = (
    "conditions_into_state", "state_paths", "unreachable_states", "lost_outputs",
    "activity_routes", "object_usage",
)
ANALYSES = STRUCTURAL + BEHAVIORAL

# analyses whose primary input is a node name
NAME_ANCHORED = tuple(a for a in ANALYSES if a != "add_volatile_flows")


@dataclass(frozen=True, order=True)
class NodeRef:
    name: str | None
    id: str

    @classmethod
    def of(cls, graph: PropertyGraph, key: int) -> "NodeRef":
        n = graph.node(key)
        return cls(n.name, n.id)

    def to_dict(self) -> dict:
        return {"name": self.name, "id": self.id}


def sort_key(graph: PropertyGraph, key: int) -> tuple:
    n = graph.node(key)
    return (n.name is None, n.name or "", n.id)


def resolve(graph: PropertyGraph, name: str | None = None, node_id: str | None = None, *,
            label: str | None = None, exclude: Iterable[str] = (), what: str = "node") -> int:
    """Find exactly one node by id or by name; ambiguity is an error, never a guess."""
    if node_id is not None:
        if not graph.has_id(node_id):
            raise UnknownNameError(node_id, what)
        k = graph.key_of(node_id)
        if label is not None and label not in graph.node(k).labels:
            raise UnknownNameError(node_id, f"{what} (id is not a :{label} node)")
        return k
    if name is None:
        raise UnknownNameError("<none>", what)
    excluded = set(exclude)
    hits = [k for k in graph.find_nodes(label, name=name)
            if not excluded & graph.node(k).labels]
    if not hits:
        raise UnknownNameError(name, what)
    if len(hits) > 1:
        raise AmbiguousNameError(name, sorted(graph.node(k).id for k in hits), what)
    return hits[0]


def class_nodes(graph: PropertyGraph, class_name: str) -> list[int]:
    """Block definitions carrying a taxonomy class name."""
    return [k for k in graph.find_nodes(BLOCK, name=class_name)
            if INSTANCE not in graph.node(k).labels]


def class_members(graph: PropertyGraph, class_keys: Iterable[int]) -> set[int]:
    """Transitive IS_OF_TYPE specifics of the given classes (classes excluded)."""
    out: set[int] = set()
    for c in class_keys:
        out.update(graph.transitive(c, IS_OF_TYPE, "in"))
    return out


def instances_of(graph: PropertyGraph, keys: Iterable[int]) -> set[int]:
    out: set[int] = set()
    for k in keys:
        out.update(graph.neighbors(k, IS_INSTANCE_OF, "in"))
    return out


def in_class(graph: PropertyGraph, class_name: str) -> set[int]:
    """Members of a class plus instances of those members."""
    members = class_members(graph, class_nodes(graph, class_name))
    return members | instances_of(graph, members)


def port_owner(graph: PropertyGraph, port: int) -> list[int]:
    return graph.neighbors(port, IS_PART_OF, "out")


def is_port(graph: PropertyGraph, key: int) -> bool:
    return PORT in graph.node(key).labels


def hypernode_ports(graph: PropertyGraph, hpn: int) -> tuple[list[int], list[int]]:
    """(source ports, target ports) of a connector hypernode."""
    src = [k for k in graph.neighbors(hpn, FLOWS, "in") if is_port(graph, k)]
    dst = [k for k in graph.neighbors(hpn, FLOWS, "out") if is_port(graph, k)]
    return src, dst


def is_hypernode(graph: PropertyGraph, key: int) -> bool:
    return HYPERNODE in graph.node(key).labels
