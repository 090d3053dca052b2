"""Structural analyses: decomposition, port census, taxonomy membership,
data paths, anomaly narrowing and electrical fault propagation.

Every name-anchored operation also accepts a node id (``node_id=``) and
fails loudly when a name is ambiguous.  Operations that need the volatile
block/port FLOWS edges add them under the graph lock and always remove them
before returning.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from ..errors import AnalysisError, CapabilityError, NoUpstreamFuseError
from ..graph_store import (
    BLOCK, FLOWITEM, FLOWS, FLOWS_IN, HYPERNODE, INSTANCE, IS_OF_TYPE, IS_PART_OF, PORT,
    PropertyGraph,
)
from ..taxonomy import Taxonomy
from .common import (
    NodeRef, class_members, class_nodes, in_class, instances_of, resolve, sort_key,
)


@dataclass(frozen=True)
class PartRow:
    name: str | None
    id: str
    depth: int

    def to_dict(self) -> dict:
        return {"name": self.name, "id": self.id, "depth": self.depth}


@dataclass(frozen=True)
class CensusRow:
    type_name: str | None
    count: int

    def to_dict(self) -> dict:
        return {"typeName": self.type_name, "count": self.count}


@dataclass(frozen=True, order=True)
class DatapathRow:
    processed_element: str | None
    source: str | None
    target: str | None
    processed_element_id: str
    source_id: str
    target_id: str

    def to_dict(self) -> dict:
        return {"processedElement": self.processed_element, "source": self.source,
                "target": self.target, "processedElementId": self.processed_element_id,
                "sourceId": self.source_id, "targetId": self.target_id}


@dataclass(frozen=True)
class Suggestion:
    name: str | None
    id: str
    distance: int | None

    def to_dict(self) -> dict:
        return {"name": self.name, "id": self.id, "distance": self.distance}


@dataclass(frozen=True)
class Candidate:
    name: str | None
    id: str
    kind: str  # component | port

    def to_dict(self) -> dict:
        return {"name": self.name, "id": self.id, "kind": self.kind}


@dataclass
class FalloutResult:
    tripped_fuse: NodeRef
    shorted_flowitems: list[NodeRef] = field(default_factory=list)
    affected_components: list[NodeRef] = field(default_factory=list)
    lost_telemetry: list[NodeRef] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "trippedFuse": self.tripped_fuse.to_dict(),
            "shortedFlowitems": [r.to_dict() for r in self.shorted_flowitems],
            "affectedComponents": [r.to_dict() for r in self.affected_components],
            "lostTelemetry": [r.to_dict() for r in self.lost_telemetry],
        }


def _refs(graph: PropertyGraph, keys) -> list[NodeRef]:
    return [NodeRef.of(graph, k) for k in sorted(set(keys), key=lambda k: sort_key(graph, k))]


def _ports_of(graph: PropertyGraph, owner: int) -> list[int]:
    return graph.neighbors(owner, IS_PART_OF, "in", label=PORT)


# ---------------------------------------------------------------------------
# decomposition and taxonomy
# ---------------------------------------------------------------------------


def parts_of(graph: PropertyGraph, name: str | None = None, *, node_id: str | None = None,
             depth: int | None = 1, include_ports: bool = False) -> list[PartRow]:
    """Nodes reaching the anchor block over inbound IS_PART_OF within ``depth``
    hops (None = unbounded).  Ports are left out unless asked for."""
    if depth is not None and depth < 1:
        raise AnalysisError(f"depth must be positive, got {depth}")
    anchor = resolve(graph, name, node_id, label=BLOCK, what="block")
    rows = []
    for k, d in graph.bfs_distances(anchor, IS_PART_OF, "in", depth).items():
        if k == anchor:
            continue
        labels = graph.node(k).labels
        if PORT in labels:
            if not include_ports:
                continue
        elif BLOCK not in labels:
            continue
        n = graph.node(k)
        rows.append(PartRow(n.name, n.id, d))
    rows.sort(key=lambda r: (r.depth, r.name is None, r.name or "", r.id))
    return rows


def port_census(graph: PropertyGraph, scope: str | None = None, *,
                node_id: str | None = None) -> list[CensusRow]:
    anchor = resolve(graph, scope, node_id, label=BLOCK, what="scope block")
    counts: dict[str | None, int] = {}
    for k in graph.transitive(anchor, IS_PART_OF, "in"):
        if PORT not in graph.node(k).labels:
            continue
        # a port typed twice by equally named types still counts once per name
        for tname in {graph.node(t).name for t in graph.neighbors(k, IS_OF_TYPE, "out")}:
            counts[tname] = counts.get(tname, 0) + 1
    rows = [CensusRow(t, c) for t, c in counts.items()]
    rows.sort(key=lambda r: (-r.count, r.type_name is None, r.type_name or ""))
    return rows


def type_queries(graph: PropertyGraph, type_name: str | None = None, mode: str = "members", *,
                 node_id: str | None = None) -> list[NodeRef]:
    if mode not in ("members", "systems_using"):
        raise AnalysisError(f"unknown type query mode {mode!r}")
    anchor = resolve(graph, type_name, node_id, label=BLOCK, exclude=(INSTANCE,), what="type")
    specifics = set(graph.transitive(anchor, IS_OF_TYPE, "in"))
    members = specifics | instances_of(graph, specifics)
    if mode == "members":
        return _refs(graph, members)
    users: set[int] = set()
    for m in members:
        users.update(graph.transitive(m, IS_PART_OF, "out"))
    return _refs(graph, users - members)


# ---------------------------------------------------------------------------
# data paths and anomaly narrowing
# ---------------------------------------------------------------------------


def _instance_owners(graph: PropertyGraph, port: int) -> list[int]:
    return [o for o in graph.neighbors(port, IS_PART_OF, "out")
            if {BLOCK, INSTANCE} <= graph.node(o).labels]


def datapath(graph: PropertyGraph, flowitem: str | None = None, *,
             node_id: str | None = None) -> list[DatapathRow]:
    anchor = resolve(graph, flowitem, node_id, label=BLOCK, what="flowitem")
    closure = [anchor] + graph.transitive(anchor, IS_PART_OF, "out")
    rows: set[DatapathRow] = set()
    for fi in closure:
        if FLOWITEM not in graph.node(fi).labels:
            continue
        for hpn in graph.neighbors(fi, FLOWS_IN, "out", label=HYPERNODE):
            for sp in graph.neighbors(hpn, FLOWS, "in", label=PORT):
                for tp in graph.neighbors(hpn, FLOWS, "out", label=PORT):
                    for s in _instance_owners(graph, sp):
                        for t in _instance_owners(graph, tp):
                            f, sn, tn = graph.node(fi), graph.node(s), graph.node(t)
                            rows.add(DatapathRow(f.name, sn.name, tn.name, f.id, sn.id, tn.id))
    return sorted(rows, key=lambda r: (r.processed_element or "", r.source or "",
                                       r.target or "", r.processed_element_id, r.source_id,
                                       r.target_id))


def anomaly_suggestions(graph: PropertyGraph, telemetry: str | None = None, *,
                        node_id: str | None = None) -> list[Suggestion]:
    """Other flowitems sharing a hypernode with the telemetry, or riding a
    hypernode attached to a component that also handles the telemetry.

    Ordered by undirected FLOWS_IN|FLOWS hop distance (volatile block/port
    edges included so paths can cross components), then name.
    """
    t = resolve(graph, telemetry, node_id, label=BLOCK, what="telemetry")
    own = graph.neighbors(t, FLOWS_IN, "out", label=HYPERNODE)
    hpns = dict.fromkeys(own)
    for h0 in own:
        for port in graph.neighbors(h0, FLOWS, "both", label=PORT):
            for comp in graph.neighbors(port, IS_PART_OF, "out"):
                for port2 in _ports_of(graph, comp):
                    for h in graph.neighbors(port2, FLOWS, "both", label=HYPERNODE):
                        hpns[h] = None
    found: dict[int, None] = {}
    for h in hpns:
        for s in graph.neighbors(h, FLOWS_IN, "in"):
            if s != t:
                found[s] = None
    if not found:
        return []
    with volatile_flows(graph):
        dist = graph.bfs_distances(t, (FLOWS, FLOWS_IN), "both")
    out = [Suggestion(graph.node(k).name, graph.node(k).id, dist.get(k)) for k in found]
    out.sort(key=lambda s: (s.distance is None, s.distance or 0, s.name is None, s.name or "",
                            s.id))
    return out


def processors(graph: PropertyGraph, item: int) -> set[tuple[int, str]]:
    """Ports one FLOWS hop downstream of the item's hypernodes, plus their owners."""
    out: set[tuple[int, str]] = set()
    for hpn in graph.neighbors(item, FLOWS_IN, "out", label=HYPERNODE):
        for p in graph.neighbors(hpn, FLOWS, "out", label=PORT):
            out.add((p, "port"))
            for owner in graph.neighbors(p, IS_PART_OF, "out"):
                out.add((owner, "component"))
    return out


def fault_candidates(graph: PropertyGraph, faulty: Sequence[str] = (), healthy: Sequence[str] = (),
                     *, faulty_ids: Sequence[str] = (),
                     healthy_ids: Sequence[str] = ()) -> list[Candidate]:
    bad = [resolve(graph, n, label=BLOCK, what="faulty flowitem") for n in faulty]
    bad += [resolve(graph, node_id=i, what="faulty flowitem") for i in faulty_ids]
    good = [resolve(graph, n, label=BLOCK, what="healthy flowitem") for n in healthy]
    good += [resolve(graph, node_id=i, what="healthy flowitem") for i in healthy_ids]
    if not bad:
        raise AnalysisError("fault_candidates needs at least one faulty flowitem")
    common = processors(graph, bad[0])
    for k in bad[1:]:
        common &= processors(graph, k)
    for k in good:
        common -= processors(graph, k)
    out = [Candidate(graph.node(k).name, graph.node(k).id, kind) for k, kind in common]
    out.sort(key=lambda c: (c.kind, c.name is None, c.name or "", c.id))
    return out


# ---------------------------------------------------------------------------
# volatile flows and power analyses
# ---------------------------------------------------------------------------


def _has_flows(graph: PropertyGraph, a: int, b: int) -> bool:
    return any(graph.edge(e).target == b for e in graph.edges_of(a, FLOWS, "out"))


def add_volatile_flows(graph: PropertyGraph) -> int:
    """Link every instance to its flow-carrying port instances with FLOWS
    {tbd: true} edges, following the flow direction.  Existing links are kept."""
    added = 0
    with graph.lock:
        for b in graph.with_label(INSTANCE):
            if BLOCK not in graph.node(b).labels:
                continue
            for p in _ports_of(graph, b):
                if graph.neighbors(p, FLOWS, "out", label=HYPERNODE) and not _has_flows(graph, b, p):
                    graph.add_edge(b, FLOWS, p, {"tbd": True})
                    added += 1
                if graph.neighbors(p, FLOWS, "in", label=HYPERNODE) and not _has_flows(graph, p, b):
                    graph.add_edge(p, FLOWS, b, {"tbd": True})
                    added += 1
    return added


def remove_volatile_flows(graph: PropertyGraph) -> int:
    with graph.lock:
        return graph.remove_edges_where(tbd=True)


@contextmanager
def volatile_flows(graph: PropertyGraph) -> Iterator[int]:
    with graph.lock:
        n = add_volatile_flows(graph)
        try:
            yield n
        finally:
            remove_volatile_flows(graph)


def _require_taxonomy(graph: PropertyGraph, analysis: str, classes: Sequence[str]) -> None:
    missing = [c for c in classes if not class_nodes(graph, c)]
    if missing:
        raise CapabilityError(
            f"{analysis} unsupported: lint rule L2 reports missing taxonomy class(es) "
            + ", ".join(repr(c) for c in missing))


def _carrying(graph: PropertyGraph, hpn: int, items: set[int]) -> set[int]:
    return set(graph.neighbors(hpn, FLOWS_IN, "in")) & items


def short_fallout(graph: PropertyGraph, component: str | None = None, *,
                  node_id: str | None = None, flowlength: int = 10,
                  taxonomy: Taxonomy | None = None) -> FalloutResult:
    """Fuse tripped by a short in ``component`` and the components it cuts off.

    ``flowlength`` bounds the directed FLOWS edges followed from the fuse to
    the last hypernode, volatile block/port edges included.
    """
    if flowlength < 1:
        raise AnalysisError(f"flowlength must be positive, got {flowlength}")
    tax = taxonomy or Taxonomy.from_env()
    _require_taxonomy(graph, "short_fallout", (tax.physical, tax.fuse))
    comp = resolve(graph, component, node_id, label=BLOCK, what="component")
    physical = in_class(graph, tax.physical)

    with volatile_flows(graph):
        shorted: set[int] = set()
        for port in _ports_of(graph, comp):
            for hpn in graph.neighbors(port, FLOWS, "in", label=HYPERNODE):
                shorted |= _carrying(graph, hpn, physical)
        fuses = instances_of(graph, class_members(graph, class_nodes(graph, tax.fuse)))
        candidates: dict[int, set[int]] = {}
        for f in fuses:
            for port in _ports_of(graph, f):
                for hpn in graph.neighbors(port, FLOWS, "out", label=HYPERNODE):
                    carried = _carrying(graph, hpn, shorted)
                    if carried:
                        candidates.setdefault(f, set()).update(carried)
        if not candidates:
            name = graph.node(comp).name or graph.node(comp).id
            raise NoUpstreamFuseError(name)
        dist = graph.bfs_distances(comp, FLOWS, "both")
        fuse = min(candidates, key=lambda f: (f not in dist, dist.get(f, 0), graph.node(f).id))
        items = candidates[fuse]

        blocked = [h for h in graph.with_label(HYPERNODE) if not _carrying(graph, h, items)]
        reach = graph.bfs_distances(fuse, FLOWS, "out", flowlength, excluded_nodes=blocked)
        affected: set[int] = set()
        for h in reach:
            if HYPERNODE not in graph.node(h).labels:
                continue
            for port in graph.neighbors(h, FLOWS, "out", label=PORT):
                for owner in graph.neighbors(port, IS_PART_OF, "out"):
                    if owner != fuse:
                        affected.add(owner)

        data = in_class(graph, tax.data)
        lost: set[int] = set()
        for a in affected:
            for port in _ports_of(graph, a):
                for hpn in graph.neighbors(port, FLOWS, "out", label=HYPERNODE):
                    lost |= _carrying(graph, hpn, data)

    return FalloutResult(NodeRef.of(graph, fuse), _refs(graph, items), _refs(graph, affected),
                         _refs(graph, lost))


def power_source_of(graph: PropertyGraph, component: str | None = None, *,
                    node_id: str | None = None,
                    taxonomy: Taxonomy | None = None) -> list[NodeRef]:
    """Instances upstream of the component along physical-flowitem flows,
    nearest first."""
    tax = taxonomy or Taxonomy.from_env()
    _require_taxonomy(graph, "power_source_of", (tax.physical,))
    comp = resolve(graph, component, node_id, label=BLOCK, what="component")
    physical = in_class(graph, tax.physical)
    with volatile_flows(graph):
        blocked = [h for h in graph.with_label(HYPERNODE) if not _carrying(graph, h, physical)]
        dist = graph.bfs_distances(comp, FLOWS, "in", excluded_nodes=blocked)
    found = [k for k in dist
             if k != comp and {BLOCK, INSTANCE} <= graph.node(k).labels
             and PORT not in graph.node(k).labels]
    found.sort(key=lambda k: (dist[k],) + sort_key(graph, k))
    return [NodeRef.of(graph, k) for k in found]
