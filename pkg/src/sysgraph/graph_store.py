"""Embedded labelled property graph (directed multigraph).

Nodes carry a label set and a property map that always contains ``id`` and
``name``; edges carry one relation type and a property map.  Node handles
("keys") are small integers private to one graph instance; the public
identity of a node is its ``id`` property.

Strict mode enforces the label whitelist and the endpoint rules of the
SysML graph schema on every insertion (see :func:`edge_violation`).
"""

from __future__ import annotations

import heapq
import json
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Union

from .errors import DuplicateIdError, GraphError, ParseError, SchemaViolation, UnknownNodeError

PropValue = Union[str, int, float, bool, None]

BLOCK = "BLOCK"
PORT = "PORT"
INSTANCE = "INSTANCE"
FLOWITEM = "FLOWITEM"
HYPERNODE = "HYPERNODE"
ACT = "ACT"
ACTNODE = "ACTNODE"
ACTIVITY = "ACTIVITY"
EXECUTION = "EXECUTION"
STATE = "STATE"
PSEUDOSTATE = "PSEUDOSTATE"
TRIGGER = "TRIGGER"

LABELS = frozenset({
    BLOCK, PORT, INSTANCE, FLOWITEM, HYPERNODE, ACT, ACTNODE, ACTIVITY,
    EXECUTION, STATE, PSEUDOSTATE, TRIGGER,
})

IS_PART_OF = "IS_PART_OF"
IS_OF_TYPE = "IS_OF_TYPE"
IS_INSTANCE_OF = "IS_INSTANCE_OF"
FLOWS = "FLOWS"
FLOWS_IN = "FLOWS_IN"
CONTROL_FLOW = "CONTROL_FLOW"
OBJECT_FLOW = "OBJECT_FLOW"
IS_USED_IN = "IS_USED_IN"
IS_EXECUTION_OF = "IS_EXECUTION_OF"
TRANSITION = "TRANSITION"
TRIGGERS = "TRIGGERS"

EDGE_TYPES = frozenset({
    IS_PART_OF, IS_OF_TYPE, IS_INSTANCE_OF, FLOWS, FLOWS_IN, CONTROL_FLOW,
    OBJECT_FLOW, IS_USED_IN, IS_EXECUTION_OF, TRANSITION, TRIGGERS,
})

DIRECTIONS = ("out", "in", "both")


def edge_violation(src: set[str] | frozenset[str], etype: str,
                   dst: set[str] | frozenset[str], props: dict[str, Any]) -> str | None:
    """Return a message if ``(src)-[etype]->(dst)`` breaks the schema, else None."""
    if etype not in EDGE_TYPES:
        return f"unknown relation type {etype}"
    if etype == FLOWS:
        if (PORT in src and HYPERNODE in dst) or (HYPERNODE in src and PORT in dst):
            return None
        if props.get("tbd") is True and (
            (BLOCK in src and PORT in dst) or (PORT in src and BLOCK in dst)
        ):
            return None
        return "FLOWS must connect PORT and HYPERNODE (or BLOCK and PORT when tbd=true)"
    if etype == FLOWS_IN:
        ok = FLOWITEM in src and HYPERNODE in dst
        return None if ok else "FLOWS_IN must run FLOWITEM -> HYPERNODE"
    if etype == IS_OF_TYPE:
        if INSTANCE in src or INSTANCE in dst:
            return "IS_OF_TYPE must connect definition nodes"
        if (BLOCK in src and BLOCK in dst) or (PORT in src and (PORT in dst or BLOCK in dst)):
            return None
        return "IS_OF_TYPE must run BLOCK -> BLOCK, PORT -> PORT or PORT -> BLOCK (port type)"
    if etype == IS_INSTANCE_OF:
        ok = INSTANCE in src and INSTANCE not in dst
        return None if ok else "IS_INSTANCE_OF must run INSTANCE -> definition"
    if etype == TRANSITION:
        vertex = {STATE, PSEUDOSTATE}
        if (src & vertex and HYPERNODE in dst) or (HYPERNODE in src and dst & vertex):
            return None
        return "TRANSITION must connect STATE/PSEUDOSTATE and HYPERNODE"
    if etype == TRIGGERS:
        ok = TRIGGER in src and HYPERNODE in dst
        return None if ok else "TRIGGERS must run TRIGGER -> HYPERNODE"
    if etype in (CONTROL_FLOW, OBJECT_FLOW):
        ok = ACT in src and ACT in dst
        return None if ok else f"{etype} must connect ACT nodes"
    if etype == IS_USED_IN:
        ok = BLOCK in src and ACTNODE in dst
        return None if ok else "IS_USED_IN must run BLOCK -> ACTNODE"
    if etype == IS_EXECUTION_OF:
        ok = EXECUTION in src and EXECUTION not in dst
        return None if ok else "IS_EXECUTION_OF must run EXECUTION -> definition"
    return None  # IS_PART_OF is unconstrained


@dataclass
class Node:
    key: int
    labels: set[str]
    props: dict[str, PropValue]

    @property
    def id(self) -> str:
        return self.props["id"]  # type: ignore[return-value]

    @property
    def name(self) -> str | None:
        return self.props.get("name")  # type: ignore[return-value]


@dataclass
class Edge:
    key: int
    id: str
    source: int
    target: int
    type: str
    props: dict[str, PropValue] = field(default_factory=dict)


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]
    edges: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.edges)


def _types(types: str | Iterable[str] | None) -> frozenset[str] | None:
    if types is None:
        return None
    if isinstance(types, str):
        return frozenset((types,))
    return frozenset(types)


def _check_value(v: Any) -> None:
    if v is not None and not isinstance(v, (str, int, float, bool)):
        raise GraphError(f"property value {v!r} is not a string, number, boolean or null")


class PropertyGraph:
    """Directed labelled property multigraph with deterministic iteration order."""

    def __init__(self, strict: bool = True):
        self.strict = strict
        self.nodes: dict[int, Node] = {}
        self.edges: dict[int, Edge] = {}
        self._by_id: dict[str, int] = {}
        self._edge_by_id: dict[str, int] = {}
        self._by_label: dict[str, dict[int, None]] = {}
        self._out: dict[int, dict[int, None]] = {}
        self._in: dict[int, dict[int, None]] = {}
        self._next_node = 0
        self._next_edge = 0
        # mutating analyses (volatile edges) hold this for their whole duration
        self.lock = threading.RLock()

    # -- mutation ---------------------------------------------------------

    def add_node(self, labels: Iterable[str], props: dict[str, PropValue]) -> int:
        labels = set(labels)
        if "id" not in props or not isinstance(props["id"], str) or not props["id"]:
            raise GraphError("node props must contain a non-empty string 'id'")
        nid = props["id"]
        if nid in self._by_id:
            raise DuplicateIdError(f"duplicate node id {nid!r}")
        if self.strict:
            bad = labels - LABELS
            if bad:
                raise SchemaViolation(f"label(s) {sorted(bad)} outside the schema")
        props = dict(props)
        props.setdefault("name", None)
        for v in props.values():
            _check_value(v)
        # keep id and name first for stable serialization
        ordered = {"id": props.pop("id"), "name": props.pop("name"), **props}
        key = self._next_node
        self._next_node += 1
        self.nodes[key] = Node(key, labels, ordered)
        self._by_id[nid] = key
        self._out[key] = {}
        self._in[key] = {}
        for lab in labels:
            self._by_label.setdefault(lab, {})[key] = None
        return key

    def add_label(self, key: int, label: str) -> None:
        node = self.node(key)
        if self.strict and label not in LABELS:
            raise SchemaViolation(f"label {label!r} outside the schema")
        if label in node.labels:
            return
        node.labels.add(label)
        self._by_label.setdefault(label, {})[key] = None
        if self.strict:
            for ek in (*self._out[key], *self._in[key]):
                e = self.edges[ek]
                msg = edge_violation(self.nodes[e.source].labels, e.type,
                                     self.nodes[e.target].labels, e.props)
                if msg:
                    node.labels.discard(label)
                    del self._by_label[label][key]
                    raise SchemaViolation(f"adding {label} to {node.id!r}: {msg}")

    def add_edge(self, source: int, etype: str, target: int,
                 props: dict[str, PropValue] | None = None, *,
                 strict: bool | None = None, edge_id: str | None = None) -> int:
        if source not in self.nodes:
            raise UnknownNodeError(f"unknown source node {source!r}")
        if target not in self.nodes:
            raise UnknownNodeError(f"unknown target node {target!r}")
        props = dict(props or {})
        for v in props.values():
            _check_value(v)
        if etype not in EDGE_TYPES:
            raise SchemaViolation(f"unknown relation type {etype!r}")
        if self.strict if strict is None else strict:
            msg = edge_violation(self.nodes[source].labels, etype, self.nodes[target].labels, props)
            if msg:
                raise SchemaViolation(
                    f"({self.nodes[source].id})-[{etype}]->({self.nodes[target].id}): {msg}")
        if edge_id is None:
            edge_id = f"e{self._next_edge}"
            while edge_id in self._edge_by_id:
                self._next_edge += 1
                edge_id = f"e{self._next_edge}"
        elif edge_id in self._edge_by_id:
            raise DuplicateIdError(f"duplicate edge id {edge_id!r}")
        key = self._next_edge
        self._next_edge += 1
        self.edges[key] = Edge(key, edge_id, source, target, etype, props)
        self._edge_by_id[edge_id] = key
        self._out[source][key] = None
        self._in[target][key] = None
        return key

    def remove_edge(self, key: int) -> None:
        e = self.edges.pop(key)
        del self._edge_by_id[e.id]
        del self._out[e.source][key]
        del self._in[e.target][key]

    def remove_edges_where(self, **props: PropValue) -> int:
        """Remove every edge whose props contain all given key/value pairs."""
        doomed = [
            k for k, e in self.edges.items()
            if all(k2 in e.props and e.props[k2] == v and type(e.props[k2]) is type(v)
                   for k2, v in props.items())
        ]
        for k in doomed:
            self.remove_edge(k)
        return len(doomed)

    # -- lookup -----------------------------------------------------------

    def node(self, key: int) -> Node:
        try:
            return self.nodes[key]
        except KeyError:
            raise UnknownNodeError(f"unknown node {key!r}") from None

    def edge(self, key: int) -> Edge:
        return self.edges[key]

    def key_of(self, node_id: str) -> int:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownNodeError(f"no node with id {node_id!r}") from None

    def has_id(self, node_id: str) -> bool:
        return node_id in self._by_id

    def find_nodes(self, label: str | None = None, props: dict[str, PropValue] | None = None,
                   **kw: PropValue) -> list[int]:
        """All nodes carrying ``label`` (if given) whose props equal every criterion."""
        crit = {**(props or {}), **kw}
        if "id" in crit:
            key = self._by_id.get(crit["id"])  # type: ignore[arg-type]
            pool: Iterable[int] = () if key is None else (key,)
        elif label is not None:
            pool = self._by_label.get(label, {})
        else:
            pool = self.nodes
        out = []
        for k in pool:
            n = self.nodes[k]
            if label is not None and label not in n.labels:
                continue
            if all(c in n.props and n.props[c] == v for c, v in crit.items()):
                out.append(k)
        return out

    def with_label(self, label: str) -> list[int]:
        return list(self._by_label.get(label, {}))

    def edges_of(self, key: int, types: str | Iterable[str] | None = None,
                 direction: str = "out") -> list[int]:
        """Incident edge keys in insertion order, filtered by type."""
        if key not in self.nodes:
            raise UnknownNodeError(f"unknown node {key!r}")
        ts = _types(types)
        if direction == "out":
            pool: Iterable[int] = self._out[key]
        elif direction == "in":
            pool = self._in[key]
        elif direction == "both":
            pool = sorted((*self._out[key], *self._in[key]))
        else:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        return [k for k in pool if ts is None or self.edges[k].type in ts]

    def _steps(self, key: int, ts: frozenset[str] | None, direction: str) -> Iterator[tuple[int, int]]:
        # yields (edge key, neighbor key)
        if direction in ("out", "both"):
            for ek in self._out[key]:
                e = self.edges[ek]
                if ts is None or e.type in ts:
                    yield ek, e.target
        if direction in ("in", "both"):
            for ek in self._in[key]:
                e = self.edges[ek]
                if ts is None or e.type in ts:
                    yield ek, e.source

    def neighbors(self, key: int, types: str | Iterable[str] | None = None,
                  direction: str = "out", label: str | None = None) -> list[int]:
        if key not in self.nodes:
            raise UnknownNodeError(f"unknown node {key!r}")
        if direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        ts = _types(types)
        seen: dict[int, None] = {}
        for _, nb in self._steps(key, ts, direction):
            if label is None or label in self.nodes[nb].labels:
                seen[nb] = None
        return list(seen)

    def transitive(self, start: int, types: str | Iterable[str] | None = None,
                   direction: str = "out", max_depth: int | None = None) -> list[int]:
        """Nodes reachable from ``start`` (excluded) within ``max_depth`` hops,
        in breadth-first discovery order."""
        return [k for k in self.bfs_distances(start, types, direction, max_depth) if k != start]

    def bfs_distances(self, start: int, types: str | Iterable[str] | None = None,
                      direction: str = "out", max_depth: int | None = None,
                      excluded_nodes: Iterable[int] = (),
                      excluded_edges: Callable[[Edge], bool] | None = None) -> dict[int, int]:
        """Hop distance from ``start`` to every reachable node (start included at 0)."""
        if start not in self.nodes:
            raise UnknownNodeError(f"unknown node {start!r}")
        if max_depth is not None and max_depth < 1:
            raise ValueError("max_depth must be positive or None")
        ts = _types(types)
        banned = set(excluded_nodes)
        dist = {start: 0}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            d = dist[cur]
            if max_depth is not None and d >= max_depth:
                continue
            for ek, nb in self._steps(cur, ts, direction):
                if nb in dist or nb in banned:
                    continue
                if excluded_edges is not None and excluded_edges(self.edges[ek]):
                    continue
                dist[nb] = d + 1
                queue.append(nb)
        return dist

    def shortest_path(self, source: int, target: int, types: str | Iterable[str] | None = None,
                      direction: str = "both", excluded_nodes: Iterable[int] = (),
                      excluded_edges: Callable[[Edge], bool] | None = None) -> Path | None:
        """Minimum-hop path; among equal-length paths the one whose node-id
        sequence is lexicographically smallest (parallel edges: lowest key)."""
        for k in (source, target):
            if k not in self.nodes:
                raise UnknownNodeError(f"unknown node {k!r}")
        banned = set(excluded_nodes)
        if source in banned or target in banned:
            return None
        if source == target:
            return Path((source,), ())
        reverse = {"out": "in", "in": "out", "both": "both"}[direction]
        to_target = self.bfs_distances(target, types, reverse, None, banned, excluded_edges)
        if source not in to_target:
            return None
        ts = _types(types)
        nodes, edges = [source], []
        cur = source
        while cur != target:
            want = to_target[cur] - 1
            best: tuple[str, int, int] | None = None
            for ek, nb in self._steps(cur, ts, direction):
                if to_target.get(nb) != want or nb in banned:
                    continue
                if excluded_edges is not None and excluded_edges(self.edges[ek]):
                    continue
                cand = (self.nodes[nb].id, ek, nb)
                if best is None or cand < best:
                    best = cand
            assert best is not None
            _, ek, cur = best
            edges.append(ek)
            nodes.append(cur)
        return Path(tuple(nodes), tuple(edges))

    def k_shortest_paths(self, source: int, target: int, k: int,
                         types: str | Iterable[str] | None = None, direction: str = "out",
                         excluded_nodes: Iterable[int] = (),
                         excluded_edges: Callable[[Edge], bool] | None = None) -> list[Path]:
        """Up to ``k`` loopless paths in order of length (Yen's algorithm)."""
        if k < 1:
            return []
        banned = frozenset(excluded_nodes)
        first = self.shortest_path(source, target, types, direction, banned, excluded_edges)
        if first is None:
            return []
        found = [first]
        found_set = {first.edges}
        heap: list[tuple[int, tuple[str, ...], tuple[int, ...], Path]] = []
        queued: set[tuple[int, ...]] = set()
        while len(found) < k:
            prev = found[-1]
            for i in range(len(prev.nodes) - 1):
                spur = prev.nodes[i]
                root_nodes = prev.nodes[: i + 1]
                root_edges = prev.edges[:i]
                cut = {p.edges[i] for p in found
                       if p.nodes[: i + 1] == root_nodes and p.edges[:i] == root_edges
                       and len(p.edges) > i}

                def skip(e: Edge, cut=cut) -> bool:
                    return e.key in cut or (excluded_edges is not None and excluded_edges(e))

                tail = self.shortest_path(spur, target, types, direction,
                                          banned | set(root_nodes[:-1]), skip)
                if tail is None:
                    continue
                cand = Path(root_nodes[:-1] + tail.nodes, root_edges + tail.edges)
                if cand.edges in found_set or cand.edges in queued:
                    continue
                queued.add(cand.edges)
                heapq.heappush(heap, (len(cand), tuple(self.nodes[n].id for n in cand.nodes),
                                      cand.edges, cand))
            if not heap:
                break
            best = heapq.heappop(heap)[3]
            queued.discard(best.edges)
            found.append(best)
            found_set.add(best.edges)
        return found

    def strongly_connected_components(self, types: str | Iterable[str] | None = None) -> list[list[int]]:
        """Tarjan's algorithm (iterative); components in discovery order."""
        ts = _types(types)
        index: dict[int, int] = {}
        low: dict[int, int] = {}
        on_stack: set[int] = set()
        stack: list[int] = []
        out: list[list[int]] = []
        counter = 0
        for root in self.nodes:
            if root in index:
                continue
            work = [(root, iter([nb for _, nb in self._steps(root, ts, "out")]))]
            index[root] = low[root] = counter
            counter += 1
            stack.append(root)
            on_stack.add(root)
            while work:
                v, it = work[-1]
                advanced = False
                for w in it:
                    if w not in index:
                        index[w] = low[w] = counter
                        counter += 1
                        stack.append(w)
                        on_stack.add(w)
                        work.append((w, iter([nb for _, nb in self._steps(w, ts, "out")])))
                        advanced = True
                        break
                    if w in on_stack:
                        low[v] = min(low[v], index[w])
                if advanced:
                    continue
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    out.append(comp)
        return out

    # -- whole-graph views --------------------------------------------------

    def schema_violations(self) -> list[str]:
        out = []
        for k, n in self.nodes.items():
            bad = n.labels - LABELS
            if bad:
                out.append(f"node {n.id!r}: label(s) {sorted(bad)} outside the schema")
            if "id" not in n.props or "name" not in n.props:
                out.append(f"node {n.id!r}: missing id/name property")
        for e in self.edges.values():
            msg = edge_violation(self.nodes[e.source].labels, e.type,
                                 self.nodes[e.target].labels, e.props)
            if msg:
                out.append(f"edge {e.id} ({self.nodes[e.source].id})-[{e.type}]->"
                           f"({self.nodes[e.target].id}): {msg}")
        return out

    def canonical(self, edge_ids: bool = True) -> tuple:
        """Order-independent snapshot of the observable state, for equality checks."""
        nodes = sorted(
            (n.id, tuple(sorted(n.labels)), tuple(sorted(n.props.items(), key=lambda kv: kv[0])))
            for n in self.nodes.values()
        )
        # repr gives a total order even where props mix None, str and numbers
        edges = sorted((
            ((e.id,) if edge_ids else ()) + (
                self.nodes[e.source].id, self.nodes[e.target].id, e.type,
                tuple(sorted(e.props.items(), key=lambda kv: kv[0])))
            for e in self.edges.values()
        ), key=repr)
        return tuple(nodes), tuple(edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PropertyGraph):
            return NotImplemented
        return self.canonical() == other.canonical()

    __hash__ = None  # type: ignore[assignment]

    def __len__(self) -> int:
        return len(self.nodes)

    def __repr__(self) -> str:
        return f"<PropertyGraph {len(self.nodes)} nodes, {len(self.edges)} edges>"

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": [
                {"id": n.id, "labels": sorted(n.labels), "props": dict(n.props)}
                for n in self.nodes.values()
            ],
            "edges": [
                {"id": e.id, "src": self.nodes[e.source].id, "dst": self.nodes[e.target].id,
                 "type": e.type, "props": dict(e.props)}
                for e in self.edges.values()
            ],
        }

    @classmethod
    def from_dict(cls, doc: Any, strict: bool = True) -> "PropertyGraph":
        if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list) \
                or not isinstance(doc.get("edges"), list):
            raise ParseError("graph document must be an object with 'nodes' and 'edges' arrays")
        g = cls(strict=strict)
        try:
            for i, n in enumerate(doc["nodes"]):
                if not isinstance(n, dict) or not isinstance(n.get("props"), dict):
                    raise ParseError(f"nodes[{i}]: expected object with 'props'")
                props = dict(n["props"])
                if n.get("id") != props.get("id"):
                    raise ParseError(f"nodes[{i}]: 'id' disagrees with props.id")
                g.add_node(n.get("labels", []), props)
            for i, e in enumerate(doc["edges"]):
                if not isinstance(e, dict):
                    raise ParseError(f"edges[{i}]: expected object")
                try:
                    src, dst = g._by_id[e["src"]], g._by_id[e["dst"]]
                except KeyError as exc:
                    raise ParseError(f"edges[{i}]: unknown endpoint {exc.args[0]!r}") from None
                g.add_edge(src, e["type"], dst, e.get("props") or {}, edge_id=e.get("id"))
        except GraphError as exc:
            raise ParseError(f"invalid graph document: {exc}") from exc
        return g

    def to_json(self) -> bytes:
        return (json.dumps(self.to_dict(), indent=1, ensure_ascii=False) + "\n").encode("utf-8")

    @classmethod
    def from_json(cls, data: bytes | str, strict: bool = True) -> "PropertyGraph":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            offset = len(data[: exc.pos].encode("utf-8"))
            raise ParseError(f"malformed graph JSON: {exc.msg}", offset=offset,
                             line=exc.lineno) from exc
        return cls.from_dict(doc, strict=strict)

    def copy(self) -> "PropertyGraph":
        return PropertyGraph.from_dict(self.to_dict(), strict=self.strict)
