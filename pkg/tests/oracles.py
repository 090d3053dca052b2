"""Brute-force reference implementations.

Each oracle works on the plain graph dictionary (``graph.to_dict()``) or on
the IR, never on the traversal primitives of the store, so a bug there
cannot hide in both sides of a comparison.
"""

from __future__ import annotations

from collections import deque
from itertools import product


class Raw:
    def __init__(self, doc: dict):
        self.labels = {n["id"]: set(n["labels"]) for n in doc["nodes"]}
        self.props = {n["id"]: n["props"] for n in doc["nodes"]}
        self.edges = [(e["src"], e["type"], e["dst"], e.get("props", {})) for e in doc["edges"]]
        self._triples = {(s, t, d) for s, t, d, _ in self.edges}

    def has(self, s: str, t: str, d: str) -> bool:
        return (s, t, d) in self._triples

    def name(self, i: str):
        return self.props[i].get("name")

    def ids(self, label: str) -> list[str]:
        return [i for i, ls in self.labels.items() if label in ls]


def up_closure(raw: Raw, start: str, etype: str) -> set[str]:
    """start plus everything reachable along outbound ``etype`` edges (fixpoint)."""
    seen = {start}
    changed = True
    while changed:
        changed = False
        for s, t, d, _ in raw.edges:
            if t == etype and s in seen and d not in seen:
                seen.add(d)
                changed = True
    return seen


def datapath(raw: Raw, anchor: str) -> set[tuple[str, str, str]]:
    """Every (flowitem, hypernode, port pair) triple checked exhaustively."""
    closure = up_closure(raw, anchor, "IS_PART_OF")
    rows = set()
    hpns = raw.ids("HYPERNODE")
    ports = raw.ids("PORT")
    comps = [i for i, ls in raw.labels.items() if {"BLOCK", "INSTANCE"} <= ls]
    for fi in raw.ids("FLOWITEM"):
        if fi not in closure:
            continue
        for h in hpns:
            if not raw.has(fi, "FLOWS_IN", h):
                continue
            for sp, tp in product(ports, ports):
                if not (raw.has(sp, "FLOWS", h) and raw.has(h, "FLOWS", tp)):
                    continue
                for s, t in product(comps, comps):
                    if raw.has(sp, "IS_PART_OF", s) and raw.has(tp, "IS_PART_OF", t):
                        rows.add((fi, s, t))
    return rows


def handles(raw: Raw, item: str, node: str) -> bool:
    """The node is a port fed by a hypernode carrying the item, or owns such a port."""
    def fed(port: str) -> bool:
        return "PORT" in raw.labels[port] and any(
            raw.has(item, "FLOWS_IN", h) and raw.has(h, "FLOWS", port) and "HYPERNODE" in raw.labels[h]
            for h in raw.labels)
    if fed(node):
        return True
    return any(raw.has(p, "IS_PART_OF", node) and fed(p) for p in raw.ids("PORT"))


def fault_predicate(raw: Raw, node: str, faulty: list[str], healthy: list[str]) -> bool:
    return all(handles(raw, f, node) for f in faulty) and not any(
        handles(raw, h, node) for h in healthy)


def transition_digraph(raw: Raw, banned_triggers: set[str] = frozenset()) -> dict[str, set[str]]:
    """Vertex -> successors over transition hypernodes not triggered by a banned block."""
    adj: dict[str, set[str]] = {}
    for h in raw.ids("HYPERNODE"):
        srcs = [s for s, t, d, _ in raw.edges if t == "TRANSITION" and d == h]
        dsts = [d for s, t, d, _ in raw.edges if t == "TRANSITION" and s == h]
        trig = {s for s, t, d, _ in raw.edges if t == "TRIGGERS" and d == h}
        if trig & banned_triggers:
            continue
        for s in srcs:
            adj.setdefault(s, set()).update(dsts)
    return adj


def bfs_hops(adj: dict[str, set[str]], src: str, dst: str) -> int | None:
    dist = {src: 0}
    q = deque([src])
    while q:
        u = q.popleft()
        if u == dst:
            return dist[u]
        for v in adj.get(u, ()):
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return None


def reachable(adj: dict[str, set[str]], seeds) -> set[str]:
    seen = set(seeds)
    q = deque(seeds)
    while q:
        u = q.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                q.append(v)
    return seen
