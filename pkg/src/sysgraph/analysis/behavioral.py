"""State-machine and activity analyses over the behavioral subgraph."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import AnalysisError, UnknownNameError
from ..graph_store import (
    ACT, ACTIVITY, ACTNODE, BLOCK, CONTROL_FLOW, EXECUTION, HYPERNODE, IS_EXECUTION_OF,
    IS_PART_OF, IS_USED_IN, OBJECT_FLOW, PSEUDOSTATE, STATE, TRANSITION, TRIGGER, TRIGGERS,
    PropertyGraph,
)
from .common import NodeRef, resolve, sort_key


@dataclass(frozen=True)
class Condition:
    triggers: tuple[str | None, ...]
    guard: str | None
    from_state: str | None
    from_id: str
    transition_id: str

    def to_dict(self) -> dict:
        return {"triggers": list(self.triggers), "guard": self.guard,
                "fromState": self.from_state, "fromId": self.from_id,
                "transitionId": self.transition_id}


@dataclass
class StatePathResult:
    path: list[NodeRef]
    triggers: list[list[str | None]] = field(default_factory=list)
    guards: list[str | None] = field(default_factory=list)
    activities: list[list[str | None]] = field(default_factory=list)

    @property
    def hops(self) -> int:
        return len(self.guards)

    def to_dict(self) -> dict:
        return {"path": [r.to_dict() for r in self.path], "hops": self.hops,
                "triggers": self.triggers, "guards": self.guards,
                "activities": self.activities}


@dataclass
class ActivityRoute:
    path: list[NodeRef]
    activities: list[str | None]
    guards: list[str]
    inputs: list[NodeRef]

    def to_dict(self) -> dict:
        return {"path": [r.to_dict() for r in self.path], "activities": self.activities,
                "guards": self.guards, "inputs": [r.to_dict() for r in self.inputs]}


def _names(graph: PropertyGraph, keys: Iterable[int]) -> list[str | None]:
    return [graph.node(k).name for k in sorted(set(keys), key=lambda k: sort_key(graph, k))]


def _triggers_named(graph: PropertyGraph, names: Iterable[str]) -> set[int]:
    """Trigger nodes matched by name; every name must match at least one."""
    out: set[int] = set()
    for name in names:
        hits = graph.find_nodes(TRIGGER, name=name)
        if not hits:
            raise UnknownNameError(name, "trigger")
        out.update(hits)
    return out


def _hypernodes_triggered_by(graph: PropertyGraph, triggers: Iterable[int]) -> set[int]:
    out: set[int] = set()
    for t in triggers:
        out.update(graph.neighbors(t, TRIGGERS, "out", label=HYPERNODE))
    return out


def _inbound_anchors(graph: PropertyGraph, state: int,
                     kinds: tuple[str, str] = ("entry", "initial")) -> list[int]:
    """The state plus the pseudostate that transitions are redirected to
    (inbound: entry else initial; outbound: exit else final)."""
    kids = [k for k in graph.neighbors(state, IS_PART_OF, "in", label=PSEUDOSTATE)]
    for kind in kinds:
        hits = sorted((k for k in kids if graph.node(k).props.get("kind") == kind),
                      key=lambda k: graph.node(k).id)
        if hits:
            return [state, hits[0]]
    return [state]


# ---------------------------------------------------------------------------
# state machines
# ---------------------------------------------------------------------------


def conditions_into_state(graph: PropertyGraph, state: str | None = None, *,
                          node_id: str | None = None) -> list[Condition]:
    s = resolve(graph, state, node_id, label=STATE, what="state")
    out = []
    for anchor in _inbound_anchors(graph, s):
        for h in graph.neighbors(anchor, TRANSITION, "in", label=HYPERNODE):
            trig = tuple(_names(graph, graph.neighbors(h, TRIGGERS, "in")))
            for src in graph.neighbors(h, TRANSITION, "in"):
                if src != s and s in graph.transitive(src, IS_PART_OF, "out"):
                    continue  # internal to the composite state
                n = graph.node(src)
                out.append(Condition(trig, graph.node(h).props.get("guard"), n.name, n.id,
                                     graph.node(h).id))
    out.sort(key=lambda c: (c.from_state is None, c.from_state or "", c.from_id, c.transition_id))
    return out


def _state_exclusion(graph: PropertyGraph, names: Iterable[str]) -> set[int]:
    """Named states/machines together with everything IS_PART_OF them."""
    out: set[int] = set()
    for name in names:
        hits = graph.find_nodes(STATE, name=name) or graph.find_nodes(BLOCK, name=name)
        if not hits:
            raise UnknownNameError(name, "state")
        for k in hits:
            out.add(k)
            out.update(graph.transitive(k, IS_PART_OF, "in"))
    return out


def _hop_activities(graph: PropertyGraph, hpn: int, entered: int) -> list[str | None]:
    effect = [k for k in graph.neighbors(hpn, IS_PART_OF, "in", label=ACT)]
    behaviors = [k for k in graph.neighbors(entered, IS_PART_OF, "in", label=ACT)
                 if EXECUTION in graph.node(k).labels]
    slot_order = {"entry": 0, "do": 1, "exit": 2}
    behaviors.sort(key=lambda k: slot_order.get(graph.node(k).props.get("slot"), 3))
    return _names(graph, effect) + [graph.node(k).name for k in behaviors]


def state_paths(graph: PropertyGraph, source: str | None = None, target: str | None = None,
                forbidden_triggers: Iterable[str] = (), forbidden_states: Iterable[str] = (),
                max_paths: int = 1, *, source_id: str | None = None,
                target_id: str | None = None) -> list[StatePathResult]:
    """Shortest admissible transition paths first; hop = one transition."""
    if max_paths < 1:
        raise AnalysisError(f"max_paths must be positive, got {max_paths}")
    src = resolve(graph, source, source_id, label=STATE, what="state")
    dst = resolve(graph, target, target_id, label=STATE, what="state")
    banned = _hypernodes_triggered_by(graph, _triggers_named(graph, forbidden_triggers))
    banned |= _state_exclusion(graph, forbidden_states)
    if src == dst:
        return [] if src in banned else [StatePathResult([NodeRef.of(graph, src)])]
    results = []
    # composite endpoints: search between their redirection pseudostates
    src_k = _inbound_anchors(graph, src, ("exit", "final"))[-1]
    dst_k = _inbound_anchors(graph, dst)[-1]
    for p in graph.k_shortest_paths(src_k, dst_k, max_paths, TRANSITION, "out", banned):
        r = StatePathResult([NodeRef.of(graph, k) for k in p.nodes])
        for i in range(1, len(p.nodes), 2):
            h, entered = p.nodes[i], p.nodes[i + 1]
            r.triggers.append(_names(graph, graph.neighbors(h, TRIGGERS, "in")))
            r.guards.append(graph.node(h).props.get("guard"))
            r.activities.append(_hop_activities(graph, h, entered))
        results.append(r)
    return results


def _machine_roots(graph: PropertyGraph) -> list[int]:
    return [k for k in graph.with_label(STATE)
            if not graph.neighbors(k, IS_PART_OF, "out")
            and EXECUTION not in graph.node(k).labels]


def _initials(graph: PropertyGraph, owner: int) -> list[int]:
    return [k for k in graph.neighbors(owner, IS_PART_OF, "in", label=PSEUDOSTATE)
            if graph.node(k).props.get("kind") == "initial"]


def reachable_states(graph: PropertyGraph, banned_hypernodes: set[int],
                     seeds: Iterable[int]) -> set[int]:
    """Vertices reachable over TRANSITION pairs avoiding banned hypernodes.

    Reaching a vertex makes its enclosing states active; reaching a
    submachine state enters the referenced machine at its initial pseudostates.
    """
    seen: set[int] = set()
    stack = list(seeds)
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        for anc in graph.transitive(cur, IS_PART_OF, "out"):
            if STATE in graph.node(anc).labels and anc not in seen:
                seen.add(anc)
        for m in graph.neighbors(cur, IS_EXECUTION_OF, "out", label=STATE):
            stack.extend(_initials(graph, m))
        for h in graph.neighbors(cur, TRANSITION, "out", label=HYPERNODE):
            if h not in banned_hypernodes:
                stack.extend(graph.neighbors(h, TRANSITION, "out"))
    return seen


def default_entry_points(graph: PropertyGraph) -> list[int]:
    """Initial pseudostates of top-level machines not used as submachines."""
    out = []
    for root in _machine_roots(graph):
        if graph.neighbors(root, IS_EXECUTION_OF, "in"):
            continue
        out.extend(_initials(graph, root))
    return out


def _unreachable_keys(graph: PropertyGraph, disabled: str | Sequence[str],
                      entry_points: Iterable[str] | None) -> set[int]:
    names = [disabled] if isinstance(disabled, str) else list(disabled)
    banned = _hypernodes_triggered_by(graph, _triggers_named(graph, names))
    if entry_points is None:
        seeds = default_entry_points(graph)
    else:
        seeds = []
        for name in entry_points:
            seeds.extend(_inbound_anchors(graph, resolve(graph, name, label=STATE, what="state")))
    reached = reachable_states(graph, banned, seeds)
    states = [k for k in graph.with_label(STATE) if graph.neighbors(k, IS_PART_OF, "out")]
    return {k for k in states if k not in reached}


def unreachable_states(graph: PropertyGraph, disabled_trigger: str | Sequence[str],
                       entry_points: Iterable[str] | None = None) -> list[NodeRef]:
    keys = _unreachable_keys(graph, disabled_trigger, entry_points)
    return [NodeRef.of(graph, k) for k in sorted(keys, key=lambda k: sort_key(graph, k))]


# ---------------------------------------------------------------------------
# object production and activities
# ---------------------------------------------------------------------------


class _Liveness:
    """Whether a behavior node can still run once some states are unreachable.

    A state behavior execution lives with its state, an effect execution with
    the transition it belongs to, a flattened replica with its host activity,
    and an activity definition with any of its executions or callers (an
    activity nobody executes or calls is taken to run on its own).
    """

    def __init__(self, graph: PropertyGraph, dead_states: set[int], banned: set[int]):
        self.g = graph
        self.dead_states = dead_states
        self.banned = banned
        self.memo: dict[int, bool] = {}

    def node(self, k: int, stack: frozenset = frozenset()) -> bool:
        if k in self.memo:
            return self.memo[k]
        if k in stack:
            return False
        stack = stack | {k}
        g = self.g
        labels = g.node(k).labels
        if STATE in labels:
            live = k not in self.dead_states
        elif HYPERNODE in labels:
            live = k not in self.banned and all(
                self.node(s, stack) for s in g.neighbors(k, TRANSITION, "in"))
        elif ACT in labels and EXECUTION in labels:
            owners = g.neighbors(k, IS_PART_OF, "out")
            live = any(self.node(o, stack) for o in owners) if owners else True
        elif ACTIVITY in labels and not g.neighbors(k, IS_PART_OF, "out"):
            live = self.activity(k, stack)
        else:
            owners = g.neighbors(k, IS_PART_OF, "out")
            live = any(self.node(o, stack) for o in owners) if owners else True
        self.memo[k] = live
        return live

    def activity(self, a: int, stack: frozenset) -> bool:
        g = self.g
        execs = g.neighbors(a, IS_EXECUTION_OF, "in")
        hosts: set[int] = set()
        for n in g.neighbors(a, IS_PART_OF, "in", label=ACT):
            for r in g.neighbors(n, IS_EXECUTION_OF, "in"):
                hosts.update(g.neighbors(r, IS_PART_OF, "out"))
        if not execs and not hosts:
            return True
        return any(self.node(x, stack) for x in execs) or any(self.node(h, stack) for h in hosts)


def lost_outputs(graph: PropertyGraph, disabled_trigger: str | Sequence[str]) -> list[NodeRef]:
    names = [disabled_trigger] if isinstance(disabled_trigger, str) else list(disabled_trigger)
    banned = _hypernodes_triggered_by(graph, _triggers_named(graph, names))
    dead = _unreachable_keys(graph, names, None)
    live = _Liveness(graph, dead, banned)
    lost = []
    for b in graph.with_label(BLOCK):
        producers: set[int] = set()
        for n in graph.neighbors(b, IS_USED_IN, "out"):
            producers.update(graph.neighbors(n, OBJECT_FLOW, "in", label=ACT))
        if producers and not any(live.node(p) for p in producers):
            lost.append(b)
    return [NodeRef.of(graph, k) for k in sorted(lost, key=lambda k: sort_key(graph, k))]


def activity_routes(graph: PropertyGraph, source: str | None = None, target: str | None = None,
                    max_paths: int = 1, *, source_id: str | None = None,
                    target_id: str | None = None) -> list[ActivityRoute]:
    if max_paths < 1:
        raise AnalysisError(f"max_paths must be positive, got {max_paths}")
    src = resolve(graph, source, source_id, label=ACT, exclude=(EXECUTION,), what="activity node")
    dst = resolve(graph, target, target_id, label=ACT, exclude=(EXECUTION,), what="activity node")
    if src == dst:
        node_seqs, edge_seqs = [(src,)], [()]
    else:
        found = graph.k_shortest_paths(src, dst, max_paths, CONTROL_FLOW, "out")
        node_seqs = [p.nodes for p in found]
        edge_seqs = [p.edges for p in found]
    routes = []
    for nodes, edges in zip(node_seqs, edge_seqs):
        acts = [graph.node(k).name for k in nodes if ACTIVITY in graph.node(k).labels]
        guards = [graph.edge(e).props.get("guard") for e in edges]
        inputs: set[int] = set()
        for k in nodes:
            for pin in graph.neighbors(k, OBJECT_FLOW, "in", label=ACTNODE):
                inputs.update(graph.neighbors(pin, IS_USED_IN, "in", label=BLOCK))
        routes.append(ActivityRoute([NodeRef.of(graph, k) for k in nodes], acts,
                                    [g for g in guards if g is not None],
                                    [NodeRef.of(graph, k) for k in
                                     sorted(inputs, key=lambda k: sort_key(graph, k))]))
    return routes


def _object_nodes(graph: PropertyGraph, obj: int) -> list[int]:
    return [n for n in graph.neighbors(obj, IS_USED_IN, "out")
            if EXECUTION not in graph.node(n).labels]


def _producers(graph: PropertyGraph, obj: int) -> set[int]:
    out: set[int] = set()
    for n in _object_nodes(graph, obj):
        out.update(p for p in graph.neighbors(n, OBJECT_FLOW, "in", label=ACT)
                   if EXECUTION not in graph.node(p).labels)
    return out


def object_usage(graph: PropertyGraph, obj: str | None = None, mode: str = "requires", *,
                 node_id: str | None = None) -> list[NodeRef]:
    """requires: consumers of the object; produces: its producers;
    inputs: blocks used upstream of any producer."""
    if mode not in ("requires", "produces", "inputs"):
        raise AnalysisError(f"unknown object usage mode {mode!r}")
    o = resolve(graph, obj, node_id, label=BLOCK, what="object")
    if mode == "requires":
        found: set[int] = set()
        for n in _object_nodes(graph, o):
            found.update(c for c in graph.neighbors(n, OBJECT_FLOW, "out", label=ACT)
                         if EXECUTION not in graph.node(c).labels)
    elif mode == "produces":
        found = _producers(graph, o)
    else:
        found = set()
        for p in _producers(graph, o):
            for k in [p] + graph.transitive(p, (OBJECT_FLOW, CONTROL_FLOW), "in"):
                found.update(graph.neighbors(k, IS_USED_IN, "in", label=BLOCK))
        found.discard(o)
    return [NodeRef.of(graph, k) for k in sorted(found, key=lambda k: sort_key(graph, k))]
