"""ModelIR -> PropertyGraph conversion following the SysML graph schema.

Three passes run in order: structure (blocks, ports, instances, connectors
with hypernodes and synthesized port instances), activities (with nested
call flattening), and state machines (transition hypernodes, triggers,
state behaviors).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .errors import IrError
from .graph_store import (
    ACT, ACTIVITY, ACTNODE, BLOCK, CONTROL_FLOW, EXECUTION, FLOWITEM, FLOWS, FLOWS_IN,
    HYPERNODE, INSTANCE, IS_EXECUTION_OF, IS_INSTANCE_OF, IS_OF_TYPE, IS_PART_OF,
    IS_USED_IN, OBJECT_FLOW, PORT, PSEUDOSTATE, STATE, TRANSITION, TRIGGER, TRIGGERS,
    PropertyGraph,
)
from .model_ir import ActNodeRec, BlockRec, ConnEnd, FlowRec, ModelIR, validate_ir

# Relation linking a transition's effect execution to the transition hypernode.
EFFECT_RELATION = IS_PART_OF


@dataclass
class Diagnostic:
    severity: str  # error | warning | info
    message: str
    source_id: str | None = None

    def to_dict(self) -> dict:
        return {"severity": self.severity, "message": self.message, "sourceId": self.source_id}


@dataclass
class TransformReport:
    node_count: int = 0
    edge_count: int = 0
    synthesized_port_instances: int = 0
    flattened_executions: int = 0
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def diag(self, severity: str, message: str, source_id: str | None = None) -> None:
        self.diagnostics.append(Diagnostic(severity, message, source_id))

    def to_dict(self) -> dict:
        return {
            "nodeCount": self.node_count,
            "edgeCount": self.edge_count,
            "synthesizedPortInstances": self.synthesized_port_instances,
            "flattenedExecutions": self.flattened_executions,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
        }


def transform(ir: ModelIR) -> tuple[PropertyGraph, TransformReport]:
    issues = validate_ir(ir)
    if issues:
        raise IrError(f"IR fails validation ({len(issues)} issue(s)); first: {issues[0]}")
    graph = PropertyGraph(strict=True)
    report = TransformReport()
    transform_structure(ir, graph, report)
    transform_activities(ir, graph, report)
    transform_state_machines(ir, graph, report)
    report.node_count = len(graph.nodes)
    report.edge_count = len(graph.edges)
    return graph, report


# ---------------------------------------------------------------------------
# structure
# ---------------------------------------------------------------------------


def flowitem_ids(ir: ModelIR) -> set[str]:
    """Conveyed blocks plus every block transitively IS_PART_OF-contained in one."""
    blocks = {b.id for b in ir.blocks}
    parts_of: dict[str, list[str]] = defaultdict(list)
    for a in ir.associations:
        parts_of[a.whole].append(a.part)
    seeds = {it.block for c in ir.connectors for it in c.items}
    seeds |= {b.id for b in ir.blocks if b.is_flow_item_candidate}
    out = set(seeds)
    stack = list(seeds)
    while stack:
        for p in parts_of[stack.pop()]:
            if p in blocks and p not in out:
                out.add(p)
                stack.append(p)
    return out


def port_instance_name(instance: BlockRec, definition: BlockRec | None, port_name: str | None) -> str:
    base = instance.name if instance.name is not None else (
        definition.name if definition is not None and definition.name is not None else "")
    if port_name is None:
        return f"{base}_port_instance"
    return f"{base}_{port_name}_port_instance"


def transform_structure(ir: ModelIR, graph: PropertyGraph,
                        report: TransformReport | None = None) -> None:
    report = report if report is not None else TransformReport()
    blocks = {b.id: b for b in ir.blocks}
    ports = {p.id: p for p in ir.ports}
    flowitems = flowitem_ids(ir)
    key = graph.key_of

    for b in ir.blocks:
        labels = {BLOCK}
        if b.is_instance:
            labels.add(INSTANCE)
        if b.id in flowitems:
            labels.add(FLOWITEM)
        graph.add_node(labels, {"id": b.id, "name": b.name})
    for p in ir.ports:
        graph.add_node({PORT}, {"id": p.id, "name": p.name})

    for b in ir.blocks:
        if b.is_instance:
            graph.add_edge(key(b.id), IS_INSTANCE_OF, key(b.instance_of))
    for p in ir.ports:
        graph.add_edge(key(p.id), IS_PART_OF, key(p.owner))
        if p.type is not None:
            graph.add_edge(key(p.id), IS_OF_TYPE, key(p.type))
    generals: dict[str, list[str]] = defaultdict(list)
    for g in ir.generalizations:
        graph.add_edge(key(g.specific), IS_OF_TYPE, key(g.general))
        generals[g.specific].append(g.general)
    for a in ir.associations:
        graph.add_edge(key(a.part), IS_PART_OF, key(a.whole), {"type": a.kind})

    def ancestry(block_id: str) -> set[str]:
        seen = {block_id}
        stack = [block_id]
        while stack:
            for gen in generals[stack.pop()]:
                if gen not in seen:
                    seen.add(gen)
                    stack.append(gen)
        return seen

    def anchor_of(conn_id: str, end: ConnEnd) -> BlockRec | None:
        port = ports[end.port]
        if end.instance is None:
            return blocks[port.owner]
        inst = blocks[end.instance]
        if port.owner not in ancestry(inst.instance_of):
            report.diag("error", f"connector {conn_id}: port {port.id!r} is not owned by the "
                                 f"definition of instance {inst.id!r}; connector skipped", conn_id)
            return None
        return inst

    def port_instance(port_id: str, anchor: BlockRec) -> int:
        pi_id = f"{port_id} {anchor.id}"
        if graph.has_id(pi_id):
            return key(pi_id)
        port = ports[port_id]
        definition = blocks.get(anchor.instance_of) if anchor.instance_of else None
        k = graph.add_node({PORT, INSTANCE},
                           {"id": pi_id, "name": port_instance_name(anchor, definition, port.name)})
        graph.add_edge(k, IS_PART_OF, key(anchor.id))
        graph.add_edge(k, IS_INSTANCE_OF, key(port_id))
        report.synthesized_port_instances += 1
        return k

    for c in ir.connectors:
        anchor_a = anchor_of(c.id, c.end_a)
        anchor_b = anchor_of(c.id, c.end_b)
        if anchor_a is None or anchor_b is None:
            continue
        if c.end_a.instance is None and c.end_b.instance is None:
            report.diag("warning", f"connector {c.id}: class-level connector, port instances "
                                   "synthesized against block definitions", c.id)
        elif c.end_a.instance is None or c.end_b.instance is None:
            report.diag("info", f"connector {c.id}: one end has no part instance, anchored at "
                                "the port owner's definition", c.id)
        pi_a = port_instance(c.end_a.port, anchor_a)
        pi_b = port_instance(c.end_b.port, anchor_b)
        by_dir = {"AtoB": [it.block for it in c.items if it.direction == "AtoB"],
                  "BtoA": [it.block for it in c.items if it.direction == "BtoA"]}
        directions = [d for d in ("AtoB", "BtoA") if by_dir[d]] or ["AtoB"]
        for d in directions:
            hid = c.id if d == directions[0] else f"{c.id}#{d}"
            h = graph.add_node({HYPERNODE}, {"id": hid, "name": c.name})
            src, dst = (pi_a, pi_b) if d == "AtoB" else (pi_b, pi_a)
            graph.add_edge(src, FLOWS, h)
            graph.add_edge(h, FLOWS, dst)
            for item in dict.fromkeys(by_dir[d]):
                graph.add_edge(key(item), FLOWS_IN, h)


# ---------------------------------------------------------------------------
# activities
# ---------------------------------------------------------------------------


def _act_labels(node: ActNodeRec) -> set[str]:
    return {ACT, ACTIVITY} if node.nodetype == "action" else {ACT, ACTNODE}


def _call_cycles(ir: ModelIR) -> tuple[set[str], list[list[str]]]:
    """Activities whose call closure contains a cycle, and the cycles themselves."""
    calls: dict[str, list[str]] = defaultdict(list)
    for c in ir.call_actions:
        calls[c.owner].append(c.behavior)
    g = PropertyGraph(strict=False)
    for a in ir.activities:
        g.add_node((), {"id": a.id})
    for owner, targets in calls.items():
        for t in targets:
            g.add_edge(g.key_of(owner), IS_PART_OF, g.key_of(t))
    cycles = []
    cyclic: set[str] = set()
    for comp in g.strongly_connected_components():
        ids = [g.nodes[k].id for k in comp]
        if len(ids) > 1 or ids[0] in calls.get(ids[0], ()):
            cycles.append(sorted(ids))
            cyclic.update(ids)
    tainted = set(cyclic)
    changed = True
    while changed:
        changed = False
        for owner, targets in calls.items():
            if owner not in tainted and any(t in tainted for t in targets):
                tainted.add(owner)
                changed = True
    return tainted, cycles


def _pick(candidates: list[ActNodeRec], what: str, activity_id: str,
          report: TransformReport) -> ActNodeRec | None:
    if not candidates:
        report.diag("error", f"activity {activity_id}: no {what} node to anchor call flows",
                    activity_id)
        return None
    chosen = min(candidates, key=lambda n: n.id)
    if len(candidates) > 1:
        report.diag("warning", f"activity {activity_id}: {len(candidates)} {what} nodes, "
                               f"using {chosen.id!r}", activity_id)
    return chosen


def transform_activities(ir: ModelIR, graph: PropertyGraph,
                         report: TransformReport | None = None) -> None:
    report = report if report is not None else TransformReport()
    key = graph.key_of
    activity_ids = {a.id for a in ir.activities}
    nodes_of: dict[str, list[ActNodeRec]] = defaultdict(list)
    for n in ir.act_nodes:
        nodes_of[n.owner].append(n)
    calls_of: dict[str, list] = defaultdict(list)
    call_owner = {}
    for c in ir.call_actions:
        calls_of[c.owner].append(c)
        call_owner[c.id] = c.owner
    node_owner = {n.id: n.owner for n in ir.act_nodes}

    def flow_owner(fl: FlowRec) -> str:
        for end in (fl.source, fl.target):
            if end in node_owner:
                return node_owner[end]
            if end in call_owner:
                return call_owner[end]
        return fl.source

    flows_of: dict[str, list[tuple[str, FlowRec]]] = defaultdict(list)
    for fl in ir.control_flows:
        flows_of[flow_owner(fl)].append((CONTROL_FLOW, fl))
    for fl in ir.object_flows:
        flows_of[flow_owner(fl)].append((OBJECT_FLOW, fl))

    tainted, cycles = _call_cycles(ir)
    for cyc in cycles:
        report.diag("error", f"activity call cycle {' -> '.join(cyc)}; flattening aborted "
                             "for this component", cyc[0])

    for a in ir.activities:
        graph.add_node({ACT, ACTIVITY}, {"id": a.id, "name": a.name})
    for n in ir.act_nodes:
        graph.add_node(_act_labels(n), {"id": n.id, "name": n.name, "nodetype": n.nodetype})
    for n in ir.act_nodes:
        graph.add_edge(key(n.id), IS_PART_OF, key(n.owner))
        if n.represents is not None and n.nodetype != "action":
            graph.add_edge(key(n.represents), IS_USED_IN, key(n.id))

    def materialize(activity_id: str, prefix: str | None, host: str) -> dict[str, int]:
        """Create (or, for prefix None, look up) the nodes of one activity and
        wire its flows; returns id -> node key for its ActNodes."""
        local: dict[str, int] = {}
        for n in nodes_of[activity_id]:
            if prefix is None:
                local[n.id] = key(n.id)
                continue
            rk = graph.add_node(_act_labels(n) | {EXECUTION},
                                {"id": f"{prefix}/{n.id}", "name": n.name, "nodetype": n.nodetype})
            graph.add_edge(rk, IS_EXECUTION_OF, key(n.id))
            graph.add_edge(rk, IS_PART_OF, key(host))
            if n.represents is not None and n.nodetype != "action":
                graph.add_edge(key(n.represents), IS_USED_IN, rk)
            local[n.id] = rk

        entry: dict[str, int | None] = {}
        exit_: dict[str, int | None] = {}
        for c in calls_of[activity_id]:
            if c.behavior in tainted:
                report.diag("error", f"call {c.id} to {c.behavior!r} is part of a call cycle; "
                                     "not flattened", c.id)
                entry[c.id] = exit_[c.id] = None
                continue
            sub_prefix = c.id if prefix is None else f"{prefix}/{c.id}"
            sub = materialize(c.behavior, sub_prefix, host)
            report.flattened_executions += 1
            inner = nodes_of[c.behavior]
            start = _pick([n for n in inner if n.nodetype == "initial"], "initial",
                          c.behavior, report)
            end = _pick([n for n in inner if n.nodetype == "final"], "final", c.behavior, report)
            entry[c.id] = sub[start.id] if start else None
            exit_[c.id] = sub[end.id] if end else None

        for etype, fl in flows_of[activity_id]:
            def resolve(end: str, as_source: bool) -> int | None:
                if end in local:
                    return local[end]
                if end in entry:
                    return exit_[end] if as_source else entry[end]
                if end in activity_ids and prefix is None:
                    return key(end)
                return None
            src = resolve(fl.source, True)
            dst = resolve(fl.target, False)
            if src is None or dst is None:
                if prefix is None:
                    report.diag("warning", f"flow {fl.id}: endpoint could not be anchored; "
                                           "flow dropped", fl.id)
                continue
            props = {"guard": fl.guard}
            if prefix is not None:
                props["execution"] = prefix
            graph.add_edge(src, etype, dst, props)
        return local

    for a in ir.activities:
        materialize(a.id, None, a.id)


# ---------------------------------------------------------------------------
# state machines
# ---------------------------------------------------------------------------


def transform_state_machines(ir: ModelIR, graph: PropertyGraph,
                             report: TransformReport | None = None) -> None:
    report = report if report is not None else TransformReport()
    key = graph.key_of
    activity_names = {a.id: a.name for a in ir.activities}
    children: dict[str, list] = defaultdict(list)
    for s in ir.states:
        children[s.owner].append(s)
    pseudo_children: dict[str, list] = defaultdict(list)
    for p in ir.pseudostates:
        pseudo_children[p.owner].append(p)
        children[p.owner].append(p)
    state_ids = {s.id for s in ir.states}
    vertex_ids = state_ids | {p.id for p in ir.pseudostates}

    for m in ir.state_machines:
        graph.add_node({STATE}, {"id": m.id, "name": m.name})
    for s in ir.states:
        labels = {STATE, EXECUTION} if s.submachine else {STATE}
        graph.add_node(labels, {"id": s.id, "name": s.name})
    for p in ir.pseudostates:
        graph.add_node({PSEUDOSTATE}, {"id": p.id, "name": p.name, "kind": p.kind})
    for s in ir.states:
        graph.add_edge(key(s.id), IS_PART_OF, key(s.owner))
    for p in ir.pseudostates:
        graph.add_edge(key(p.id), IS_PART_OF, key(p.owner))

    for s in ir.states:
        if s.submachine:
            graph.add_edge(key(s.id), IS_EXECUTION_OF, key(s.submachine))
        chain = []
        for slot, act in (("entry", s.entry_activity), ("do", s.do_activity),
                          ("exit", s.exit_activity)):
            if act is None:
                continue
            k = graph.add_node({ACT, ACTIVITY, EXECUTION},
                               {"id": f"{s.id}#{slot}", "name": activity_names[act], "slot": slot})
            graph.add_edge(k, IS_EXECUTION_OF, key(act))
            graph.add_edge(k, IS_PART_OF, key(s.id))
            chain.append(k)
        for a, b in zip(chain, chain[1:]):
            graph.add_edge(a, CONTROL_FLOW, b, {"guard": None})

    def redirect(vertex: str, inbound: bool, trans_id: str) -> str:
        if vertex not in state_ids or not children[vertex]:
            return vertex
        kinds = ("entry", "initial") if inbound else ("exit", "final")
        for kind in kinds:
            cands = sorted(p.id for p in pseudo_children[vertex] if p.kind == kind)
            if cands:
                return cands[0]
        report.diag("warning", f"transition {trans_id}: composite state {vertex!r} has no "
                               f"{' or '.join(kinds)} pseudostate; anchored at the state", trans_id)
        return vertex

    for t in ir.transitions:
        if t.source not in vertex_ids or t.target not in vertex_ids:
            report.diag("error", f"transition {t.id}: unresolved source/target; skipped", t.id)
            continue
        src = redirect(t.source, False, t.id)
        dst = redirect(t.target, True, t.id)
        h = graph.add_node({HYPERNODE}, {"id": t.id, "name": None, "guard": t.guard})
        graph.add_edge(key(src), TRANSITION, h)
        graph.add_edge(h, TRANSITION, key(dst))
        for trig in dict.fromkeys(t.triggers):
            tk = key(trig)
            graph.add_label(tk, TRIGGER)
            graph.add_edge(tk, TRIGGERS, h)
        if t.effect is not None:
            k = graph.add_node({ACT, ACTIVITY, EXECUTION},
                               {"id": f"{t.id}#effect", "name": activity_names[t.effect],
                                "slot": "effect"})
            graph.add_edge(k, IS_EXECUTION_OF, key(t.effect))
            graph.add_edge(k, EFFECT_RELATION, h)
