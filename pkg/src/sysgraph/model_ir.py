"""Tool-neutral intermediate representation (IR) of a SysML model.

The IR is a flat list-of-records form: one list per element kind, records
referencing each other by opaque string ids.  It is the hand-over format
between ingestion (XMI or hand-written JSON) and the graph transform.

The canonical JSON interchange is documented in ``docs/ir_format.md``.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field, fields
from typing import Any, Iterator

from .errors import IrDuplicateError, IrError, IrReferenceError, ParseError

log = logging.getLogger(__name__)

ASSOC_KINDS = ("composite", "shared")
DIRECTIONS = ("AtoB", "BtoA")
ACT_NODE_TYPES = (
    "initial", "final", "fork", "join", "merge", "decision", "buffer", "parameter",
    "action", "pin",
)
PSEUDO_KINDS = ("initial", "final", "entry", "exit", "choice", "junction")


def _f(key: str, kind: str = "str", **kw: Any):
    # kind: str (required), opt (str|null), bool, strs (list of str), end, items
    return field(metadata={"key": key, "kind": kind}, **kw)


@dataclass(frozen=True)
class ConnEnd:
    port: str
    instance: str | None = None


@dataclass(frozen=True)
class ConveyedItem:
    block: str
    direction: str = "AtoB"


@dataclass(frozen=True)
class BlockRec:
    id: str = _f("id")
    name: str | None = _f("name", "opt", default=None)
    is_instance: bool = _f("isInstance", "bool", default=False)
    instance_of: str | None = _f("instanceOf", "opt", default=None)
    is_flow_item_candidate: bool = _f("isFlowItemCandidate", "bool", default=False)


@dataclass(frozen=True)
class PortRec:
    id: str = _f("id")
    name: str | None = _f("name", "opt", default=None)
    owner: str = _f("owner", default="")
    type: str | None = _f("type", "opt", default=None)


@dataclass(frozen=True)
class GenRec:
    id: str = _f("id")
    specific: str = _f("specific", default="")
    general: str = _f("general", default="")


@dataclass(frozen=True)
class AssocRec:
    id: str = _f("id")
    whole: str = _f("whole", default="")
    part: str = _f("part", default="")
    kind: str = _f("kind", default="composite")


@dataclass(frozen=True)
class ConnRec:
    id: str = _f("id")
    name: str | None = _f("name", "opt", default=None)
    end_a: ConnEnd = _f("endA", "end", default=ConnEnd(""))
    end_b: ConnEnd = _f("endB", "end", default=ConnEnd(""))
    items: tuple[ConveyedItem, ...] = _f("items", "items", default=())


@dataclass(frozen=True)
class ActivityRec:
    id: str = _f("id")
    name: str | None = _f("name", "opt", default=None)


@dataclass(frozen=True)
class ActNodeRec:
    id: str = _f("id")
    name: str | None = _f("name", "opt", default=None)
    owner: str = _f("owner", default="")
    nodetype: str = _f("nodetype", default="action")
    # block carried by a pin/buffer/parameter node
    represents: str | None = _f("represents", "opt", default=None)


@dataclass(frozen=True)
class FlowRec:
    id: str = _f("id")
    source: str = _f("source", default="")
    target: str = _f("target", default="")
    guard: str | None = _f("guard", "opt", default=None)


@dataclass(frozen=True)
class CallRec:
    id: str = _f("id")
    name: str | None = _f("name", "opt", default=None)
    owner: str = _f("owner", default="")
    behavior: str = _f("behavior", default="")


@dataclass(frozen=True)
class StmRec:
    id: str = _f("id")
    name: str | None = _f("name", "opt", default=None)


@dataclass(frozen=True)
class StateRec:
    id: str = _f("id")
    name: str | None = _f("name", "opt", default=None)
    owner: str = _f("owner", default="")
    submachine: str | None = _f("submachine", "opt", default=None)
    entry_activity: str | None = _f("entryActivity", "opt", default=None)
    do_activity: str | None = _f("doActivity", "opt", default=None)
    exit_activity: str | None = _f("exitActivity", "opt", default=None)


@dataclass(frozen=True)
class PseudoRec:
    id: str = _f("id")
    name: str | None = _f("name", "opt", default=None)
    owner: str = _f("owner", default="")
    kind: str = _f("kind", default="initial")


@dataclass(frozen=True)
class TransRec:
    id: str = _f("id")
    source: str = _f("source", default="")
    target: str = _f("target", default="")
    triggers: tuple[str, ...] = _f("triggers", "strs", default=())
    guard: str | None = _f("guard", "opt", default=None)
    effect: str | None = _f("effect", "opt", default=None)


# (attribute, json key, record class) in canonical document order
SECTIONS: tuple[tuple[str, str, type], ...] = (
    ("blocks", "blocks", BlockRec),
    ("ports", "ports", PortRec),
    ("generalizations", "generalizations", GenRec),
    ("associations", "associations", AssocRec),
    ("connectors", "connectors", ConnRec),
    ("activities", "activities", ActivityRec),
    ("act_nodes", "actNodes", ActNodeRec),
    ("control_flows", "controlFlows", FlowRec),
    ("object_flows", "objectFlows", FlowRec),
    ("call_actions", "callActions", CallRec),
    ("state_machines", "stateMachines", StmRec),
    ("states", "states", StateRec),
    ("pseudostates", "pseudostates", PseudoRec),
    ("transitions", "transitions", TransRec),
)


@dataclass(frozen=True)
class ModelIR:
    blocks: tuple[BlockRec, ...] = ()
    ports: tuple[PortRec, ...] = ()
    generalizations: tuple[GenRec, ...] = ()
    associations: tuple[AssocRec, ...] = ()
    connectors: tuple[ConnRec, ...] = ()
    activities: tuple[ActivityRec, ...] = ()
    act_nodes: tuple[ActNodeRec, ...] = ()
    control_flows: tuple[FlowRec, ...] = ()
    object_flows: tuple[FlowRec, ...] = ()
    call_actions: tuple[CallRec, ...] = ()
    state_machines: tuple[StmRec, ...] = ()
    states: tuple[StateRec, ...] = ()
    pseudostates: tuple[PseudoRec, ...] = ()
    transitions: tuple[TransRec, ...] = ()

    def __post_init__(self) -> None:
        for attr, _, _ in SECTIONS:
            value = getattr(self, attr)
            if not isinstance(value, tuple):
                object.__setattr__(self, attr, tuple(value))

    def records(self) -> Iterator[tuple[str, Any]]:
        """Yield ``(section attribute, record)`` for every record in document order."""
        for attr, _, _ in SECTIONS:
            for rec in getattr(self, attr):
                yield attr, rec

    def index(self) -> dict[str, Any]:
        """Map id -> record.  Later duplicates shadow earlier ones."""
        return {rec.id: rec for _, rec in self.records()}

    def counts(self) -> dict[str, int]:
        return {attr: len(getattr(self, attr)) for attr, _, _ in SECTIONS}


@dataclass(frozen=True)
class IrIssue:
    record_id: str
    field: str
    message: str
    kind: str = "invariant"  # reference | duplicate | invariant
    ref: str | None = None  # the offending id for reference/duplicate issues

    def __str__(self) -> str:
        return f"{self.record_id}.{self.field}: {self.message}"


# ---------------------------------------------------------------------------
# JSON decoding / encoding
# ---------------------------------------------------------------------------


def _decode_value(kind: str, value: Any, where: str) -> Any:
    if kind == "str":
        if not isinstance(value, str):
            raise IrError(f"{where}: expected string, got {type(value).__name__}")
        return value
    if kind == "opt":
        if value is not None and not isinstance(value, str):
            raise IrError(f"{where}: expected string or null")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise IrError(f"{where}: expected boolean")
        return value
    if kind == "strs":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise IrError(f"{where}: expected list of strings")
        return tuple(value)
    if kind == "end":
        if not isinstance(value, dict) or not isinstance(value.get("port"), str):
            raise IrError(f"{where}: expected {{port, instance}} object")
        inst = value.get("instance")
        if inst is not None and not isinstance(inst, str):
            raise IrError(f"{where}.instance: expected string or null")
        return ConnEnd(value["port"], inst)
    if kind == "items":
        if not isinstance(value, list):
            raise IrError(f"{where}: expected list of items")
        out = []
        for i, item in enumerate(value):
            if not isinstance(item, dict) or not isinstance(item.get("block"), str):
                raise IrError(f"{where}[{i}]: expected {{block, direction}} object")
            direction = item.get("direction")
            if direction is None:
                log.warning("%s[%d]: item direction missing, defaulting to AtoB", where, i)
                direction = "AtoB"
            out.append(ConveyedItem(item["block"], direction))
        return tuple(out)
    raise AssertionError(kind)


def _record_from_json(cls: type, obj: Any, where: str) -> Any:
    if not isinstance(obj, dict):
        raise IrError(f"{where}: expected object")
    kwargs = {}
    known = set()
    for f in fields(cls):
        key, kind = f.metadata["key"], f.metadata["kind"]
        known.add(key)
        if key not in obj:
            if kind in ("str", "end") or key == "id":
                raise IrError(f"{where}: missing field {key!r}")
            continue
        kwargs[f.name] = _decode_value(kind, obj[key], f"{where}.{key}")
    extra = set(obj) - known
    if extra:
        raise IrError(f"{where}: unknown field(s) {sorted(extra)}")
    return cls(**kwargs)


def _encode_value(kind: str, value: Any) -> Any:
    if kind == "strs":
        return list(value)
    if kind == "end":
        return {"port": value.port, "instance": value.instance}
    if kind == "items":
        return [{"block": it.block, "direction": it.direction} for it in value]
    return value


def _record_to_json(rec: Any) -> dict[str, Any]:
    return {
        f.metadata["key"]: _encode_value(f.metadata["kind"], getattr(rec, f.name))
        for f in fields(rec)
    }


def ir_from_dict(doc: Any) -> ModelIR:
    """Build a ModelIR from decoded JSON without checking invariants."""
    if not isinstance(doc, dict):
        raise IrError("top level: expected object")
    keys = {key for _, key, _ in SECTIONS}
    extra = set(doc) - keys
    if extra:
        raise IrError(f"top level: unknown section(s) {sorted(extra)}")
    kwargs = {}
    for attr, key, cls in SECTIONS:
        arr = doc.get(key, [])
        if not isinstance(arr, list):
            raise IrError(f"{key}: expected array")
        kwargs[attr] = tuple(
            _record_from_json(cls, obj, f"{key}[{i}]") for i, obj in enumerate(arr)
        )
    return ModelIR(**kwargs)


def ir_to_dict(ir: ModelIR) -> dict[str, Any]:
    return {key: [_record_to_json(r) for r in getattr(ir, attr)] for attr, key, _ in SECTIONS}


def parse_model_json(data: bytes | str) -> ModelIR:
    """Decode and validate an ``.ir.json`` document.

    Raises ParseError (malformed JSON, with byte offset), IrDuplicateError,
    IrReferenceError or IrError for the first invariant violation found.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8: {exc.reason}", offset=exc.start) from exc
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(f"malformed JSON: {exc.msg}", offset=offset, line=exc.lineno) from exc
    ir = ir_from_dict(doc)
    issues = validate_ir(ir)
    for kind, exc_cls in (("duplicate", IrDuplicateError), ("reference", IrReferenceError)):
        for issue in issues:
            if issue.kind == kind:
                raise exc_cls(issue.ref or issue.record_id, str(issue))
    if issues:
        raise IrError(str(issues[0]))
    return ir


def serialize_model_json(ir: ModelIR) -> bytes:
    """Canonical encoding: sections and record keys in documented order,
    two-space indentation, UTF-8, trailing newline."""
    return (json.dumps(ir_to_dict(ir), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_ir(ir: ModelIR) -> list[IrIssue]:
    issues: list[IrIssue] = []
    add = issues.append

    seen: Counter[str] = Counter()
    for _, rec in ir.records():
        if not isinstance(rec.id, str) or not rec.id:
            add(IrIssue(repr(rec.id), "id", "id must be a non-empty string"))
        seen[rec.id] += 1
    for rid, n in seen.items():
        if n > 1 and rid:
            add(IrIssue(rid, "id", f"duplicate id '{rid}' ({n} records)", "duplicate", rid))

    blocks = {b.id: b for b in ir.blocks}
    ports = {p.id: p for p in ir.ports}
    activities = {a.id for a in ir.activities}
    act_nodes = {n.id for n in ir.act_nodes}
    calls = {c.id for c in ir.call_actions}
    machines = {m.id for m in ir.state_machines}
    states = {s.id for s in ir.states}
    pseudos = {p.id for p in ir.pseudostates}

    def ref(rec_id: str, fname: str, target: str | None, pool, what: str, optional=False):
        if target is None:
            if not optional:
                add(IrIssue(rec_id, fname, "missing reference", "reference"))
            return False
        if target not in pool:
            add(IrIssue(rec_id, fname, f"unresolved reference '{target}' (expected {what})",
                        "reference", target))
            return False
        return True

    conveyed = {it.block for c in ir.connectors for it in c.items}
    for b in ir.blocks:
        if b.is_instance:
            if ref(b.id, "instanceOf", b.instance_of, blocks, "block"):
                if blocks[b.instance_of].is_instance:
                    add(IrIssue(b.id, "instanceOf", f"'{b.instance_of}' is an instance, not a definition"))
        elif b.instance_of is not None:
            add(IrIssue(b.id, "instanceOf", "set on a non-instance block"))
        if b.is_flow_item_candidate != (b.id in conveyed):
            add(IrIssue(b.id, "isFlowItemCandidate",
                        "flag disagrees with connector conveyed-item lists"))

    for p in ir.ports:
        if ref(p.id, "owner", p.owner, blocks, "block") and blocks[p.owner].is_instance:
            add(IrIssue(p.id, "owner", f"owner '{p.owner}' is an instance"))
        ref(p.id, "type", p.type, blocks, "block", optional=True)

    structural = blocks.keys() | ports.keys()
    for g in ir.generalizations:
        ok = ref(g.id, "specific", g.specific, structural, "block or port")
        ok &= ref(g.id, "general", g.general, structural, "block or port")
        if g.specific == g.general:
            add(IrIssue(g.id, "general", "specific and general are the same element"))
        elif ok and (g.specific in blocks) != (g.general in blocks):
            add(IrIssue(g.id, "general", "generalization mixes blocks and ports"))

    for a in ir.associations:
        ref(a.id, "whole", a.whole, structural, "block or port")
        ref(a.id, "part", a.part, structural, "block or port")
        if a.whole == a.part:
            add(IrIssue(a.id, "part", "whole and part are the same element"))
        if a.kind not in ASSOC_KINDS:
            add(IrIssue(a.id, "kind", f"kind must be one of {ASSOC_KINDS}"))

    for c in ir.connectors:
        for fname, end in (("endA", c.end_a), ("endB", c.end_b)):
            ref(c.id, f"{fname}.port", end.port, ports, "port")
            if ref(c.id, f"{fname}.instance", end.instance, blocks, "block", optional=True):
                if not blocks[end.instance].is_instance:
                    add(IrIssue(c.id, f"{fname}.instance", f"'{end.instance}' is not an instance"))
        if c.end_a == c.end_b:
            add(IrIssue(c.id, "endB", "both connector ends are identical"))
        for i, it in enumerate(c.items):
            ref(c.id, f"items[{i}].block", it.block, blocks, "block")
            if it.direction not in DIRECTIONS:
                add(IrIssue(c.id, f"items[{i}].direction", f"direction must be one of {DIRECTIONS}"))

    for n in ir.act_nodes:
        ref(n.id, "owner", n.owner, activities, "activity")
        if n.nodetype not in ACT_NODE_TYPES:
            add(IrIssue(n.id, "nodetype", f"nodetype must be one of {ACT_NODE_TYPES}"))
        ref(n.id, "represents", n.represents, blocks, "block", optional=True)

    flow_ends = act_nodes | calls | activities
    for fl in (*ir.control_flows, *ir.object_flows):
        ref(fl.id, "source", fl.source, flow_ends, "activity node")
        ref(fl.id, "target", fl.target, flow_ends, "activity node")

    for c in ir.call_actions:
        ref(c.id, "owner", c.owner, activities, "activity")
        ref(c.id, "behavior", c.behavior, activities, "activity")

    vertex_owners = machines | states
    for s in ir.states:
        ref(s.id, "owner", s.owner, vertex_owners, "state machine or state")
        if s.owner == s.id:
            add(IrIssue(s.id, "owner", "state owns itself"))
        ref(s.id, "submachine", s.submachine, machines, "state machine", optional=True)
        for fname, act in (("entryActivity", s.entry_activity), ("doActivity", s.do_activity),
                           ("exitActivity", s.exit_activity)):
            ref(s.id, fname, act, activities, "activity", optional=True)

    for p in ir.pseudostates:
        ref(p.id, "owner", p.owner, vertex_owners, "state machine or state")
        if p.kind not in PSEUDO_KINDS:
            add(IrIssue(p.id, "kind", f"kind must be one of {PSEUDO_KINDS}"))

    vertices = states | pseudos
    for t in ir.transitions:
        ref(t.id, "source", t.source, vertices, "state or pseudostate")
        ref(t.id, "target", t.target, vertices, "state or pseudostate")
        for i, trig in enumerate(t.triggers):
            ref(t.id, f"triggers[{i}]", trig, blocks, "block")
        ref(t.id, "effect", t.effect, activities, "activity", optional=True)

    return issues
