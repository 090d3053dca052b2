"""Reader for a subset of UML/SysML XMI (MagicDraw-style exports) producing ModelIR.

The recognized subset and its mapping are documented in ``docs/xmi_subset.md``.
Namespaces are matched by URI, so the prefixes a tool chooses do not matter.
Everything carrying an ``xmi:type`` that the subset does not cover is counted
as ignored; its children are still visited.
"""

from __future__ import annotations

import io
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable

from .errors import IrError, ParseError, XmiElementError
from .model_ir import (
    ActivityRec, ActNodeRec, AssocRec, BlockRec, CallRec, ConnEnd, ConnRec, ConveyedItem,
    FlowRec, GenRec, ModelIR, PortRec, PseudoRec, StateRec, StmRec, TransRec, validate_ir,
)

log = logging.getLogger(__name__)

DEFAULT_BLOCK_STEREOTYPES = ("Block", "InterfaceBlock")
KNOWN_XMI_URIS = (
    "http://www.omg.org/spec/XMI/20131001",
    "http://www.omg.org/spec/XMI/20110701",
    "http://www.omg.org/spec/XMI/20100901",
    "http://schema.omg.org/spec/XMI/2.1",
)

ACT_NODE_KINDS = {
    "InitialNode": "initial",
    "ActivityFinalNode": "final",
    "FlowFinalNode": "final",
    "ForkNode": "fork",
    "JoinNode": "join",
    "MergeNode": "merge",
    "DecisionNode": "decision",
    "CentralBufferNode": "buffer",
    "DataStoreNode": "buffer",
    "ActivityParameterNode": "parameter",
}
ACTION_KINDS = {
    "OpaqueAction", "Action", "SendSignalAction", "AcceptEventAction", "CallOperationAction",
    "ValueSpecificationAction", "ReadStructuralFeatureAction", "AddStructuralFeatureValueAction",
}
PIN_KINDS = {"InputPin", "OutputPin", "ValuePin", "ActionInputPin"}
PSEUDO_KIND_MAP = {
    "initial": "initial", "entryPoint": "entry", "exitPoint": "exit", "choice": "choice",
    "junction": "junction", "terminate": "final",
}
BEHAVIOR_KINDS = {"Activity", "OpaqueBehavior", "FunctionBehavior"}


@dataclass
class IngestStats:
    recognized: int = 0
    ignored: int = 0
    unresolved: int = 0
    warnings: list[str] = field(default_factory=list)
    ignored_kinds: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"recognized": self.recognized, "ignored": self.ignored,
                "unresolved": self.unresolved, "warnings": list(self.warnings),
                "ignoredKinds": dict(sorted(self.ignored_kinds.items()))}


@dataclass(frozen=True)
class XmiSubsetProfile:
    block_stereotypes: tuple[str, ...] = DEFAULT_BLOCK_STEREOTYPES

    @property
    def recognized_kinds(self) -> frozenset[str]:
        return frozenset({
            "Class", "Signal", "Port", "Property", "Association", "InstanceSpecification",
            "Generalization", "Connector", "ConnectorEnd", "InformationFlow", "Activity",
            "OpaqueBehavior", "FunctionBehavior", "CallBehaviorAction", "ControlFlow",
            "ObjectFlow", "StateMachine", "Region", "State", "FinalState", "Pseudostate",
            "Transition", "Trigger", "SignalEvent", "Constraint", "OpaqueExpression",
            "LiteralString", "LiteralBoolean",
        } | set(ACT_NODE_KINDS) | ACTION_KINDS | PIN_KINDS)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _ns(tag: str) -> str:
    return tag[1:].split("}", 1)[0] if tag.startswith("{") else ""


def _is_uml_uri(uri: str) -> bool:
    return "/UML/" in uri or uri.rstrip("/").endswith("/UML") or "spec/UML" in uri


class _Reader:
    def __init__(self, data: bytes, profile: XmiSubsetProfile):
        self.profile = profile
        self.stats = IngestStats()
        self.prefixes: dict[str, str] = {}
        self.root = self._parse(data)
        self.xmi_uri = self._find_xmi_uri()
        self.parent: dict[ET.Element, ET.Element] = {}
        for p in self.root.iter():
            for c in p:
                self.parent[c] = p
        self.by_id: dict[str, ET.Element] = {}
        for e in self.root.iter():
            i = self.xid(e)
            if i is not None:
                self.by_id[i] = e
        self.stereotypes: dict[str, set[str]] = {}
        self.stereo_elems: set[ET.Element] = set()
        self._collect_stereotypes()
        self.consumed: set[ET.Element] = set()

        self.blocks: list[BlockRec] = []
        self.block_ids: set[str] = set()
        self.ports: list[PortRec] = []
        self.gens: list[GenRec] = []
        self.assocs: list[AssocRec] = []
        self.conns: list[ConnRec] = []
        self.flows: list[tuple[ET.Element, list[str], list[str], list[str], list[str]]] = []
        self.activities: list[ActivityRec] = []
        self.act_nodes: list[ActNodeRec] = []
        self.cflows: list[FlowRec] = []
        self.oflows: list[FlowRec] = []
        self.calls: list[CallRec] = []
        self.machines: list[StmRec] = []
        self.states: list[StateRec] = []
        self.pseudos: list[PseudoRec] = []
        self.transitions: list[TransRec] = []
        self.used_ids: set[str] = set()

    # -- parsing helpers -------------------------------------------------

    def _parse(self, data: bytes) -> ET.Element:
        try:
            for event, item in ET.iterparse(io.BytesIO(data), events=("start-ns",)):
                prefix, uri = item
                self.prefixes.setdefault(prefix, uri)
            return ET.fromstring(data)
        except ET.ParseError as exc:
            line, col = exc.position
            raise ParseError(f"malformed XML at line {line}, column {col}: {exc}", line=line) from exc

    def _find_xmi_uri(self) -> str:
        if _local(self.root.tag) == "XMI":
            uri = _ns(self.root.tag)
        else:
            uris = [u for u in self.prefixes.values() if "XMI" in u and "UML" not in u]
            uri = uris[0] if uris else ""
        if uri and uri not in KNOWN_XMI_URIS:
            self.warn(f"unrecognized XMI namespace {uri!r}; reading the recognizable subset")
        return uri

    def warn(self, msg: str) -> None:
        self.stats.warnings.append(msg)
        log.warning(msg)

    def attr(self, e: ET.Element, local: str, ns: str | None = None) -> str | None:
        if ns:
            return e.get(f"{{{ns}}}{local}")
        return e.get(local)

    def xid(self, e: ET.Element) -> str | None:
        for k, v in e.attrib.items():
            if _local(k) == "id" and k.startswith("{") and "XMI" in _ns(k):
                return v
        return None

    def xtype(self, e: ET.Element) -> str | None:
        """Local UML metaclass name of an element, resolved through its prefix URI."""
        raw = None
        for k, v in e.attrib.items():
            if _local(k) == "type" and k.startswith("{") and "XMI" in _ns(k):
                raw = v
                break
        if raw is None:
            return None
        prefix, _, local = raw.rpartition(":")
        uri = self.prefixes.get(prefix, "")
        if prefix and not _is_uml_uri(uri):
            return f"{prefix}:{local}"
        return local

    def refs(self, e: ET.Element, name: str) -> list[str]:
        """Reference values given as a space-separated attribute or as child
        elements carrying xmi:idref (or an href fragment)."""
        out = (e.get(name) or "").split()
        for c in e:
            if _local(c.tag) != name:
                continue
            for k, v in c.attrib.items():
                if _local(k) == "idref":
                    out.append(v)
                elif _local(k) == "href" and "#" in v:
                    out.append(v.split("#", 1)[1])
        return out

    def ref(self, e: ET.Element, name: str) -> str | None:
        r = self.refs(e, name)
        return r[0] if r else None

    def _collect_stereotypes(self) -> None:
        for e in self.root.iter():
            if _is_uml_uri(_ns(e.tag)) or "XMI" in _ns(e.tag):
                continue
            bases = [v for k, v in e.attrib.items() if _local(k).startswith("base_")]
            if not bases:
                continue
            self.stereo_elems.add(e)
            for b in bases:
                self.stereotypes.setdefault(b, set()).add(_local(e.tag))

    def is_block_class(self, e: ET.Element) -> bool:
        i = self.xid(e)
        return bool(i and self.stereotypes.get(i, set()) & set(self.profile.block_stereotypes))

    def name(self, e: ET.Element) -> str | None:
        return e.get("name")

    def fresh_id(self, base: str) -> str:
        cand, n = base, 1
        while cand in self.by_id or cand in self.used_ids:
            n += 1
            cand = f"{base}{n}"
        self.used_ids.add(cand)
        return cand

    def owner_of(self, e: ET.Element, kinds: Iterable[str]) -> ET.Element | None:
        kinds = set(kinds)
        p = self.parent.get(e)
        while p is not None:
            if self.xtype(p) in kinds:
                return p
            p = self.parent.get(p)
        return None

    def text_of(self, vs: ET.Element | None) -> str | None:
        """String form of a guard or constraint value."""
        if vs is None:
            return None
        t = self.xtype(vs)
        self.consumed.add(vs)
        if t == "Constraint":
            for c in vs:
                if _local(c.tag) == "specification":
                    return self.text_of(c)
            return None
        if t == "OpaqueExpression":
            bodies = [c.text or "" for c in vs if _local(c.tag) == "body"]
            if not bodies and vs.get("body") is not None:
                bodies = [vs.get("body") or ""]
            return " ".join(bodies) if bodies else None
        if t == "LiteralBoolean":
            return None if (vs.get("value", "false") == "true") else "false"
        if t == "LiteralString":
            return vs.get("value")
        return vs.get("value") or vs.get("body")

    def child(self, e: ET.Element, local: str) -> ET.Element | None:
        for c in e:
            if _local(c.tag) == local:
                return c
        return None

    # -- model walk ------------------------------------------------------

    def model_elements(self) -> list[ET.Element]:
        out = []
        for e in self.root.iter():
            if e is self.root or e in self.stereo_elems:
                continue
            if self.xtype(e) is None:
                continue
            if self.xtype(e) in ("Model", "Package", "Profile") and e is self.root:
                continue
            if any(p in self.stereo_elems for p in self._ancestors(e)):
                continue
            if any(_local(p.tag) == "Extension" for p in self._ancestors(e)):
                continue
            out.append(e)
        return out

    def _ancestors(self, e: ET.Element) -> Iterable[ET.Element]:
        p = self.parent.get(e)
        while p is not None:
            yield p
            p = self.parent.get(p)

    def run(self) -> tuple[ModelIR, IngestStats]:
        elems = [e for e in self.model_elements() if self.xtype(e) not in ("Model", "Package")]
        # containers are neither counted nor recorded
        for e in elems:
            t = self.xtype(e)
            if (t == "Class" and self.is_block_class(e)) or t == "Signal":
                self.block_ids.add(self.xid(e) or "")
        for e in elems:
            if self.xtype(e) in BEHAVIOR_KINDS:
                self.behavior(e)
        for e in elems:
            self.visit(e)
        ir = self.finish()
        typed = len(elems)
        self.stats.recognized = sum(1 for e in elems if e in self.consumed)
        self.stats.ignored = typed - self.stats.recognized
        for e in elems:
            if e not in self.consumed:
                k = self.xtype(e) or "?"
                if k == "Class":
                    k = "Class(" + ",".join(sorted(self.stereotypes.get(self.xid(e) or "", ()))) + ")"
                self.stats.ignored_kinds[k] = self.stats.ignored_kinds.get(k, 0) + 1
        return ir, self.stats

    def need(self, e: ET.Element, value: str | None, what: str) -> str:
        if not value:
            raise XmiElementError(self.xid(e), f"{self.xtype(e)} without {what}")
        return value

    def visit(self, e: ET.Element) -> None:
        t = self.xtype(e)
        i = self.xid(e)
        if t in ("Class", "Signal"):
            if i in self.block_ids:
                self.consumed.add(e)
                self.blocks.append(BlockRec(self.need(e, i, "xmi:id"), self.name(e)))
        elif t == "Port":
            self.port(e)
        elif t == "Property":
            self.part(e)
        elif t == "InstanceSpecification":
            self.instance(e)
        elif t == "Generalization":
            self.generalization(e)
        elif t == "Connector":
            self.connector(e)
        elif t == "InformationFlow":
            self.consumed.add(e)
            self.flows.append((e, self.refs(e, "conveyed"), self.refs(e, "realizingConnector"),
                               self.refs(e, "informationSource"), self.refs(e, "informationTarget")))
        elif t == "StateMachine":
            self.consumed.add(e)
            self.machines.append(StmRec(self.need(e, i, "xmi:id"), self.name(e)))
        elif t == "Region":
            self.consumed.add(e)
        elif t in ("State", "FinalState", "Pseudostate"):
            self.vertex(e)
        elif t == "Transition":
            self.transition(e)
        elif t == "SignalEvent":
            self.consumed.add(e)

    # -- structure -------------------------------------------------------

    def port(self, e: ET.Element) -> None:
        i = self.need(e, self.xid(e), "xmi:id")
        self.consumed.add(e)
        owner = self.parent.get(e)
        oid = self.xid(owner) if owner is not None else None
        if oid not in self.block_ids:
            self.stats.unresolved += 1
            self.warn(f"port {i}: owner is not a recognized block; skipped")
            return
        ptype = self.ref(e, "type")
        if ptype is not None and ptype not in self.block_ids:
            self.stats.unresolved += 1
            self.warn(f"port {i}: type {ptype!r} is not a recognized block; left untyped")
            ptype = None
        self.ports.append(PortRec(i, self.name(e), oid or "", ptype))

    def part(self, e: ET.Element) -> None:
        owner = self.parent.get(e)
        oid = self.xid(owner) if owner is not None else None
        ptype = self.ref(e, "type")
        if oid not in self.block_ids or ptype not in self.block_ids:
            return  # value property, association end or similar: ignored
        i = self.need(e, self.xid(e), "xmi:id")
        agg = e.get("aggregation", "none")
        if agg not in ("composite", "shared"):
            self.warn(f"property {i}: aggregation {agg!r} is not a part association; skipped")
            return
        self.consumed.add(e)
        self.blocks.append(BlockRec(i, self.name(e), True, ptype))
        assoc = e.get("association")
        if assoc and assoc in self.by_id:
            self.consumed.add(self.by_id[assoc])
            for end in self.by_id[assoc]:
                if self.xtype(end) == "Property":
                    self.consumed.add(end)
        aid = self.fresh_id(assoc if assoc and assoc not in self.used_ids else f"{i}#part")
        self.assocs.append(AssocRec(aid, oid or "", i, agg))

    def instance(self, e: ET.Element) -> None:
        i = self.need(e, self.xid(e), "xmi:id")
        cls = self.ref(e, "classifier")
        if cls not in self.block_ids:
            self.stats.unresolved += 1
            self.warn(f"instance {i}: classifier {cls!r} is not a recognized block; skipped")
            self.consumed.add(e)
            return
        self.consumed.add(e)
        self.blocks.append(BlockRec(i, self.name(e), True, cls))

    def generalization(self, e: ET.Element) -> None:
        i = self.need(e, self.xid(e), "xmi:id")
        general = self.ref(e, "general")
        if not general:
            raise XmiElementError(i, "Generalization without 'general'")
        self.consumed.add(e)
        owner = self.parent.get(e)
        specific = self.ref(e, "specific") or (self.xid(owner) if owner is not None else None)
        if specific not in self.block_ids or general not in self.block_ids:
            self.stats.unresolved += 1
            self.warn(f"generalization {i}: ends are not both recognized blocks; skipped")
            return
        self.gens.append(GenRec(i, specific or "", general))

    def connector(self, e: ET.Element) -> None:
        i = self.need(e, self.xid(e), "xmi:id")
        self.consumed.add(e)
        ends = [c for c in e if self.xtype(c) == "ConnectorEnd" or _local(c.tag) == "end"]
        for c in ends:
            self.consumed.add(c)
        if len(ends) != 2:
            self.stats.unresolved += 1
            self.warn(f"connector {i}: expected 2 ends, found {len(ends)}; skipped")
            return
        rec_ends = []
        for c in ends:
            role = self.ref(c, "role")
            pwp = self.ref(c, "partWithPort")
            rec_ends.append(ConnEnd(role or "", pwp))
        self.conns.append(ConnRec(i, self.name(e), rec_ends[0], rec_ends[1], ()))

    # -- behavior --------------------------------------------------------

    def behavior(self, e: ET.Element) -> None:
        i = self.need(e, self.xid(e), "xmi:id")
        self.consumed.add(e)
        self.activities.append(ActivityRec(i, self.name(e)))
        for c in e:
            t = self.xtype(c)
            if t is None:
                continue
            if t in ACT_NODE_KINDS:
                self.consumed.add(c)
                rep = self.ref(c, "type") if ACT_NODE_KINDS[t] in ("buffer", "parameter") else None
                self.act_nodes.append(ActNodeRec(self.need(c, self.xid(c), "xmi:id"), self.name(c),
                                                 i, ACT_NODE_KINDS[t], rep))
            elif t in ACTION_KINDS:
                self.consumed.add(c)
                cid = self.need(c, self.xid(c), "xmi:id")
                self.act_nodes.append(ActNodeRec(cid, self.name(c), i, "action"))
                self.pins(c, cid, i)
            elif t == "CallBehaviorAction":
                self.consumed.add(c)
                cid = self.need(c, self.xid(c), "xmi:id")
                beh = self.need(c, self.ref(c, "behavior"), "'behavior'")
                self.calls.append(CallRec(cid, self.name(c), i, beh))
                self.pins(c, cid, i)
            elif t in ("ControlFlow", "ObjectFlow"):
                self.consumed.add(c)
                fid = self.need(c, self.xid(c), "xmi:id")
                guard = self.text_of(self.child(c, "guard"))
                rec = FlowRec(fid, self.need(c, self.ref(c, "source"), "'source'"),
                              self.need(c, self.ref(c, "target"), "'target'"), guard)
                (self.cflows if t == "ControlFlow" else self.oflows).append(rec)

    def pins(self, action: ET.Element, action_id: str, activity: str) -> None:
        # pins become activity nodes linked to their action by synthesized object flows
        for c in action:
            t = self.xtype(c)
            if t not in PIN_KINDS:
                continue
            self.consumed.add(c)
            pid = self.need(c, self.xid(c), "xmi:id")
            self.act_nodes.append(ActNodeRec(pid, self.name(c), activity, "pin",
                                             self.ref(c, "type")))
            fid = self.fresh_id(f"{pid}#pinflow")
            if t == "OutputPin":
                self.oflows.append(FlowRec(fid, action_id, pid))
            else:
                self.oflows.append(FlowRec(fid, pid, action_id))

    def vertex(self, e: ET.Element) -> None:
        t = self.xtype(e)
        i = self.need(e, self.xid(e), "xmi:id")
        self.consumed.add(e)
        holder = self.parent.get(e)
        if holder is not None and self.xtype(holder) == "Region":
            holder = self.parent.get(holder)
        owner = self.xid(holder) if holder is not None else None
        if owner is None:
            self.stats.unresolved += 1
            self.warn(f"state {i}: no owning machine or state; skipped")
            return
        if t == "Pseudostate" or t == "FinalState":
            raw = "final" if t == "FinalState" else e.get("kind", "initial")
            kind = PSEUDO_KIND_MAP.get(raw)
            if kind is None:
                self.warn(f"pseudostate {i}: kind {raw!r} outside the subset, read as junction")
                kind = "junction"
            self.pseudos.append(PseudoRec(i, self.name(e), owner, kind))
            return
        slots = {}
        for slot in ("entry", "doActivity", "exit"):
            c = self.child(e, slot)
            slots[slot] = self.xid(c) if c is not None else e.get(slot)
        self.states.append(StateRec(i, self.name(e), owner, self.ref(e, "submachine"),
                                    slots["entry"], slots["doActivity"], slots["exit"]))

    def transition(self, e: ET.Element) -> None:
        i = self.need(e, self.xid(e), "xmi:id")
        self.consumed.add(e)
        triggers = []
        for c in e:
            if self.xtype(c) != "Trigger":
                continue
            self.consumed.add(c)
            triggers.append(self.trigger_block(c))
        guard = self.text_of(self.child(e, "guard"))
        eff = self.child(e, "effect")
        effect = self.xid(eff) if eff is not None else e.get("effect")
        self.transitions.append(TransRec(i, self.need(e, self.ref(e, "source"), "'source'"),
                                         self.need(e, self.ref(e, "target"), "'target'"),
                                         tuple(dict.fromkeys(triggers)), guard, effect))

    def trigger_block(self, trig: ET.Element) -> str:
        """Block id standing for a trigger: the event's signal, else the event,
        else the trigger itself (synthesized as a plain block)."""
        ev_id = self.ref(trig, "event")
        ev = self.by_id.get(ev_id) if ev_id else None
        if ev is not None:
            sig = self.ref(ev, "signal")
            if sig in self.block_ids:
                return sig or ""
            self.consumed.add(ev)
            name = self.name(ev) or self.name(trig)
            return self._synth_block(ev_id or "", name)
        tid = self.need(trig, self.xid(trig), "xmi:id")
        return self._synth_block(tid, self.name(trig))

    def _synth_block(self, bid: str, name: str | None) -> str:
        if bid not in self.block_ids:
            self.block_ids.add(bid)
            self.blocks.append(BlockRec(bid, name))
        return bid

    # -- assembly --------------------------------------------------------

    def finish(self) -> ModelIR:
        blocks = {b.id: b for b in self.blocks}
        ports = {p.id: p for p in self.ports}

        conns = []
        for c in self.conns:
            bad = [end for end in (c.end_a, c.end_b)
                   if end.port not in ports or (end.instance is not None
                                                and not (end.instance in blocks
                                                         and blocks[end.instance].is_instance))]
            if bad:
                self.stats.unresolved += 1
                self.warn(f"connector {c.id}: end does not reference a port of a part; skipped")
                continue
            conns.append(c)
        by_conn = {c.id: c for c in conns}
        items: dict[str, list[ConveyedItem]] = {c.id: [] for c in conns}
        for e, conveyed, realizing, sources, targets in self.flows:
            fid = self.xid(e)
            for cid in realizing:
                c = by_conn.get(cid)
                if c is None:
                    self.stats.unresolved += 1
                    self.warn(f"information flow {fid}: connector {cid!r} unknown; ignored")
                    continue
                direction = self._direction(c, sources, targets)
                if direction is None:
                    self.warn(f"information flow {fid}: direction not derivable; assuming AtoB")
                    direction = "AtoB"
                for item in conveyed:
                    if item not in blocks:
                        self.stats.unresolved += 1
                        self.warn(f"information flow {fid}: conveyed {item!r} is not a block")
                        continue
                    ci = ConveyedItem(item, direction)
                    if ci not in items[cid]:
                        items[cid].append(ci)
        conveyed_ids = {it.block for lst in items.values() for it in lst}
        conns = [ConnRec(c.id, c.name, c.end_a, c.end_b, tuple(items[c.id])) for c in conns]
        block_list = [BlockRec(b.id, b.name, b.is_instance, b.instance_of,
                               b.id in conveyed_ids) for b in self.blocks]

        act_ids = {a.id for a in self.activities}
        node_like = act_ids | {n.id for n in self.act_nodes} | {c.id for c in self.calls}
        act_nodes = [ActNodeRec(n.id, n.name, n.owner, n.nodetype,
                                n.represents if n.represents in blocks else None)
                     for n in self.act_nodes]

        def keep_flows(flows: list[FlowRec]) -> list[FlowRec]:
            out = []
            for f in flows:
                if f.source in node_like and f.target in node_like:
                    out.append(f)
                else:
                    self.stats.unresolved += 1
                    self.warn(f"flow {f.id}: endpoint outside the activity subset; skipped")
            return out

        calls = []
        for c in self.calls:
            if c.behavior in act_ids:
                calls.append(c)
            else:
                self.stats.unresolved += 1
                self.warn(f"call {c.id}: behavior {c.behavior!r} not recognized; skipped")
        call_ids = {c.id for c in calls}
        node_like = act_ids | {n.id for n in act_nodes} | call_ids

        stm_ids = {m.id for m in self.machines}
        state_ids = {s.id for s in self.states}
        states = []
        for s in self.states:
            if s.owner not in stm_ids | state_ids:
                self.stats.unresolved += 1
                self.warn(f"state {s.id}: owner {s.owner!r} is not a machine or state; skipped")
                continue
            acts = [a if a in act_ids else None
                    for a in (s.entry_activity, s.do_activity, s.exit_activity)]
            sub = s.submachine if s.submachine in stm_ids else None
            states.append(StateRec(s.id, s.name, s.owner, sub, *acts))
        owners = stm_ids | {s.id for s in states}
        pseudos = [p for p in self.pseudos if p.owner in owners]
        vertices = {s.id for s in states} | {p.id for p in pseudos}
        transitions = []
        for t in self.transitions:
            if t.source not in vertices or t.target not in vertices:
                self.stats.unresolved += 1
                self.warn(f"transition {t.id}: source/target outside the subset; skipped")
                continue
            effect = t.effect if t.effect in act_ids else None
            transitions.append(TransRec(t.id, t.source, t.target, t.triggers, t.guard, effect))

        ir = ModelIR(
            blocks=tuple(block_list), ports=tuple(self.ports), generalizations=tuple(self.gens),
            associations=tuple(self.assocs), connectors=tuple(conns),
            activities=tuple(self.activities), act_nodes=tuple(act_nodes),
            control_flows=tuple(keep_flows(self.cflows)),
            object_flows=tuple(keep_flows(self.oflows)), call_actions=tuple(calls),
            state_machines=tuple(self.machines), states=tuple(states), pseudostates=tuple(pseudos),
            transitions=tuple(transitions),
        )
        issues = validate_ir(ir)
        if issues:
            raise IrError(f"ingested model violates IR invariants: {issues[0]}")
        return ir

    def _direction(self, c: ConnRec, sources: list[str], targets: list[str]) -> str | None:
        a = {c.end_a.port, c.end_a.instance}
        b = {c.end_b.port, c.end_b.instance}
        if set(sources) & a or set(targets) & b:
            return "AtoB"
        if set(sources) & b or set(targets) & a:
            return "BtoA"
        return None


def parse_xmi(data: bytes | str, profile: XmiSubsetProfile | None = None) -> tuple[ModelIR, IngestStats]:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return _Reader(data, profile or XmiSubsetProfile()).run()
