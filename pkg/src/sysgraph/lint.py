"""Modelling-guideline checks over a transformed graph.

Rules:
  L1  instantiated blocks belong to a part structure reaching the root
  L2  the physical-flowitem and fuse taxonomy classes exist and are populated
  L3  conveyed flowitems are classified through IS_OF_TYPE
  L4  decomposition depth of each conveyed flowitem (info)
  L5  duplicate names among block definitions
  L6  IS_PART_OF cycles
  L7  number of nodes without a name (info)

Capabilities are derived purely from the findings, so a clean report
supports every analysis.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field

from .analysis.common import ANALYSES, NAME_ANCHORED, class_members, class_nodes, instances_of
from .graph_store import (
    BLOCK, FLOWITEM, FLOWS_IN, HYPERNODE, INSTANCE, IS_INSTANCE_OF, IS_OF_TYPE, IS_PART_OF,
    PropertyGraph,
)
from .taxonomy import Taxonomy

SEVERITIES = ("error", "warning", "info")
SUPPORTED, DEGRADED, UNSUPPORTED = "supported", "degraded", "unsupported"
_RANK = {SUPPORTED: 0, DEGRADED: 1, UNSUPPORTED: 2}


@dataclass
class Finding:
    rule_id: str
    severity: str
    node_ids: list[str]
    message: str
    # analysis name -> degraded | unsupported
    impact: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"ruleId": self.rule_id, "severity": self.severity,
                "nodeIds": list(self.node_ids), "message": self.message}

    def to_text(self) -> str:
        nodes = ",".join(self.node_ids) if self.node_ids else "-"
        return f"{self.rule_id} {self.severity} {nodes} {self.message}"


@dataclass
class LintReport:
    findings: list[Finding]
    capabilities: dict[str, str]

    def to_dict(self) -> dict:
        return {"findings": [f.to_dict() for f in self.findings],
                "capabilities": dict(self.capabilities)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def to_text(self) -> str:
        lines = [f.to_text() for f in self.findings]
        lines += [f"capability {k} {v}" for k, v in self.capabilities.items()]
        return "\n".join(lines) + "\n"

    def by_rule(self, rule_id: str) -> list[Finding]:
        return [f for f in self.findings if f.rule_id == rule_id]


def _ids(graph: PropertyGraph, keys) -> list[str]:
    return sorted(graph.node(k).id for k in keys)


def _is_def(graph: PropertyGraph, k: int) -> bool:
    labels = graph.node(k).labels
    return BLOCK in labels and INSTANCE not in labels


def _conveyed(graph: PropertyGraph) -> list[int]:
    return [k for k in graph.with_label(FLOWITEM) if graph.edges_of(k, FLOWS_IN, "out")]


def _containers(graph: PropertyGraph, start: int) -> set[int]:
    """Everything above ``start`` in the part structure.  A part that belongs
    to a definition also belongs to wherever that definition is instantiated."""
    seen: set[int] = set()
    todo = [start]
    while todo:
        k = todo.pop()
        for up in graph.neighbors(k, IS_PART_OF, "out"):
            if up not in seen:
                seen.add(up)
                todo.append(up)
                if _is_def(graph, up):
                    todo.extend(i for i in graph.neighbors(up, IS_INSTANCE_OF, "in")
                                if i not in seen and not seen.add(i))
    return seen


def _rule_l1(graph: PropertyGraph, root_name: str | None) -> list[Finding]:
    instances = [k for k in graph.with_label(INSTANCE)
                 if BLOCK in graph.node(k).labels and FLOWITEM not in graph.node(k).labels]
    impact = {"parts_of": DEGRADED, "type_queries": DEGRADED}
    out = []
    if root_name is not None:
        roots = graph.find_nodes(BLOCK, name=root_name)
        if not roots:
            return [Finding("L1", "warning", [], f"root block {root_name!r} not found", impact)]
        root_set = set(roots)
        # reaching an instance of a root definition counts as reaching the root
        root_set |= instances_of(graph, roots)
        for k in instances:
            if k in root_set:
                continue
            if not root_set & _containers(graph, k):
                out.append(Finding("L1", "warning", [graph.node(k).id],
                                   f"instance does not reach root {root_name!r} via IS_PART_OF",
                                   impact))
        return out
    for k in instances:
        up = graph.neighbors(k, IS_PART_OF, "out")
        down = [d for d in graph.neighbors(k, IS_PART_OF, "in")
                if INSTANCE in graph.node(d).labels and BLOCK in graph.node(d).labels]
        if not up and not down:
            out.append(Finding("L1", "warning", [graph.node(k).id],
                               "instance is not part of any IS_PART_OF structure", impact))
    return out


def _rule_l2(graph: PropertyGraph, tax: Taxonomy) -> list[Finding]:
    out = []
    phys = class_nodes(graph, tax.physical)
    fuse = class_nodes(graph, tax.fuse)
    for cname, found, dependants in ((tax.physical, phys, ("short_fallout", "power_source_of")),
                                     (tax.fuse, fuse, ("short_fallout",))):
        if not found:
            out.append(Finding("L2", "warning", [], f"taxonomy class {cname!r} is missing",
                               {a: UNSUPPORTED for a in dependants}))
        elif len(found) > 1:
            out.append(Finding("L2", "warning", _ids(graph, found),
                               f"taxonomy class {cname!r} is defined more than once",
                               {a: DEGRADED for a in dependants}))
    if phys and not class_members(graph, phys):
        out.append(Finding("L2", "warning", _ids(graph, phys),
                           f"taxonomy class {tax.physical!r} has no members",
                           {"short_fallout": DEGRADED, "power_source_of": DEGRADED}))
    if fuse:
        members = class_members(graph, fuse)
        if not instances_of(graph, members):
            out.append(Finding("L2", "warning", _ids(graph, fuse),
                               f"taxonomy class {tax.fuse!r} has no instantiated members",
                               {"short_fallout": DEGRADED}))
    return out


def _rule_l3(graph: PropertyGraph) -> list[Finding]:
    bad = [k for k in _conveyed(graph)
           if not graph.edges_of(k, IS_OF_TYPE, "out")
           and not any(graph.edges_of(d, IS_OF_TYPE, "out")
                       for d in graph.neighbors(k, IS_INSTANCE_OF, "out"))]
    return [Finding("L3", "warning", [graph.node(k).id],
                    "conveyed flowitem is not classified via IS_OF_TYPE",
                    {"short_fallout": DEGRADED, "power_source_of": DEGRADED})
            for k in bad]


def _depth(graph: PropertyGraph, k: int) -> int:
    dist = graph.bfs_distances(k, IS_PART_OF, "in")
    return max(dist.values(), default=0)


def _rule_l4(graph: PropertyGraph) -> list[Finding]:
    return [Finding("L4", "info", [graph.node(k).id],
                    f"flowitem decomposition depth {_depth(graph, k)}")
            for k in _conveyed(graph)]


def _rule_l5(graph: PropertyGraph) -> list[Finding]:
    names: dict[str, list[int]] = defaultdict(list)
    for k in graph.with_label(BLOCK):
        n = graph.node(k)
        if _is_def(graph, k) and n.name is not None:
            names[n.name].append(k)
    impact = {a: DEGRADED for a in NAME_ANCHORED}
    return [Finding("L5", "warning", _ids(graph, ks),
                    f"{len(ks)} block definitions share the name {name!r}", impact)
            for name, ks in sorted(names.items()) if len(ks) > 1]


def _rule_l6(graph: PropertyGraph) -> list[Finding]:
    impact = {a: DEGRADED for a in ("parts_of", "port_census", "type_queries", "datapath")}
    out = []
    for comp in graph.strongly_connected_components(IS_PART_OF):
        if len(comp) == 1:
            k = comp[0]
            if k not in graph.neighbors(k, IS_PART_OF, "out"):
                continue
        out.append(Finding("L6", "error", _ids(graph, comp),
                           "IS_PART_OF cycle through " + " -> ".join(_ids(graph, comp)), impact))
    return out


def _rule_l7(graph: PropertyGraph) -> list[Finding]:
    # transition hypernodes are unnamed by construction
    unnamed = [k for k, n in graph.nodes.items() if n.name is None and HYPERNODE not in n.labels]
    if not unnamed:
        return []
    return [Finding("L7", "info", _ids(graph, unnamed), f"{len(unnamed)} node(s) without a name")]


def lint_model(graph: PropertyGraph, root_name: str | None = None,
               taxonomy: Taxonomy | None = None) -> LintReport:
    tax = taxonomy or Taxonomy.from_env()
    findings = (_rule_l1(graph, root_name) + _rule_l2(graph, tax) + _rule_l3(graph)
                + _rule_l4(graph) + _rule_l5(graph) + _rule_l6(graph) + _rule_l7(graph))
    caps = {a: SUPPORTED for a in ANALYSES}
    for f in findings:
        for analysis, level in f.impact.items():
            if _RANK[level] > _RANK[caps[analysis]]:
                caps[analysis] = level
    return LintReport(findings, caps)
