"""Graph serializations: Cypher load script, Graphviz DOT and graph JSON.

Formats are documented in ``docs/export_formats.md``.  ``scan_cypher`` reads
back the per-element Cypher script (not the batched variant) so the export
can be checked by round trip.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Any, Iterable

from .errors import ParseError
from .graph_store import (
    ACT, ACTIVITY, ACTNODE, BLOCK, EXECUTION, FLOWITEM, HYPERNODE, INSTANCE, PORT, PSEUDOSTATE,
    STATE, TRIGGER, Edge, Node, PropertyGraph,
)

FORMATS = ("cypher", "dot", "graphjson")


@dataclass(frozen=True)
class ExportOptions:
    format: str = "cypher"
    label_filter: frozenset[str] | None = None
    include_props: bool = True
    batched: bool = False

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise ValueError(f"unknown export format {self.format!r}; expected one of {FORMATS}")
        if self.label_filter is not None:
            object.__setattr__(self, "label_filter", frozenset(self.label_filter))


def _select(graph: PropertyGraph, options: ExportOptions) -> tuple[list[Node], list[Edge]]:
    if options.label_filter is None:
        nodes = list(graph.nodes.values())
    else:
        nodes = [n for n in graph.nodes.values() if n.labels & options.label_filter]
    keep = {n.key for n in nodes}
    edges = [e for e in graph.edges.values() if e.source in keep and e.target in keep]
    return nodes, edges


# ---------------------------------------------------------------------------
# Cypher
# ---------------------------------------------------------------------------

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_ESCAPES = {"\\": "\\\\", "'": "\\'", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def cypher_string(s: str) -> str:
    return "'" + "".join(_ESCAPES.get(c, c) for c in s) + "'"


def cypher_key(k: str) -> str:
    return k if _IDENT.match(k) else "`" + k.replace("`", "``") + "`"


def cypher_value(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError(f"cannot express {v!r} in Cypher")
        return repr(v)
    if isinstance(v, str):
        return cypher_string(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(cypher_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return cypher_map(v)
    raise TypeError(f"unsupported property value {v!r}")


def cypher_map(props: dict[str, Any]) -> str:
    return "{" + ", ".join(f"{cypher_key(k)}: {cypher_value(v)}" for k, v in props.items()) + "}"


def _labels(labels: Iterable[str]) -> str:
    return "".join(":" + cypher_key(lab) for lab in sorted(labels))


def _node_props(n: Node, include_props: bool) -> dict[str, Any]:
    if include_props:
        return dict(n.props)
    return {"id": n.props["id"], "name": n.props.get("name")}


def export_cypher(graph: PropertyGraph, options: ExportOptions | None = None) -> str:
    options = options or ExportOptions("cypher")
    nodes, edges = _select(graph, options)
    if options.batched:
        return _export_cypher_batched(graph, nodes, edges, options)
    lines = [f"CREATE ({_labels(n.labels)} {cypher_map(_node_props(n, options.include_props))});"
             for n in nodes]
    for e in edges:
        src, dst = graph.node(e.source).id, graph.node(e.target).id
        props = f" {cypher_map(e.props)}" if e.props and options.include_props else ""
        lines.append(f"MATCH (a {{id: {cypher_string(src)}}}), (b {{id: {cypher_string(dst)}}}) "
                     f"CREATE (a)-[:{cypher_key(e.type)}{props}]->(b);")
    return "".join(line + "\n" for line in lines)


def _export_cypher_batched(graph: PropertyGraph, nodes: list[Node], edges: list[Edge],
                           options: ExportOptions, batch: int = 500) -> str:
    lines = []
    groups: dict[tuple[str, ...], list[Node]] = {}
    for n in nodes:
        groups.setdefault(tuple(sorted(n.labels)), []).append(n)
    for labels, members in groups.items():
        for i in range(0, len(members), batch):
            rows = ", ".join(cypher_map(_node_props(n, options.include_props))
                             for n in members[i:i + batch])
            lines.append(f"UNWIND [{rows}] AS row CREATE (n{_labels(labels)}) SET n = row;")
    by_type: dict[str, list[Edge]] = {}
    for e in edges:
        by_type.setdefault(e.type, []).append(e)
    for etype, members in by_type.items():
        for i in range(0, len(members), batch):
            rows = ", ".join(
                cypher_map({"src": graph.node(e.source).id, "dst": graph.node(e.target).id,
                            "props": e.props if options.include_props else {}})
                for e in members[i:i + batch])
            lines.append(f"UNWIND [{rows}] AS row MATCH (a {{id: row.src}}), (b {{id: row.dst}}) "
                         f"CREATE (a)-[r:{cypher_key(etype)}]->(b) SET r = row.props;")
    return "".join(line + "\n" for line in lines)


class _Scanner:
    """Recursive-descent reader for the per-element statements emitted above."""

    _TOKEN = re.compile(r"""
        \s*(?:
          (?P<str>'(?:[^'\\]|\\.)*')
        | (?P<bq>`(?:[^`]|``)*`)
        | (?P<num>-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)
        | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
        | (?P<arrow>->)
        | (?P<punct>[(){}\[\]:,;\-])
        )""", re.VERBOSE)
    _UNESCAPE = {"\\": "\\", "'": "'", "n": "\n", "r": "\r", "t": "\t"}

    def __init__(self, text: str):
        self.tokens: list[tuple[str, Any, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = self._TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos]!r}", offset=pos)
            kind = m.lastgroup
            raw = m.group(kind)
            if kind == "str":
                val: Any = re.sub(r"\\(.)", lambda x: self._UNESCAPE.get(x.group(1), x.group(1)),
                                  raw[1:-1])
            elif kind == "bq":
                kind, val = "ident", raw[1:-1].replace("``", "`")
            elif kind == "num":
                val = float(raw) if any(c in raw for c in ".eE") else int(raw)
            else:
                val = raw
            self.tokens.append((kind, val, m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self) -> tuple[str, Any, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self, kind: str | None = None, value: Any = None) -> Any:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of script")
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            raise ParseError(f"expected {value or kind}, found {tok[1]!r}", offset=tok[2])
        self.i += 1
        return tok[1]

    def at(self, value: Any) -> bool:
        tok = self.peek()
        return tok is not None and tok[1] == value and tok[0] in ("punct", "arrow", "ident")

    def value(self) -> Any:
        kind, val, off = self.peek() or ("", None, -1)
        if kind in ("str", "num"):
            self.i += 1
            return val
        if kind == "ident" and val in ("true", "false", "null"):
            self.i += 1
            return {"true": True, "false": False, "null": None}[val]
        if self.at("["):
            self.take()
            out = []
            while not self.at("]"):
                out.append(self.value())
                if not self.at("]"):
                    self.take("punct", ",")
            self.take()
            return out
        raise ParseError(f"expected a value, found {val!r}", offset=off)

    def mapping(self) -> dict[str, Any]:
        self.take("punct", "{")
        out: dict[str, Any] = {}
        while not self.at("}"):
            key = self.take("ident")
            self.take("punct", ":")
            out[key] = self.value()
            if not self.at("}"):
                self.take("punct", ",")
        self.take()
        return out

    def labels(self) -> list[str]:
        out = []
        while self.at(":"):
            self.take()
            out.append(self.take("ident"))
        return out


def scan_cypher(text: str, strict: bool = True) -> PropertyGraph:
    """Rebuild a graph from a per-element script produced by ``export_cypher``."""
    sc = _Scanner(text)
    g = PropertyGraph(strict=strict)
    while sc.peek() is not None:
        head = sc.take("ident")
        if head == "CREATE":
            sc.take("punct", "(")
            labels = sc.labels()
            props = sc.mapping()
            sc.take("punct", ")")
            g.add_node(labels, props)
        elif head == "MATCH":
            ends = []
            for var in ("a", "b"):
                sc.take("punct", "(")
                sc.take("ident", var)
                ends.append(sc.mapping()["id"])
                sc.take("punct", ")")
                if var == "a":
                    sc.take("punct", ",")
            sc.take("ident", "CREATE")
            sc.take("punct", "(")
            sc.take("ident", "a")
            sc.take("punct", ")")
            sc.take("punct", "-")
            sc.take("punct", "[")
            sc.take("punct", ":")
            etype = sc.take("ident")
            props = sc.mapping() if sc.at("{") else {}
            sc.take("punct", "]")
            sc.take("arrow")
            sc.take("punct", "(")
            sc.take("ident", "b")
            sc.take("punct", ")")
            try:
                g.add_edge(g.key_of(ends[0]), etype, g.key_of(ends[1]), props)
            except Exception as exc:  # unknown endpoint or schema violation
                raise ParseError(f"bad edge statement: {exc}") from exc
        else:
            raise ParseError(f"unsupported statement starting with {head!r}")
        sc.take("punct", ";")
    return g


def count_statements(text: str) -> int:
    return sum(1 for line in text.splitlines() if line.strip())


# ---------------------------------------------------------------------------
# DOT
# ---------------------------------------------------------------------------

# first matching label wins
DOT_COLORS = (
    (FLOWITEM, "red"),
    (HYPERNODE, "purple"),
    (PORT, "green"),
    (INSTANCE, "blue"),
    (BLOCK, "brown"),
    (STATE, "gold"),
    (PSEUDOSTATE, "gray"),
    (EXECUTION, "orange"),
    (ACTIVITY, "plum"),
    (ACTNODE, "lightgray"),
    (ACT, "lightgray"),
    (TRIGGER, "pink"),
)


def dot_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def node_color(labels: Iterable[str]) -> str:
    labels = set(labels)
    for lab, color in DOT_COLORS:
        if lab in labels:
            return color
    return "white"


def export_dot(graph: PropertyGraph, options: ExportOptions | None = None) -> str:
    options = options or ExportOptions("dot")
    nodes, edges = _select(graph, options)
    if not nodes:
        return "digraph {}\n"
    lines = ["digraph {", "  node [style=filled];"]
    for n in nodes:
        label = n.name if n.name is not None else n.id
        lines.append(f"  {dot_string(n.id)} [label={dot_string(label)}, "
                     f"fillcolor={node_color(n.labels)}, "
                     f"tooltip={dot_string(':'.join(sorted(n.labels)))}];")
    for e in edges:
        lines.append(f"  {dot_string(graph.node(e.source).id)} -> "
                     f"{dot_string(graph.node(e.target).id)} [label={dot_string(e.type)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# graph JSON
# ---------------------------------------------------------------------------


def export_graph_json(graph: PropertyGraph) -> bytes:
    return graph.to_json()


def import_graph_json(data: bytes | str, strict: bool = True) -> PropertyGraph:
    return PropertyGraph.from_json(data, strict=strict)


def export(graph: PropertyGraph, options: ExportOptions) -> bytes:
    if options.format == "cypher":
        return export_cypher(graph, options).encode("utf-8")
    if options.format == "dot":
        return export_dot(graph, options).encode("utf-8")
    if options.label_filter is not None:
        nodes, edges = _select(graph, options)
        doc = graph.to_dict()
        keep = {n.id for n in nodes}
        doc["nodes"] = [n for n in doc["nodes"] if n["id"] in keep]
        doc["edges"] = [e for e in doc["edges"] if e["src"] in keep and e["dst"] in keep]
        return (json.dumps(doc, indent=1, ensure_ascii=False) + "\n").encode("utf-8")
    return export_graph_json(graph)
