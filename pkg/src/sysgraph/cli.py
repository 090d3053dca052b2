"""Command line front end: ``sysgraph ingest|transform|lint|query|export``.

Exit status is 0 on success, 1 for domain errors (unknown names, missing
capabilities, invalid models) and 2 for usage or input-parsing errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from . import export as export_mod
from .analysis import behavioral as beh
from .analysis import structural as st
from .errors import ParseError, SysGraphError
from .graph_store import PropertyGraph
from .lint import lint_model
from .model_ir import parse_model_json, serialize_model_json, validate_ir
from .transform import transform
from .xmi_ingest import DEFAULT_BLOCK_STEREOTYPES, XmiSubsetProfile, parse_xmi

log = logging.getLogger("sysgraph")


class UsageError(Exception):
    pass


def _read_bytes(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def _load_graph(path: str) -> PropertyGraph:
    return export_mod.import_graph_json(_read_bytes(path))


# -- output ---------------------------------------------------------------

def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, dict):
        return v.get("name") or v.get("id") or ""
    if isinstance(v, (list, tuple)):
        return ",".join(_cell(x) for x in v)
    return str(v)


def _table(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    lines = ["\t".join(cols)]
    lines += ["\t".join(_cell(r.get(c)) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


def _render(result: Any, fmt: str) -> str:
    if isinstance(result, list):
        rows = [r.to_dict() for r in result]
    else:
        rows = result.to_dict()
    if fmt == "json":
        return json.dumps(rows, indent=2, ensure_ascii=False) + "\n"
    if isinstance(rows, dict):
        return "".join(f"{k}\t{_cell(v)}\n" for k, v in rows.items())
    return _table(rows)


# -- commands -------------------------------------------------------------

def cmd_ingest(args: argparse.Namespace) -> int:
    if args.xmi:
        stereo = tuple(args.block_stereotype) if args.block_stereotype else DEFAULT_BLOCK_STEREOTYPES
        ir, stats = parse_xmi(_read_bytes(args.xmi), XmiSubsetProfile(stereo))
        for w in stats.warnings:
            print(f"warning: {w}", file=sys.stderr)
        print(f"recognized {stats.recognized} ignored {stats.ignored} "
              f"unresolved {stats.unresolved}", file=sys.stderr)
    else:
        ir = parse_model_json(_read_bytes(args.ir))
        issues = validate_ir(ir)
        if issues:
            for i in issues:
                print(f"error: {i}", file=sys.stderr)
            return 1
    _write(args.output, serialize_model_json(ir))
    return 0


def cmd_transform(args: argparse.Namespace) -> int:
    ir = parse_model_json(_read_bytes(args.ir))
    graph, report = transform(ir)
    for d in report.diagnostics:
        print(f"{d.severity}: {d.message}" + (f" [{d.source_id}]" if d.source_id else ""),
              file=sys.stderr)
    print(f"nodes {report.node_count} edges {report.edge_count}", file=sys.stderr)
    _write(args.output, export_mod.export_graph_json(graph))
    return 0


def cmd_lint(args: argparse.Namespace) -> int:
    report = lint_model(_load_graph(args.graph), root_name=args.root)
    text = report.to_json() if args.format == "json" else report.to_text()
    _write(args.output, text.encode("utf-8"))
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    labels = frozenset(args.labels.split(",")) if args.labels else None
    opts = export_mod.ExportOptions(args.format, labels, not args.no_props, args.batched)
    _write(args.output, export_mod.export(_load_graph(args.graph), opts))
    return 0


def _need(args: argparse.Namespace, *names: str) -> None:
    for n in names:
        if getattr(args, n) in (None, []):
            raise UsageError(f"--{n.replace('_', '-')} is required for this query")


def _anchor(args: argparse.Namespace, attr: str) -> tuple[str | None, str | None]:
    value = getattr(args, attr, None) or args.name
    if value is None and args.id is None:
        raise UsageError(f"give --{attr.replace('_', '-')} (or --name) or --id")
    return value, args.id


def _q_parts(g, a):
    name, nid = _anchor(a, "name")
    depth = None if a.depth == 0 else a.depth
    return st.parts_of(g, name, node_id=nid, depth=depth)


def _q_census(g, a):
    name, nid = _anchor(a, "scope")
    return st.port_census(g, name, node_id=nid)


def _q_type(g, a):
    name, nid = _anchor(a, "type_name")
    mode = a.mode or "members"
    return st.type_queries(g, name, mode.replace("-", "_"), node_id=nid)


def _q_datapath(g, a):
    name, nid = _anchor(a, "flowitem")
    return st.datapath(g, name, node_id=nid)


def _q_anomaly(g, a):
    name, nid = _anchor(a, "telemetry")
    return st.anomaly_suggestions(g, name, node_id=nid)


def _q_fault(g, a):
    _need(a, "faulty")
    return st.fault_candidates(g, a.faulty, a.healthy or ())


def _q_fallout(g, a):
    name, nid = _anchor(a, "component")
    return st.short_fallout(g, name, node_id=nid, flowlength=a.flowlength)


def _q_power(g, a):
    name, nid = _anchor(a, "component")
    return st.power_source_of(g, name, node_id=nid)


def _q_conditions(g, a):
    name, nid = _anchor(a, "state")
    return beh.conditions_into_state(g, name, node_id=nid)


def _q_state_path(g, a):
    _need(a, "from_", "to")
    return beh.state_paths(g, a.from_, a.to, a.forbid_trigger or (), a.avoid_state or (),
                           a.max_paths)


def _q_unreachable(g, a):
    _need(a, "disable_trigger")
    return beh.unreachable_states(g, a.disable_trigger)


def _q_lost(g, a):
    _need(a, "disable_trigger")
    return beh.lost_outputs(g, a.disable_trigger)


def _q_route(g, a):
    _need(a, "from_", "to")
    return beh.activity_routes(g, a.from_, a.to, a.max_paths)


def _q_usage(g, a):
    name, nid = _anchor(a, "object")
    return beh.object_usage(g, name, a.mode or "requires", node_id=nid)


QUERIES: dict[str, Callable[[PropertyGraph, argparse.Namespace], Any]] = {
    "parts": _q_parts,
    "port-census": _q_census,
    "type-query": _q_type,
    "datapath": _q_datapath,
    "anomaly-suggest": _q_anomaly,
    "fault-candidates": _q_fault,
    "short-fallout": _q_fallout,
    "power-source": _q_power,
    "state-conditions": _q_conditions,
    "state-path": _q_state_path,
    "state-unreachable": _q_unreachable,
    "lost-outputs": _q_lost,
    "activity-route": _q_route,
    "object-usage": _q_usage,
}


def cmd_query(args: argparse.Namespace) -> int:
    graph = _load_graph(args.graph)
    result = QUERIES[args.query](graph, args)
    _write(args.output, _render(result, args.format).encode("utf-8"))
    return 0


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sysgraph", description="SysML model graph analyses")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ing = sub.add_parser("ingest", help="read XMI or IR JSON and emit canonical IR JSON")
    src = ing.add_mutually_exclusive_group(required=True)
    src.add_argument("--xmi")
    src.add_argument("--ir")
    ing.add_argument("--block-stereotype", action="append",
                     help="stereotype name marking blocks (repeatable)")
    ing.add_argument("-o", "--output")
    ing.set_defaults(func=cmd_ingest)

    tr = sub.add_parser("transform", help="IR JSON to graph JSON")
    tr.add_argument("ir")
    tr.add_argument("-o", "--output")
    tr.set_defaults(func=cmd_transform)

    li = sub.add_parser("lint", help="guideline checks and capability report")
    li.add_argument("graph")
    li.add_argument("--root")
    li.add_argument("--format", choices=("text", "json"), default="text")
    li.add_argument("-o", "--output")
    li.set_defaults(func=cmd_lint)

    q = sub.add_parser("query", help="run one analysis")
    q.add_argument("query", choices=sorted(QUERIES))
    q.add_argument("graph")
    q.add_argument("--name")
    q.add_argument("--id")
    q.add_argument("--depth", type=int, default=1, help="0 = unbounded")
    q.add_argument("--scope")
    q.add_argument("--type-name")
    q.add_argument("--flowitem")
    q.add_argument("--telemetry")
    q.add_argument("--faulty", action="append")
    q.add_argument("--healthy", action="append")
    q.add_argument("--component")
    q.add_argument("--flowlength", type=int, default=10)
    q.add_argument("--state")
    q.add_argument("--from", dest="from_")
    q.add_argument("--to")
    q.add_argument("--forbid-trigger", action="append")
    q.add_argument("--avoid-state", action="append")
    q.add_argument("--disable-trigger", action="append")
    q.add_argument("--object")
    q.add_argument("--mode")
    q.add_argument("--max-paths", type=int, default=1)
    q.add_argument("--format", choices=("table", "json"), default="table")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_query)

    ex = sub.add_parser("export", help="graph JSON to Cypher, DOT or graph JSON")
    ex.add_argument("graph")
    ex.add_argument("--format", choices=export_mod.FORMATS, default="cypher")
    ex.add_argument("--labels", help="comma-separated label filter")
    ex.add_argument("--no-props", action="store_true")
    ex.add_argument("--batched", action="store_true")
    ex.add_argument("-o", "--output")
    ex.set_defaults(func=cmd_export)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SysGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
