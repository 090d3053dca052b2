import json

import pytest

from conftest import FIXTURES
from sysgraph.cli import main


@pytest.fixture(scope="module")
def pwr_graph(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "pwr.graph.json"
    assert main(["transform", str(FIXTURES / "fix_pwr.ir.json"), "-o", str(out)]) == 0
    return out


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_ingest_xmi_writes_canonical_ir(tmp_path, capsys):
    out = tmp_path / "a.ir.json"
    code, _, err = run(capsys, "ingest", "--xmi", FIXTURES / "fix_a.xmi", "-o", out)
    assert code == 0
    assert out.read_bytes() == (FIXTURES / "fix_a.ir.json").read_bytes()
    assert "recognized 20" in err


def test_ingest_ir_validates(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"ports": [{"id": "p", "owner": "nobody"}]}')
    code, _, err = run(capsys, "ingest", "--ir", bad)
    assert code in (1, 2) and err.startswith("error:")


def test_transform_reports_counts(tmp_path, capsys):
    code, _, err = run(capsys, "transform", FIXTURES / "fix_a.ir.json", "-o", tmp_path / "g.json")
    assert code == 0 and "nodes" in err
    assert json.loads((tmp_path / "g.json").read_text())["nodes"]


def test_lint_json(pwr_graph, capsys):
    code, out, _ = run(capsys, "lint", pwr_graph, "--format", "json")
    assert code == 0
    assert isinstance(json.loads(out), dict)


def test_query_table(pwr_graph, capsys):
    code, out, _ = run(capsys, "query", "short-fallout", pwr_graph, "--component", "comp2")
    assert code == 0
    assert "F" in out and "comp1 status" in out


def test_query_json(pwr_graph, capsys):
    code, out, _ = run(capsys, "query", "power-source", pwr_graph, "--component", "comp1",
                       "--format", "json")
    assert code == 0
    assert [r["name"] for r in json.loads(out)] == ["bus", "F", "battery"]


def test_datapath_rows(pwr_graph, capsys):
    code, out, _ = run(capsys, "query", "datapath", pwr_graph, "--flowitem", "temp1")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 3
    assert all(len(line.split("\t")) == len(lines[0].split("\t")) for line in lines)


def test_unknown_name_exits_1(pwr_graph, capsys):
    code, _, err = run(capsys, "query", "parts", pwr_graph, "--name", "no such thing")
    assert code == 1 and "error:" in err


def test_usage_errors_exit_2(pwr_graph, tmp_path, capsys):
    assert run(capsys, "query", "fault-candidates", pwr_graph)[0] == 2
    assert run(capsys, "query", "parts", pwr_graph)[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{nope")
    assert run(capsys, "lint", junk)[0] == 2


@pytest.mark.parametrize("fmt", ["cypher", "dot", "graphjson"])
def test_export_is_repeatable_and_leaves_input_alone(pwr_graph, capsys, fmt):
    before = pwr_graph.read_bytes()
    first = run(capsys, "export", pwr_graph, "--format", fmt)
    second = run(capsys, "export", pwr_graph, "--format", fmt)
    assert first[0] == 0 and first == second and first[1]
    assert pwr_graph.read_bytes() == before


def test_behavioral_queries(tmp_path, capsys):
    g = tmp_path / "stm.json"
    main(["transform", str(FIXTURES / "fix_stm.ir.json"), "-o", str(g)])
    capsys.readouterr()
    code, out, _ = run(capsys, "query", "state-unreachable", g, "--disable-trigger", "c1")
    assert code == 0 and "s2" in out and "s3" in out
    code, out, _ = run(capsys, "query", "state-path", g, "--from", "s1", "--to", "s3",
                       "--format", "json")
    assert code == 0 and json.loads(out)[0]["hops"] == 1
