import json
import random

from hypothesis import given, settings
from hypothesis import strategies as st

import gen
from conftest import load_graph
from sysgraph.analysis.common import ANALYSES
from sysgraph.graph_store import BLOCK, IS_PART_OF, PropertyGraph
from sysgraph.lint import lint_model
from sysgraph.model_ir import AssocRec, BlockRec, ModelIR
from sysgraph.taxonomy import Taxonomy
from sysgraph.transform import transform


def test_fix_pwr_supports_everything():
    rep = lint_model(load_graph("fix_pwr"))
    assert set(rep.capabilities) == set(ANALYSES)
    assert all(v == "supported" for v in rep.capabilities.values())
    assert {f.rule_id for f in rep.findings} <= {"L4", "L7"}


def test_fix_a_lacks_taxonomy():
    rep = lint_model(load_graph("fix_a"))
    assert rep.capabilities["short_fallout"] == "unsupported"
    assert rep.capabilities["power_source_of"] == "unsupported"
    assert rep.capabilities["datapath"] == "supported"
    assert len(rep.by_rule("L2")) == 2
    assert [f.node_ids for f in rep.by_rule("L3")] == [["X"]]


def test_root_reachability():
    g = load_graph("fix_pwr")
    assert not lint_model(g, root_name="satellite").by_rule("L1")
    rep = lint_model(g, root_name="Battery")
    assert rep.by_rule("L1")
    assert rep.capabilities["parts_of"] == "degraded"
    assert lint_model(g, root_name="nowhere").by_rule("L1")[0].message.startswith("root block")


def test_parts_declared_on_definitions_reach_the_root():
    ir = ModelIR(blocks=(BlockRec("Sat", "sat"), BlockRec("Sub", "sub"), BlockRec("U", "unit"),
                         BlockRec("s", "s", True, "Sub"), BlockRec("u", "u", True, "U")),
                 associations=(AssocRec("a1", "Sat", "s"), AssocRec("a2", "Sub", "u")))
    g, _ = transform(ir)
    assert not lint_model(g, root_name="sat").by_rule("L1")


def test_duplicate_names_and_cycles():
    g = PropertyGraph()
    a = g.add_node({BLOCK}, {"id": "a", "name": "same"})
    b = g.add_node({BLOCK}, {"id": "b", "name": "same"})
    g.add_edge(a, IS_PART_OF, b)
    g.add_edge(b, IS_PART_OF, a)
    rep = lint_model(g)
    assert rep.by_rule("L5")[0].node_ids == ["a", "b"]
    assert rep.by_rule("L6")[0].severity == "error"
    assert rep.capabilities["datapath"] == "degraded"
    assert rep.capabilities["state_paths"] == "degraded"  # name anchored


def test_configurable_taxonomy_names():
    g = load_graph("fix_pwr")
    rep = lint_model(g, taxonomy=Taxonomy(physical="energy", fuse="breaker"))
    assert rep.capabilities["short_fallout"] == "unsupported"


def test_env_overrides_taxonomy(monkeypatch):
    monkeypatch.setenv("SYSGRAPH_CLASS_FUSE", "breaker")
    assert Taxonomy.from_env().fuse == "breaker"
    assert Taxonomy.from_env().physical == "physical flowitem"


def test_report_formats():
    rep = lint_model(load_graph("fix_a"))
    doc = json.loads(rep.to_json())
    assert set(doc) == {"findings", "capabilities"}
    lines = rep.to_text().splitlines()
    assert lines[0].split(" ", 3)[:2] == ["L1", "warning"]
    assert "L2 warning - taxonomy class 'physical flowitem' is missing" in lines


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_lint_properties(seed):
    g, _ = transform(gen.random_ir(random.Random(seed)))
    before = g.canonical()
    rep = lint_model(g)
    assert g.canonical() == before
    assert lint_model(g).to_json() == rep.to_json()
    assert set(rep.capabilities) == set(ANALYSES)
    for f in rep.findings:
        for i in f.node_ids:
            assert g.has_id(i)
    if rep.capabilities["short_fallout"] == "supported":
        assert not [f for f in rep.by_rule("L2") if f.severity in ("warning", "error")]
    if not rep.findings:
        assert set(rep.capabilities.values()) == {"supported"}
