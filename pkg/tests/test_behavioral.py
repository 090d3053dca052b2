import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
import oracles
from conftest import load_graph
from sysgraph.analysis import (
    activity_routes, conditions_into_state, lost_outputs, object_usage, state_paths,
    unreachable_states,
)
from sysgraph.errors import AnalysisError, UnknownNameError
from sysgraph.graph_store import HYPERNODE, TRANSITION, TRIGGERS
from sysgraph.transform import transform


@pytest.fixture(scope="module")
def stm():
    return load_graph("fix_stm")


def names(rows):
    return [r.name for r in rows]


def test_conditions_into_state(stm):
    got = [(c.triggers, c.guard, c.from_state) for c in conditions_into_state(stm, "s3")]
    assert got == [(("c1",), "g", "s1"), (("c2",), None, "s2")]


def test_state_path_hops(stm):
    [r] = state_paths(stm, "s1", "s3")
    assert r.hops == 1
    assert r.triggers == [["c1"]] and r.guards == ["g"]
    assert state_paths(stm, "s1", "s3", forbidden_triggers=["c1"]) == []


def test_forbidden_state_removes_detours(stm):
    for p in state_paths(stm, "s1", "s3", forbidden_states=["s2"], max_paths=5):
        assert "s2" not in names(p.path)


def test_unknown_trigger_name_raises(stm):
    with pytest.raises(UnknownNameError):
        state_paths(stm, "s1", "s3", forbidden_triggers=["nope"])
    with pytest.raises(AnalysisError):
        state_paths(stm, "s1", "s3", max_paths=0)


def test_unreachable_states(stm):
    assert names(unreachable_states(stm, "c1")) == ["s2", "s3"]
    assert names(unreachable_states(stm, "c2")) == []


def test_lost_outputs():
    assert names(lost_outputs(load_graph("fix_stm2"), "c1")) == ["log record"]


def test_submachine_paths_pass_through_connection_points():
    g = load_graph("fix_sub")
    [p] = state_paths(g, "idle", "after")
    assert [r.id for r in p.path] == ["idle", "t1", "en", "t2", "inner", "t3", "ex", "t4", "after"]
    assert p.hops == 4
    assert state_paths(g, "idle", "after", forbidden_triggers=["done"]) == []


def test_activity_route():
    g = load_graph("fix_nest")
    [r] = activity_routes(g, source_id="ra.i", target_id="ra.f")
    assert r.activities == ["Action1", "Action2"]
    assert [n.id for n in r.path][0] == "ra.i" and [n.id for n in r.path][-1] == "ra.f"


def test_object_usage():
    g = load_graph("fix_act")
    assert names(object_usage(g, "A", "requires")) == ["Action2"]
    assert names(object_usage(g, "A", "produces")) == ["Action1"]
    assert names(object_usage(g, "Z", "inputs")) == ["A"]
    with pytest.raises(AnalysisError):
        object_usage(g, "A", "consumes")


def _used_triggers(raw):
    return sorted({raw.name(s) for s, t, _, _ in raw.edges if t == "TRIGGERS"})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.data())
def test_unreachable_set_grows_with_disabled_triggers(seed, data):
    g, _ = transform(gen.merge(gen.machine(random.Random(seed), 8, 4, 0.25, "")))
    raw = oracles.Raw(g.to_dict())
    used = _used_triggers(raw)
    if len(used) < 2:
        return
    subset = data.draw(st.lists(st.sampled_from(used), min_size=1, max_size=len(used),
                                unique=True))
    small = {r.id for r in unreachable_states(g, subset[:1])}
    large = {r.id for r in unreachable_states(g, subset)}
    assert small <= large


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.data())
def test_every_hop_respects_exclusions(seed, data):
    g, _ = transform(gen.merge(gen.machine(random.Random(seed), 8, 4, 0.3, "")))
    before = g.canonical()
    raw = oracles.Raw(g.to_dict())
    used = _used_triggers(raw)
    states = sorted(raw.name(i) for i in raw.ids("STATE") if raw.name(i))
    src, dst = data.draw(st.sampled_from(states)), data.draw(st.sampled_from(states))
    forbid = data.draw(st.lists(st.sampled_from(used), max_size=2, unique=True)) if used else []
    for p in state_paths(g, src, dst, forbidden_triggers=forbid, max_paths=3):
        for trig in p.triggers:
            assert not set(trig) & set(forbid)
        hops = [r for r in p.path if HYPERNODE in g.node(g.key_of(r.id)).labels]
        assert len(hops) == p.hops
        for h in hops:
            k = g.key_of(h.id)
            assert g.edges_of(k, TRANSITION, "in")
            assert not {g.node(t).name for t in g.neighbors(k, TRIGGERS, "in")} & set(forbid)
    assert g.canonical() == before
