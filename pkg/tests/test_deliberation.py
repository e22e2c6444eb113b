import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meps import (
    BiasKind,
    CouplingMaps,
    FeedForward,
    Hyperedge,
    MappingError,
    Softmax,
    Standard,
    Termination,
    apply_edge,
    build_table,
    couple_in,
    step,
    walk,
)
from meps.agents import MepsInvasionAgent, MepsMaintenanceAgent, invasion_maps, invasion_topology, maintenance_clips
from meps.audit import cycle_fixture, layered_clips
from meps.deliberation import BoundViolation
from meps.envs import DistractionEnv, MaintenanceEnv

from conftest import flat


def test_couple_in_distraction_percept():
    topo = invasion_topology("distraction", 1)
    cfg = couple_in((3, 4, 7), invasion_maps(topo.clips))
    assert topo.clips.labels(cfg) == ["obs1:3", "obs2:4", "obs3:7"]


def test_couple_in_maintenance_symptoms():
    clips = maintenance_clips()
    agent_maps = MepsMaintenanceAgent(np.random.default_rng(0)).maps
    cfg = couple_in({2, 3}, agent_maps)
    assert clips.labels(cfg) == ["symptom:2", "symptom:3"]


def test_couple_in_empty_observation():
    maps = CouplingMaps(input_map=lambda obs: obs, output_map=lambda c: c)
    with pytest.raises(MappingError):
        couple_in((), maps)


def test_apply_edge_examples():
    # ids: c1..c3 -> 0..2, c'1..c'3 -> 4..6
    cfg = (0, 1, 2)
    assert apply_edge(cfg, Hyperedge((1, 2), (0, 4)), BiasKind.MB1) == (0, 4)
    assert apply_edge(cfg, Hyperedge((0, 1), (5, 6)), BiasKind.FF) == (2, 5, 6)
    assert apply_edge(cfg, Hyperedge((0, 1), (5, 6)), BiasKind.DP) == (5, 6)


def test_apply_edge_domain_must_be_excited():
    with pytest.raises(ValueError):
        apply_edge((0,), Hyperedge((1,), (2,)), BiasKind.MB1)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_apply_edge_no_duplicates_and_size_bound(data):
    v = 7
    config = tuple(sorted(data.draw(st.sets(st.integers(0, v - 1), min_size=1, max_size=v))))
    dom = tuple(sorted(data.draw(st.sets(st.sampled_from(config), min_size=1))))
    cod = tuple(sorted(data.draw(st.sets(st.integers(0, v - 1), min_size=1, max_size=3))))
    if dom == cod:
        return
    e = Hyperedge(dom, cod)
    for bias in (BiasKind.MB1, BiasKind.FF):
        out = apply_edge(config, e, bias)
        assert len(set(out)) == len(out)
        assert len(out) <= len(config) - len(dom) + len(cod)


def test_single_edge_is_deterministic(rng):
    t = build_table(flat(2), {(1, 1)}, lambda c, d, e: d == (0,))
    e, nxt = step((0,), t, BiasKind.MB1, Standard(), rng)
    assert e == Hyperedge((0,), (1,)) and nxt == (1,)


def test_equal_softmax_edges_sample_evenly(rng):
    t = build_table(flat(3), {(1, 1)}, lambda c, d, e: d == (0,))
    hits = sum(step((0,), t, BiasKind.MB1, Softmax(1.0), rng)[1] == (1,) for _ in range(10_000))
    assert abs(hits / 10_000 - 0.5) < 0.02


def test_sf_samples_only_shallow_domains(rng):
    clips = layered_clips([3, 3, 2])
    t = build_table(clips, {(1, 1)}, FeedForward())
    for _ in range(200):
        e, _ = step((0, 4), t, BiasKind.SF, Softmax(1.0), rng)
        assert clips[e.domain[0]].layer == 1


def test_distraction_walks_have_one_edge(rng):
    agent = MepsInvasionAgent("distraction", [(2, 1)], rng, check_bounds=True)
    env = DistractionEnv(np.random.default_rng(1))
    for _ in range(50):
        a = agent.act(env.reset())
        assert len(agent.last) == 1 and a in (0, 1)


def test_maintenance_walks_have_two_edges(rng):
    agent = MepsMaintenanceAgent(rng, check_bounds=True)
    env = MaintenanceEnv(np.random.default_rng(2))
    for _ in range(30):
        choice = agent.act(env.reset())
        if agent.last.terminated_by is Termination.ACTION:
            assert len(agent.last) == 2 and choice is not None


def test_dead_end_without_percept_edges(rng):
    clips = layered_clips([2, 2, 2])
    t = build_table(clips, {(1, 1)}, lambda c, d, e: c[d[0]].layer == 2 and c[e[0]].layer == 3)
    maps = CouplingMaps(input_map=lambda obs: obs, output_map=lambda c: c)
    rec, action = walk((0,), t, BiasKind.FF, Softmax(1.0), maps, rng=rng)
    assert rec.terminated_by is Termination.DEAD_END and action is None and len(rec) == 0


def test_walk_is_deterministic():
    agent_a = MepsInvasionAgent("deception", [(2, 1)], np.random.default_rng(7))
    agent_b = MepsInvasionAgent("deception", [(2, 1)], np.random.default_rng(7))
    for obs in [(1, 10, 3), (4, 13, 9), (0, 11, 0)]:
        assert agent_a.act(obs) == agent_b.act(obs)
        assert agent_a.last.edges == agent_b.last.edges


def test_mb1_cycle_exceeds_any_length(rng):
    t = cycle_fixture(n_clips=3, hot=50.0)
    maps = CouplingMaps(input_map=lambda obs: obs, output_map=lambda c: c, trigger=lambda c: c == (2,))
    for n in (10, 100, 500):
        rec, _ = walk((0,), t, BiasKind.MB1, Softmax(1.0), maps, step_cap=n + 1, rng=rng)
        assert len(rec) > n


def test_bound_violation_is_raised():
    # a hand-made FF walk cannot exceed the bound, so lower the layer sizes under the table's feet
    clips = layered_clips([1, 1])
    t = build_table(clips, {(1, 1)}, lambda c, d, e: True)  # layered clips but back edges allowed
    maps = CouplingMaps(input_map=lambda obs: obs, output_map=lambda c: c, trigger=lambda c: False)
    with pytest.raises(BoundViolation):
        walk((0,), t, BiasKind.DP, Softmax(1.0), maps, step_cap=5, rng=np.random.default_rng(0), check_bounds=True)


def test_walk_record_json(rng):
    agent = MepsInvasionAgent("distraction", [(1, 1)], rng)
    a = agent.act((1, 2, 3))
    d = agent.last.to_json(agent.table.clips, a)
    assert d["edges"][0]["io"] == [1, 1]
