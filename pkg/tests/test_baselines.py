import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meps import MappingError
from meps.agents import QInvasionAgent, QMaintenanceAgent, maintenance_q_agent
from meps.baselines import MultiLayerQAgent, QTable, mlq_step, q_select, q_update
from meps.envs import DistractionEnv


def table(row):
    t = QTable(["s"], list(range(len(row))))
    t.q[0] = row
    return t


def test_unique_argmax(rng):
    assert q_select(table([0, 5, 0]), "s", rng) == 1


def test_all_equal_is_uniform(rng):
    t = table([1.0, 1.0, 1.0, 1.0])
    n = 10_000
    counts = np.bincount([q_select(t, "s", rng) for _ in range(n)], minlength=4)
    sigma = np.sqrt(n * 0.25 * 0.75)
    assert np.all(np.abs(counts - n / 4) <= 3 * sigma)


def test_two_way_tie(rng):
    t = table([2, 2, 1])
    picks = [q_select(t, "s", rng) for _ in range(4000)]
    assert set(picks) == {0, 1}
    assert abs(np.mean(picks) - 0.5) < 0.03


def test_alpha_one_overwrites():
    t = table([4.0])
    q_update(t, "s", 0, 2.0)
    assert t.q[0, 0] == 2.0


def test_alpha_zero_keeps():
    t = QTable(["s"], [0], alpha=0.0)
    q_update(t, "s", 0, 9.0)
    assert t.q[0, 0] == 0.0


def test_alpha_half():
    t = QTable(["s"], [0], q_init=4.0, alpha=0.5)
    q_update(t, "s", 0, 2.0)
    assert t.q[0, 0] == 3.0


def test_bootstrap_uses_next_state():
    t = QTable(["a", "b"], [0, 1], alpha=1.0, lam=0.5)
    t.q[1] = [2.0, 6.0]
    q_update(t, "a", 0, 1.0, next_state="b")
    assert t.q[0, 0] == 4.0


def test_unknown_state():
    with pytest.raises(MappingError):
        table([1.0]).row("zzz")


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 1), st.floats(-10, 10)), min_size=1, max_size=40))
def test_q_equals_last_reward(log):
    t = QTable([0, 1, 2], [0, 1])
    last = {}
    for s, a, r in log:
        q_update(t, s, a, r)
        last[(s, a)] = r
    for (s, a), r in last.items():
        assert t.get(s, a) == r


def test_two_layer_agent_is_select_then_update():
    rng_a, rng_b = np.random.default_rng(4), np.random.default_rng(4)
    agent = QInvasionAgent("distraction", rng_a)
    ref = QTable(agent.table.states, agent.table.actions)
    env = DistractionEnv(np.random.default_rng(5))
    for _ in range(300):
        obs = env.reset()
        a = agent.act(obs)
        assert a == q_select(ref, obs, rng_b)
        r = env.step(a)[0]
        agent.learn(r)
        q_update(ref, obs, a, r)
    assert np.array_equal(agent.table.q, ref.q)


def small_chain():
    return MultiLayerQAgent([QTable(["p"], ["h1", "h2"], 1.0), QTable(["h1", "h2"], ["a1", "a2"], 1.0)])


def test_chain_and_split_rewards(rng):
    agent = small_chain()
    chain, action = mlq_step(agent, "p", rng)
    assert len(chain) == 2 and action == chain[-1]
    agent.learn(("p",) + chain, (3.0, -2.0))
    assert agent.tables[0].get("p", chain[0]) == 3.0
    assert agent.tables[1].get(chain[0], chain[1]) == -2.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=20))
def test_mlq_never_explores(seed, rewards):
    rng = np.random.default_rng(seed)
    agent = small_chain()
    for r in rewards:
        chain, _ = mlq_step(agent, "p", rng)
        prev = "p"
        for t, key in zip(agent.tables, chain):
            row = t.row(prev)
            assert row[t.action_index[key]] == row.max()
            prev = key
        agent.learn(("p",) + chain, r)


def test_layer_spaces_must_chain():
    with pytest.raises(ValueError):
        MultiLayerQAgent([QTable(["p"], ["h"]), QTable(["x"], ["a"])])


def test_maintenance_q_size():
    agent = maintenance_q_agent()
    assert len(agent) == 1429968
    assert [t.q.shape for t in agent.tables] == [(1023, 961), (961, 465)]


def test_maintenance_q_deterministic():
    a = QMaintenanceAgent(np.random.default_rng(11))
    b = QMaintenanceAgent(np.random.default_rng(11))
    for obs in [(2, 3), (1, 4), (2, 3)]:
        ca, cb = a.act(obs), b.act(obs)
        assert ca == cb
        a.learn((-10.0, -9.0))
        b.learn((-10.0, -9.0))


def test_json_envelope():
    d = json.loads(table([1.5, 2.0]).dumps())
    assert d["edges"][1]["q"] == 2.0 and "h" not in d["edges"][0]
