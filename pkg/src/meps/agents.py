"""Ready-made agents for the three environments.

Every agent exposes ``act(observation) -> action`` and ``learn(reward)``;
maintenance agents return ``(hidden_choice, action_choice)`` and learn from a
``(hypothesis, plausibility)`` reward pair.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations, product
from typing import Optional

import numpy as np

from .baselines import MultiLayerQAgent, QTable, mlq_step
from .clips import ClipTable
from .deliberation import DEFAULT_STEP_CAP, CouplingMaps, Termination, walk
from .envs import deception, distraction
from .envs.maintenance import CAUSES, COMPONENTS, FIXES, SYMPTOMS
from .learning import LearningParams, update_glow, update_h, update_split
from .probability import ProbabilityRule, Softmax
from .table import BiasKind, CategoryCutoffs, FeedForward, ManyBodyTable, build_topology

ENV_SPECS = {
    "distraction": distraction.DistractionEnv,
    "deception": deception.DeceptionEnv,
}


# --------------------------------------------------------------------------
# invasion games


def invasion_clips(env_cls) -> ClipTable:
    clips = ClipTable()
    for j, (n, off) in enumerate(zip(env_cls.observables, env_cls.offsets), start=1):
        for v in range(off, off + n):
            clips.add(f"obs{j}:{v}", layer=1, category=f"obs{j}")
    for a in env_cls.actions:
        clips.add(f"a={a}", layer=2, category="action")
    return clips


def _io_key(io) -> tuple:
    if isinstance(io, int):
        return ((io, 1),)
    return tuple(sorted((int(i), int(o)) for i, o in io))


@lru_cache(maxsize=None)
def _invasion_topology(env_name: str, io: tuple):
    clips = invasion_clips(ENV_SPECS[env_name])
    return build_topology(clips, set(io), FeedForward(distinct_domain_categories=True))


def invasion_topology(env_name: str, io):
    """Percept-to-action edges, one value per observable in each domain.

    ``io`` is an IO set such as {(2, 1)}; a bare integer i means {(i, 1)}.
    """
    return _invasion_topology(env_name, _io_key(io))


def invasion_maps(clips: ClipTable) -> CouplingMaps:
    action_of = {clips.id_of(f"a={a}"): a for a in _actions(clips)}
    percept = {}
    for c in clips.clips:
        if c.layer == 1:
            j, v = c.label[3:].split(":")
            percept[(int(j), int(v))] = c.id

    def input_map(obs):
        return [percept[(j, int(v))] for j, v in enumerate(obs, start=1)]

    def output_map(config):
        (a,) = [action_of[c] for c in config if c in action_of]
        return a

    return CouplingMaps(input_map, output_map, trigger=lambda cfg: any(c in action_of for c in cfg))


def _actions(clips: ClipTable):
    return [int(c.label[2:]) for c in clips.clips if c.category == "action"]


class MepsInvasionAgent:
    def __init__(self, env_name: str, io, rng: np.random.Generator, rule: ProbabilityRule = Softmax(1.0),
                 params: LearningParams = LearningParams(0.0, 1.0), h_init: float = 1.0,
                 bias: BiasKind = BiasKind.FF, step_cap: int = DEFAULT_STEP_CAP, check_bounds: bool = False):
        topo = invasion_topology(env_name, io)
        self.table = ManyBodyTable(topo, h_init)
        self.maps = invasion_maps(topo.clips)
        self.rng, self.rule, self.params, self.bias = rng, rule, params, bias
        self.step_cap, self.check_bounds = step_cap, check_bounds
        self.last = None

    def act(self, obs):
        rec, action = walk(obs, self.table, self.bias, self.rule, self.maps, self.step_cap, self.rng,
                           check_bounds=self.check_bounds)
        self.last = rec
        return action

    def learn(self, reward: float) -> None:
        update_glow(self.table, self.last, self.params.eta)
        update_h(self.table, reward, self.params, self.rule)


class QInvasionAgent:
    """Standard 2-layer Q-learning: full percept as state."""

    def __init__(self, env_name: str, rng: np.random.Generator, q_init: float = 0.0, alpha: float = 1.0,
                 lam: float = 0.0):
        env_cls = ENV_SPECS[env_name]
        states = list(product(*[range(o, o + n) for n, o in zip(env_cls.observables, env_cls.offsets)]))
        self.table = QTable(states, list(env_cls.actions), q_init, alpha, lam)
        self.rng = rng
        self.last = None

    def act(self, obs):
        from .baselines import q_select

        a = q_select(self.table, tuple(obs), self.rng)
        self.last = (tuple(obs), a)
        return a

    def learn(self, reward: float) -> None:
        from .baselines import q_update

        q_update(self.table, *self.last, reward)


# --------------------------------------------------------------------------
# computer maintenance


def maintenance_clips() -> ClipTable:
    clips = ClipTable()
    for s in SYMPTOMS:
        clips.add(f"symptom:{s}", layer=1, category="symptom")
    for c in COMPONENTS:
        clips.add(f"hc:{c}", layer=2, category="component")
    for c in CAUSES:
        clips.add(f"cause:{c}", layer=2, category="cause")
    for c in COMPONENTS:
        clips.add(f"ac:{c}", layer=3, category="component")
    for f in FIXES:
        clips.add(f"fix:{f}", layer=3, category="fix")
    return clips


def _cut_rule(cutoffs) -> CategoryCutoffs:
    n_s, (n_hc, n_c), (n_ac, n_f) = cutoffs
    return CategoryCutoffs({
        1: {"symptom": n_s},
        2: {"component": n_hc, "cause": n_c},
        3: {"component": n_ac, "fix": n_f},
    })


INDUCTIVE_CUTOFFS = (2, (3, 2), (3, 2))
UNRESTRICTED_CUTOFFS = (len(SYMPTOMS), (len(COMPONENTS), len(CAUSES)), (len(COMPONENTS), len(FIXES)))

_MAINT_CLIPS = maintenance_clips()


@lru_cache(maxsize=4)
def maintenance_topology(cutoffs, domain_match: str):
    rule = _cut_rule(cutoffs)
    return build_topology(_MAINT_CLIPS, rule.io_set(_MAINT_CLIPS), rule, domain_match)


def _code(clips: ClipTable, cid: int) -> int:
    return int(clips[cid].label.split(":")[1])


def maintenance_maps(clips: ClipTable) -> CouplingMaps:
    def input_map(symptoms):
        return [clips.id_of(f"symptom:{s}") for s in symptoms]

    def output_map(config):
        comps = frozenset(_code(clips, c) for c in config if clips[c].category == "component")
        fixes = frozenset(_code(clips, c) for c in config if clips[c].category == "fix")
        return comps, fixes

    return CouplingMaps(input_map, output_map)  # couple out on the final layer


def hidden_choice(clips: ClipTable, config) -> tuple[frozenset, frozenset]:
    comps = frozenset(_code(clips, c) for c in config if clips[c].category == "component")
    causes = frozenset(_code(clips, c) for c in config if clips[c].category == "cause")
    return comps, causes


class MepsMaintenanceAgent:
    """Three-layer DP agent. ``exact`` domains give the unrestricted agent."""

    def __init__(self, rng: np.random.Generator, cutoffs=INDUCTIVE_CUTOFFS, domain_match: str = "subset",
                 rule: ProbabilityRule = Softmax(0.5), params: LearningParams = LearningParams(0.0, 1.0),
                 h_init: float = 1.0, step_cap: int = DEFAULT_STEP_CAP, check_bounds: bool = False):
        cutoffs = (int(cutoffs[0]), tuple(cutoffs[1]), tuple(cutoffs[2]))
        topo = maintenance_topology(cutoffs, domain_match)
        self.table = ManyBodyTable(topo, h_init)
        self.maps = maintenance_maps(topo.clips)
        self.rng, self.rule, self.params = rng, rule, params
        self.step_cap, self.check_bounds = step_cap, check_bounds
        self.last = None

    def act(self, symptoms):
        rec, action = walk(symptoms, self.table, BiasKind.DP, self.rule, self.maps, self.step_cap, self.rng,
                           check_bounds=self.check_bounds)
        self.last = rec
        if rec.terminated_by is not Termination.ACTION:
            return None
        return hidden_choice(self.table.clips, rec.configs[1]), action

    def learn(self, rewards) -> None:
        r_h, r_p = rewards
        update_split(self.table, {(1, 2): r_h, (2, 3): r_p}, self.last, self.params, self.rule)


def _subsets(codes, kmax):
    return [c for k in range(1, kmax + 1) for c in combinations(sorted(codes), k)]


def maintenance_q_agent(q_init: float = 1.0, alpha: float = 1.0, lam: float = 0.0) -> MultiLayerQAgent:
    """Multi-layer Q over full configurations: symptoms -> (components, causes) -> (components, fixes)."""
    percepts = _subsets(SYMPTOMS, len(SYMPTOMS))
    comps = _subsets(COMPONENTS, len(COMPONENTS))
    hidden = [(c, ca) for c in comps for ca in _subsets(CAUSES, len(CAUSES))]
    actions = [(c, f) for c in comps for f in _subsets(FIXES, len(FIXES))]
    return MultiLayerQAgent([
        QTable(percepts, hidden, q_init, alpha, lam),
        QTable(hidden, actions, q_init, alpha, lam),
    ])


class QMaintenanceAgent:
    def __init__(self, rng: np.random.Generator, q_init: float = 1.0, alpha: float = 1.0, lam: float = 0.0):
        self.agent = maintenance_q_agent(q_init, alpha, lam)
        self.rng = rng
        self.last: Optional[tuple] = None
        self.pending: Optional[tuple] = None

    def act(self, symptoms):
        percept = tuple(sorted(symptoms))
        chain, _ = mlq_step(self.agent, percept, self.rng)
        self.last = (percept,) + chain
        (comps, causes), (acomps, fixes) = chain
        return (frozenset(comps), frozenset(causes)), (frozenset(acomps), frozenset(fixes))

    def learn(self, rewards) -> None:
        self.agent.learn(self.last, rewards)
