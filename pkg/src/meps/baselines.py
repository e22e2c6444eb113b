"""Tabular Q-learning baselines: 2-layer and PS-style multi-layer."""
from __future__ import annotations

import json
from typing import Hashable, Optional, Sequence

import numpy as np

from . import _kernels
from .deliberation import MappingError


class QTable:
    """Dense Q-values over a declared (state x action) product space."""

    def __init__(self, states: Sequence[Hashable], actions: Sequence[Hashable], q_init: float = 0.0,
                 alpha: float = 1.0, lam: float = 0.0):
        if not 0.0 <= alpha <= 1.0 or not 0.0 <= lam <= 1.0:
            raise ValueError("alpha and lambda must lie in [0, 1]")
        self.states = list(states)
        self.actions = list(actions)
        self.state_index = {s: k for k, s in enumerate(self.states)}
        self.action_index = {a: k for k, a in enumerate(self.actions)}
        if len(self.state_index) != len(self.states) or len(self.action_index) != len(self.actions):
            raise ValueError("duplicate state or action keys")
        self.q = np.full((len(self.states), len(self.actions)), float(q_init))
        self.q_init = float(q_init)
        self.alpha = float(alpha)
        self.lam = float(lam)

    def __len__(self) -> int:
        return self.q.size

    def row(self, state) -> np.ndarray:
        try:
            return self.q[self.state_index[state]]
        except KeyError:
            raise MappingError(f"unknown state {state!r}") from None

    def get(self, state, action) -> float:
        return float(self.row(state)[self.action_index[action]])

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "lambda": self.lam,
            "edges": [
                {"state": _key(s), "action": _key(a), "q": float(self.q[i, j])}
                for i, s in enumerate(self.states)
                for j, a in enumerate(self.actions)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _key(k):
    if isinstance(k, (tuple, list, frozenset)):
        return [_key(x) for x in (sorted(k) if isinstance(k, frozenset) else k)]
    return k


def q_select(table: QTable, state, rng: np.random.Generator):
    """Greedy action; ties broken uniformly with one draw from ``rng``."""
    row = table.row(state)
    return table.actions[_kernels.argmax_tie(row, rng.random())]


def q_update(table: QTable, state, action, reward: float, next_state=None) -> None:
    """Q <- (1-a) Q + a (R + lambda max Q(next, .)); ``next_state=None`` means no bootstrap."""
    i = table.state_index[state]
    j = table.action_index[action]
    target = float(reward)
    if table.lam != 0.0 and next_state is not None:
        target += table.lam * float(table.row(next_state).max())
    table.q[i, j] = (1.0 - table.alpha) * table.q[i, j] + table.alpha * target


class MultiLayerQAgent:
    """One Q-table per adjacent layer pair; layer k's actions are layer k+1's states."""

    def __init__(self, tables: Sequence[QTable]):
        for a, b in zip(tables, tables[1:]):
            if a.actions != b.states:
                raise ValueError("action space of a layer must equal the next layer's state space")
        self.tables = list(tables)

    def __len__(self) -> int:
        return sum(len(t) for t in self.tables)

    def learn(self, chain: Sequence, rewards: Sequence[float], next_chain: Optional[Sequence] = None) -> None:
        """Update layer k with rewards[k]; ``chain`` = (percept, C1, ..., Cn).

        ``next_chain`` is the chain deliberated from the following percept,
        needed only when some layer bootstraps (lambda > 0).
        """
        for k, t in enumerate(self.tables):
            nxt = next_chain[k] if next_chain is not None else None
            q_update(t, chain[k], chain[k + 1], rewards[k], nxt)


def mlq_step(agent: MultiLayerQAgent, percept_key, rng: np.random.Generator):
    """Greedy chain through every layer. Returns (chain of chosen keys, action key)."""
    chain = [percept_key]
    for t in agent.tables:
        chain.append(q_select(t, chain[-1], rng))
    return tuple(chain[1:]), chain[-1]
