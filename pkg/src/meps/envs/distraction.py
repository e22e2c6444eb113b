"""Invasion game with a distracting third observable."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_VALUES = 10
N_OBSERVABLES = 3
ACTIONS = (0, 1)
REWARD_RIGHT = 1.0
REWARD_WRONG = -10.0


@dataclass(frozen=True)
class DistractionState:
    percept: tuple[int, int, int]

    def __post_init__(self):
        if len(self.percept) != N_OBSERVABLES or not all(0 <= v < N_VALUES for v in self.percept):
            raise ValueError(f"bad percept {self.percept}")


def correct_door(percept) -> int:
    v1, v2, _ = percept
    return (v1 + v2) % 2


def distraction_reward(percept, action: int) -> float:
    if action not in ACTIONS:
        raise ValueError(f"action must be 0 or 1, got {action!r}")
    return REWARD_RIGHT if action == correct_door(percept) else REWARD_WRONG


class DistractionEnv:
    observables = ((N_VALUES,) * N_OBSERVABLES)
    offsets = (0, 0, 0)
    actions = ACTIONS

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.state = None

    def reset(self) -> tuple[int, int, int]:
        v = self.rng.integers(0, N_VALUES, size=N_OBSERVABLES)
        self.state = DistractionState(tuple(int(x) for x in v))
        return self.state.percept

    def step(self, action):
        r = distraction_reward(self.state.percept, action)
        return r, True, {"correct": r == REWARD_RIGHT}
