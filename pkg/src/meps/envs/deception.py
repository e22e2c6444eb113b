"""Deceptive invasion game: ten doors, announced door v1, modifier v2 in 10..13."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_DOORS = 10
MODIFIERS = (10, 11, 12, 13)
ACTIONS = tuple(range(N_DOORS))
REWARD_RIGHT = 2.0
REWARD_WRONG = -10.0
EXTRA_PENALTY = -1.0


@dataclass(frozen=True)
class DeceptionState:
    announced: int
    modifier: int
    distraction: int

    def __post_init__(self):
        if not 0 <= self.announced < N_DOORS:
            raise ValueError("announced door out of range")
        if self.modifier not in MODIFIERS:
            raise ValueError("modifier must lie in 10..13")
        if not 0 <= self.distraction < N_DOORS:
            raise ValueError("distraction out of range")

    @property
    def percept(self) -> tuple[int, int, int]:
        return self.announced, self.modifier, self.distraction


def _state(state) -> DeceptionState:
    return state if isinstance(state, DeceptionState) else DeceptionState(*state)


def attacked_door(state) -> int:
    s = _state(state)
    if (s.announced + s.modifier) % 2 == 0:
        return s.announced
    return (s.announced + 1) % N_DOORS


def deception_reward(state, action: int) -> float:
    s = _state(state)
    if action not in ACTIONS:
        raise ValueError(f"action must lie in 0..9, got {action!r}")
    if action == attacked_door(s):
        return REWARD_RIGHT
    even = (s.announced + s.modifier) % 2 == 0
    if even or action == s.announced:
        return REWARD_WRONG + EXTRA_PENALTY
    return REWARD_WRONG


class DeceptionEnv:
    observables = (N_DOORS, len(MODIFIERS), N_DOORS)
    offsets = (0, MODIFIERS[0], 0)
    actions = ACTIONS

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.state = None

    def reset(self) -> tuple[int, int, int]:
        self.state = DeceptionState(
            int(self.rng.integers(0, N_DOORS)),
            int(self.rng.choice(MODIFIERS)),
            int(self.rng.integers(0, N_DOORS)),
        )
        return self.state.percept

    def step(self, action):
        r = deception_reward(self.state, action)
        return r, True, {"correct": r == REWARD_RIGHT}
