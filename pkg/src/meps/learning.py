"""Glow and h-value updates.

Only edges with nonzero glow, or (with forgetting) h != h_init, change under
an update, so both updates run over those index sets instead of the whole
table. Every other edge is a fixed point of the eager rule, which makes the
result bit-identical to updating all edges.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .probability import ProbabilityRule, Standard
from .table import ManyBodyTable


class IntegrityError(LookupError):
    pass


@dataclass(frozen=True)
class LearningParams:
    gamma: float = 0.0
    eta: float = 1.0
    h_min: Optional[float] = None  # None: take it from the Standard rule

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.h_min is not None and self.h_min < 0:
            raise ValueError("h_min must be >= 0")


def traversed_indices(table: ManyBodyTable, walk) -> np.ndarray:
    if getattr(walk, "topology", None) is table.topology:
        return np.asarray(walk.edge_indices, dtype=np.int64)
    out = []
    for e in walk.edges:
        try:
            out.append(table.index_of(e))
        except KeyError as exc:
            raise IntegrityError(f"walk edge {e} is not stored in the table") from exc
    return np.asarray(out, dtype=np.int64)


def update_glow(table: ManyBodyTable, walk, eta: float) -> None:
    """Traversed edges get glow 1, every other glow is damped by (1 - eta)."""
    tr = np.unique(traversed_indices(table, walk))
    g = table._glowing
    if len(g):
        table.glow[g] *= 1.0 - eta
    table.glow[tr] = 1.0
    merged = np.union1d(g, tr)
    table._glowing = merged[table.glow[merged] != 0.0]


def _apply(table: ManyBodyTable, reward_of, params: LearningParams, rule) -> None:
    idx = table._glowing
    if params.gamma != 0.0 and len(table._displaced):
        idx = np.union1d(idx, table._displaced)
    if len(idx):
        h = table.h[idx]
        r = reward_of(idx)
        table.h[idx] = h - params.gamma * (h - table.h_init[idx]) + r * table.glow[idx]
    if isinstance(rule, Standard):
        h_min = rule.h_min if params.h_min is None else params.h_min
        if not table._clamped:
            np.maximum(table.h, h_min, out=table.h)
            table._clamped = True
            idx = np.flatnonzero(table.h != table.h_init)
        elif len(idx):
            table.h[idx] = np.maximum(table.h[idx], h_min)
    if len(idx):
        d = np.union1d(table._displaced, idx)
        table._displaced = d[table.h[d] != table.h_init[d]]


def update_h(table: ManyBodyTable, reward: float, params: LearningParams, rule: ProbabilityRule) -> None:
    """h <- h - gamma (h - h_init) + R g for every edge, then clamp (Standard only)."""
    reward = float(reward)
    _apply(table, lambda idx: reward, params, rule)


def update_split(
    table: ManyBodyTable,
    rewards: Mapping[tuple[int, int], float],
    walk,
    params: LearningParams,
    rule: ProbabilityRule,
) -> None:
    """Glow + h update where each layer pair (l, l+1) receives its own reward.

    The edges leaving layer l form the (l, l+1) sub-table; glows are kept per
    edge, so there is no leakage between sub-tables.
    """
    topo = table.topology
    if not topo.layered:
        raise ValueError("split updates need a layered table")
    tr = traversed_indices(table, walk)
    parts = [int(topo.edge_part[k]) for k in tr]
    if parts != sorted(parts):
        raise ValueError("walk edges must visit the layer pairs in order")
    lut = np.zeros(int(topo.layer_of.max()) + 2)
    for (lo, hi), r in rewards.items():
        if hi != lo + 1:
            raise ValueError(f"layer pair {(lo, hi)} is not adjacent")
        lut[lo] = float(r)
    update_glow(table, walk, params.eta)
    _apply(table, lambda idx: lut[topo.edge_part[idx]], params, rule)
