"""Coupling in, random-walk steps, full deliberations and coupling out."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from . import _kernels
from .clips import ClipTable, Config, Hyperedge, canon
from .probability import ProbabilityRule, Softmax, Standard
from .table import BiasKind, ManyBodyTable

DEFAULT_STEP_CAP = 1000


class DeadEnd(Exception):
    """No relevant edge exists for the current configuration."""

    def __init__(self, config):
        super().__init__(f"no relevant edges for configuration {tuple(config)}")
        self.config = tuple(config)


class MappingError(KeyError):
    pass


class BoundViolation(AssertionError):
    pass


class Termination(enum.Enum):
    ACTION = "ActionCoupledOut"
    STEP_CAP = "StepCap"
    DEAD_END = "DeadEnd"


@dataclass
class WalkRecord:
    configs: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    edge_indices: list = field(default_factory=list)
    terminated_by: Optional[Termination] = None
    topology: Any = None  # identifies the table the indices refer to

    def __len__(self) -> int:
        return len(self.edges)

    def to_json(self, clips: Optional[ClipTable] = None, action=None) -> dict:
        lab = clips.labels if clips is not None else list
        return {
            "configs": [lab(c) for c in self.configs],
            "edges": [
                {"io": list(e.io), "dom": lab(e.domain), "cod": lab(e.codomain)} for e in self.edges
            ],
            "terminated_by": self.terminated_by.value if self.terminated_by else None,
            "action": action,
        }

    def dumps(self, clips: Optional[ClipTable] = None, action=None) -> str:
        return json.dumps(self.to_json(clips, action), default=_jsonable)


def _jsonable(x):
    if isinstance(x, (set, frozenset, tuple)):
        return sorted(x) if isinstance(x, (set, frozenset)) else list(x)
    if isinstance(x, np.integer):
        return int(x)
    raise TypeError(type(x))


@dataclass
class CouplingMaps:
    """Input/output coupling.

    ``input_map(obs)`` returns the percept configuration. ``output_map(config)``
    returns the action for a configuration that triggered coupling out.
    ``trigger(config)`` decides when to couple out; ``None`` means "all
    excitations in the final layer".
    """

    input_map: Callable[[Any], Any]
    output_map: Callable[[Config], Any]
    trigger: Optional[Callable[[Config], bool]] = None


def final_layer_trigger(clips: ClipTable) -> Callable[[Config], bool]:
    final = set(clips.layer(clips.depth))
    return lambda config: all(c in final for c in config)


def couple_in(observation, maps: CouplingMaps) -> Config:
    try:
        config = maps.input_map(observation)
    except (KeyError, IndexError, ValueError) as exc:
        raise MappingError(f"cannot couple in observation {observation!r}") from exc
    config = canon(config)
    if not config:
        raise MappingError(f"observation {observation!r} maps to the empty configuration")
    return config


def apply_edge(config: Config, edge: Hyperedge, bias: BiasKind) -> Config:
    cs = set(config)
    if not cs.issuperset(edge.domain):
        raise ValueError(f"domain {edge.domain} is not contained in {config}")
    if bias is BiasKind.DP:
        return edge.codomain
    return tuple(sorted((cs - set(edge.domain)) | set(edge.codomain)))


def _pick(table: ManyBodyTable, idx: np.ndarray, rule: ProbabilityRule, u: float) -> int:
    if isinstance(rule, Softmax):
        return int(idx[_kernels.softmax_pick(table.h, idx, float(rule.beta), u)])
    if isinstance(rule, Standard):
        if np.any(table.h[idx] <= 0):
            raise FloatingPointError("standard rule needs strictly positive h-values")
        return int(idx[_kernels.standard_pick(table.h, idx, u)])
    raise TypeError(f"unknown probability rule {rule!r}")


def step_index(config: Config, table: ManyBodyTable, bias: BiasKind, rule, rng) -> tuple[int, Config]:
    if not config:
        raise ValueError("configuration must be nonempty")
    idx = table.topology.relevant(config, bias)
    if len(idx) == 0:
        raise DeadEnd(config)
    k = _pick(table, idx, rule, rng.random())
    return k, apply_edge(config, table.edge(k), bias)


def step(config, table: ManyBodyTable, bias: BiasKind, rule, rng) -> tuple[Hyperedge, Config]:
    """Sample one transition and apply it. Draws exactly one uniform from ``rng``."""
    k, nxt = step_index(canon(config), table, bias, rule, rng)
    return table.edge(k), nxt


def walk(
    observation,
    table: ManyBodyTable,
    bias: BiasKind,
    rule,
    maps: CouplingMaps,
    step_cap: int = DEFAULT_STEP_CAP,
    rng=None,
    *,
    check_bounds: bool = False,
):
    """Deliberate from ``observation`` until coupling out, the cap, or a dead end.

    Returns ``(WalkRecord, action)``; ``action`` is None unless the walk
    coupled out. With ``check_bounds`` the walk length is checked against the
    analytic bound for ``bias``.
    """
    if step_cap < 1:
        raise ValueError("step_cap must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    trigger = maps.trigger or final_layer_trigger(table.clips)
    config = couple_in(observation, maps)
    rec = WalkRecord(configs=[config], topology=table.topology)
    action = None
    while True:
        if trigger(config):
            rec.terminated_by = Termination.ACTION
            try:
                action = maps.output_map(config)
            except (KeyError, IndexError, ValueError) as exc:
                raise MappingError(f"no action for configuration {config}") from exc
            break
        if len(rec.edges) >= step_cap:
            rec.terminated_by = Termination.STEP_CAP
            break
        try:
            k, config = step_index(config, table, bias, rule, rng)
        except DeadEnd:
            rec.terminated_by = Termination.DEAD_END
            break
        rec.edge_indices.append(k)
        rec.edges.append(table.edge(k))
        rec.configs.append(config)
    if check_bounds and bias.layered:
        from .audit import walk_length_bounds

        for name, bound in walk_length_bounds(bias, table.clips.layer_sizes(), table.io_set).items():
            if len(rec.edges) > bound:
                raise BoundViolation(f"walk of length {len(rec.edges)} exceeds {name} bound {bound}")
    return rec, action
