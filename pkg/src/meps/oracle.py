"""Brute-force check that many-body tables induce an ordinary ECM at inference.

The induced weight of a transition C_in -> C_out is the sum of the many-body
h-values of every stored edge that is applicable to C_in and lands on C_out.
Everything here enumerates by hand and never calls the table's relevance
index, so it can serve as an independent reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .clips import ClipTable, Config, Hyperedge, canon
from .deliberation import apply_edge
from .probability import Softmax, Standard, to_probabilities
from .table import BiasKind, ExplicitEdges, ManyBodyTable, build_topology, relevant_hvalues

UNIVERSE_CAP = 2**16


class OracleRefusal(ValueError):
    pass


@dataclass
class StandardEcm:
    edges: dict = field(default_factory=dict)  # (C_in, C_out) -> h

    def out_weights(self, c_in: Config) -> dict:
        return {co: h for (ci, co), h in self.edges.items() if ci == c_in}

    def distribution(self, c_in: Config) -> dict:
        w = self.out_weights(canon(c_in))
        total = math.fsum(w.values())
        return {k: v / total for k, v in sorted(w.items())}


def all_configs(n_clips: int) -> list[Config]:
    return [c for k in range(1, n_clips + 1) for c in combinations(range(n_clips), k)]


def _applicable(table: ManyBodyTable, dom: Config, c_in: Config, bias: BiasKind) -> bool:
    if table.topology.domain_match == "exact":
        return dom == c_in
    if bias is BiasKind.SF:
        layer = {c.id: c.layer for c in table.clips.clips}
        top = min(layer[c] for c in c_in)
        c_in = tuple(c for c in c_in if layer[c] == top)
    return set(dom) <= set(c_in)


def _result(c_in: Config, dom: Config, cod: Config, bias: BiasKind) -> Config:
    if bias is BiasKind.DP:
        return tuple(sorted(cod))
    return tuple(sorted((set(c_in) - set(dom)) | set(cod)))


def induce_standard(
    table: ManyBodyTable,
    bias: BiasKind,
    config_universe: Optional[Sequence[Config]] = None,
    cap: int = UNIVERSE_CAP,
) -> StandardEcm:
    if config_universe is None:
        if len(table.clips) > 16:
            raise OracleRefusal(f"|V|={len(table.clips)} gives more than {cap} configurations")
        config_universe = all_configs(len(table.clips))
    config_universe = [canon(c) for c in config_universe]
    if len(config_universe) > cap:
        raise OracleRefusal(f"universe of {len(config_universe)} configurations exceeds the cap of {cap}")
    edges = [(tuple(e.domain), tuple(e.codomain), float(h)) for e, h in zip(table.edges(), table.h)]
    summands: dict = {}
    for c_in in config_universe:
        for dom, cod, h in edges:
            if _applicable(table, dom, c_in, bias):
                summands.setdefault((c_in, _result(c_in, dom, cod, bias)), []).append(h)
    return StandardEcm({k: math.fsum(v) for k, v in sorted(summands.items())})


def exact_step_distribution(config, table: ManyBodyTable, bias: BiasKind, rule) -> dict:
    """p(C_out | config) under the many-body semantics, grouped by outcome."""
    config = canon(config)
    rel = relevant_hvalues(config, table, bias)
    p = to_probabilities([h for _, h in rel], rule)
    groups: dict = {}
    for (e, _), pk in zip(rel, p):
        groups.setdefault(apply_edge(config, e, bias), []).append(float(pk))
    return {k: math.fsum(v) for k, v in sorted(groups.items())}


def check_equivalence(table: ManyBodyTable, bias: BiasKind, config, rule=Standard()) -> float:
    """Largest probability gap between the many-body and the induced standard walk."""
    if isinstance(rule, Softmax):
        raise OracleRefusal("equivalence holds only for the standard probability rule")
    config = canon(config)
    mb = exact_step_distribution(config, table, bias, rule)
    std = induce_standard(table, bias, [config]).distribution(config)
    keys = set(mb) | set(std)
    return max(abs(mb.get(k, 0.0) - std.get(k, 0.0)) for k in keys)


# --------------------------------------------------------------------------
# random small instances


def random_instance(rng: np.random.Generator, bias: BiasKind, max_v: int = 6, keep: float = 0.7):
    """A random table with |V| <= max_v, IO within {1,2}^2 and positive h-values."""
    while True:
        n = int(rng.integers(2, max_v + 1))
        clips = ClipTable()
        if bias.layered:
            depth = int(rng.integers(2, min(3, n) + 1))
            layers = list(range(1, depth + 1)) + list(rng.integers(1, depth + 1, size=n - depth))
            for k, ell in enumerate(sorted(int(x) for x in layers)):
                clips.add(f"c{k}", layer=ell)
        else:
            for k in range(n):
                clips.add(f"c{k}")
        pairs = [(1, 1), (1, 2), (2, 1), (2, 2)]
        io = [p for p in pairs if rng.random() < 0.6] or [pairs[int(rng.integers(4))]]
        cand = []
        for i, o in io:
            for dom in combinations(range(n), i):
                for cod in combinations(range(n), o):
                    if dom == cod:
                        continue
                    if bias.layered:
                        ld = {clips[c].layer for c in dom}
                        if len(ld) != 1 or any(clips[c].layer != min(ld) + 1 for c in cod):
                            continue
                    if rng.random() < keep:
                        cand.append(Hyperedge(dom, cod))
        io_used = {e.io for e in cand}
        if not io_used:
            continue
        topo = build_topology(clips, io_used, ExplicitEdges(cand))
        table = ManyBodyTable(topo, 1.0)
        table.h[:] = rng.uniform(0.1, 5.0, size=len(table))
        table.h_init[:] = table.h
        return table


def random_config(rng: np.random.Generator, table: ManyBodyTable, bias: BiasKind) -> Config:
    n = len(table.clips)
    for _ in range(1000):
        k = int(rng.integers(1, n + 1))
        c = canon(rng.choice(n, size=k, replace=False))
        if len(table.topology.relevant(c, bias)):
            return c
    raise OracleRefusal("no configuration with relevant edges")


def run_trials(trials: int, seed: int = 0, biases: Iterable[BiasKind] = tuple(BiasKind)) -> dict:
    """Max deviation per bias over ``trials`` random instances."""
    out = {}
    for b in biases:
        rng = np.random.default_rng([seed, list(BiasKind).index(b)])
        worst = 0.0
        for _ in range(trials):
            t = random_instance(rng, b)
            worst = max(worst, check_equivalence(t, b, random_config(rng, t, b)))
        out[b.value] = worst
    return out
