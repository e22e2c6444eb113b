"""Many-body h-value tables: edge enumeration, relevance and storage.

Edges are kept in one deterministic order: by (i, o), then domain, then
codomain, all lexicographic. The structural part (which edges exist) lives in
an immutable :class:`EdgeTopology` that agents share; each
:class:`ManyBodyTable` owns only its h / h_init / glow arrays.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

from .clips import ClipTable, Config, Hyperedge, canon


class ConfigurationError(ValueError):
    pass


class BiasKind(enum.Enum):
    MB1 = "MB1"
    FF = "FF"
    SF = "SF"
    DP = "DP"

    @property
    def layered(self) -> bool:
        return self is not BiasKind.MB1


@dataclass(frozen=True)
class HRecord:
    h: float
    h_init: float
    glow: float


# --------------------------------------------------------------------------
# admissibility rules


class EdgeRule:
    """Decides which (domain, codomain) pairs of sizes (i, o) are allowed.

    ``blocks`` yields (domains, codomains) lists whose full cartesian product
    is admissible, apart from domain == codomain pairs which the builder drops.
    Subclasses override it to avoid looping over pairs they would reject.
    """

    key = "custom"

    def admits(self, clips: ClipTable, dom: Config, cod: Config) -> bool:
        raise NotImplementedError

    def blocks(self, clips: ClipTable, i: int, o: int) -> Iterator[tuple[list, list]]:
        ids = range(len(clips))
        cods = list(combinations(ids, o))
        for dom in combinations(ids, i):
            ok = [c for c in cods if self.admits(clips, dom, c)]
            if ok:
                yield [dom], ok


class AllEdges(EdgeRule):
    key = "all"

    def admits(self, clips, dom, cod):
        return True

    def blocks(self, clips, i, o):
        ids = range(len(clips))
        yield list(combinations(ids, i)), list(combinations(ids, o))


class Predicate(EdgeRule):
    """Wraps a pure function ``fn(clips, dom, cod) -> bool``."""

    def __init__(self, fn: Callable[[ClipTable, Config, Config], bool], key: str = "predicate"):
        self.fn = fn
        self.key = key

    def admits(self, clips, dom, cod):
        return bool(self.fn(clips, dom, cod))


def _distinct_categories(clips: ClipTable, config: Config) -> bool:
    cats = [clips[c].category for c in config]
    return len(set(cats)) == len(cats)


class FeedForward(EdgeRule):
    """Domain in some layer l, codomain in layer l + 1.

    ``distinct_domain_categories`` additionally requires the domain clips to
    carry pairwise different categories (one value per observable).
    """

    def __init__(self, distinct_domain_categories: bool = False):
        self.distinct = distinct_domain_categories
        self.key = f"ff{int(distinct_domain_categories)}"

    def admits(self, clips, dom, cod):
        layers = {clips[c].layer for c in dom}
        if len(layers) != 1:
            return False
        (ell,) = layers
        if any(clips[c].layer != ell + 1 for c in cod):
            return False
        return not self.distinct or _distinct_categories(clips, dom)

    def blocks(self, clips, i, o):
        if not clips.layered:
            raise ConfigurationError("feed-forward edges need a layered clip table")
        for ell in range(1, clips.depth):
            doms = list(combinations(clips.layer(ell), i))
            if self.distinct:
                doms = [d for d in doms if _distinct_categories(clips, d)]
            cods = list(combinations(clips.layer(ell + 1), o))
            if doms and cods:
                yield doms, cods


class CategoryCutoffs(EdgeRule):
    """Feed-forward edges whose endpoints hold 1..cutoff clips of every category.

    ``cutoffs[layer][category]`` is the largest number of clips of that
    category a configuration in ``layer`` may contain; every listed category
    must be present.
    """

    def __init__(self, cutoffs: dict[int, dict[str, int]]):
        self.cutoffs = {int(k): dict(v) for k, v in cutoffs.items()}
        items = sorted((k, sorted(v.items())) for k, v in self.cutoffs.items())
        self.key = "cat" + json.dumps(items)
        self._cache: dict = {}

    def layer_configs(self, clips: ClipTable, ell: int) -> dict[int, list[Config]]:
        """Admissible configurations of one layer, grouped by size."""
        ck = (id(clips), ell)
        if ck in self._cache:
            return self._cache[ck]
        spec = self.cutoffs[ell]
        per_cat = []
        for cat, cut in sorted(spec.items()):
            members = [c for c in clips.layer(ell) if clips[c].category == cat]
            opts = [s for k in range(1, min(cut, len(members)) + 1) for s in combinations(members, k)]
            per_cat.append(opts)
        out: dict[int, list[Config]] = {}
        for parts in product(*per_cat):
            cfg = canon(x for p in parts for x in p)
            out.setdefault(len(cfg), []).append(cfg)
        for v in out.values():
            v.sort()
        self._cache[ck] = out
        return out

    def admits(self, clips, dom, cod):
        ells = {clips[c].layer for c in dom}
        if len(ells) != 1:
            return False
        (ell,) = ells
        if ell + 1 not in self.cutoffs or ell not in self.cutoffs:
            return False
        return dom in self.layer_configs(clips, ell).get(len(dom), ()) and cod in self.layer_configs(
            clips, ell + 1
        ).get(len(cod), ())

    def blocks(self, clips, i, o):
        for ell in sorted(self.cutoffs):
            if ell + 1 not in self.cutoffs:
                continue
            doms = self.layer_configs(clips, ell).get(i, [])
            cods = self.layer_configs(clips, ell + 1).get(o, [])
            if doms and cods:
                yield doms, cods

    def io_set(self, clips: ClipTable) -> set[tuple[int, int]]:
        io = set()
        for ell in sorted(self.cutoffs):
            if ell + 1 in self.cutoffs:
                for i in self.layer_configs(clips, ell):
                    for o in self.layer_configs(clips, ell + 1):
                        io.add((i, o))
        return io


class ExplicitEdges(EdgeRule):
    """A fixed edge list, used when loading a serialized table."""

    def __init__(self, edges: Iterable[Hyperedge]):
        self.edges = sorted(set(edges), key=Hyperedge.sort_key)
        self.key = "explicit"

    def admits(self, clips, dom, cod):
        return Hyperedge(dom, cod) in set(self.edges)

    def blocks(self, clips, i, o):
        for e in self.edges:
            if e.io == (i, o):
                yield [e.domain], [e.codomain]


# --------------------------------------------------------------------------
# topology


class EdgeTopology:
    """Immutable edge index over config ids.

    ``domain_match`` is ``"subset"`` for many-body relevance (domain contained
    in the current configuration) or ``"exact"`` for full-configuration
    relevance (domain equal to the current configuration).
    """

    def __init__(self, clips: ClipTable, io_set, configs, dom, cod, domain_match="subset"):
        if domain_match not in ("subset", "exact"):
            raise ValueError("domain_match must be 'subset' or 'exact'")
        self.clips = clips
        self.io_set = tuple(sorted(io_set))
        self.configs: list[Config] = configs
        self.config_id = {c: k for k, c in enumerate(configs)}
        self.dom = dom
        self.cod = cod
        sizes = np.array([len(c) for c in configs], dtype=np.int16)
        self.io = np.stack([sizes[dom], sizes[cod]], axis=1) if len(dom) else np.zeros((0, 2), np.int16)
        self.domain_match = domain_match
        self.in_sizes = sorted({i for i, _ in self.io_set})
        self.layered = clips.layered
        if self.layered:
            layer_of = np.array([c.layer for c in clips.clips], dtype=np.int16)
            first = np.array([layer_of[c[0]] for c in configs], dtype=np.int16)
            self.layer_of = layer_of
            self.edge_part = first[dom] if len(dom) else np.zeros(0, np.int16)
        else:
            self.layer_of = None
            self.edge_part = np.zeros(len(dom), dtype=np.int16)
        order = np.argsort(dom, kind="stable")
        uniq, starts = np.unique(dom[order], return_index=True)
        bounds = list(starts[1:]) + [len(order)]
        self.by_domain = {
            int(u): np.sort(order[s:e]).astype(np.int64) for u, s, e in zip(uniq, starts, bounds)
        }
        self._edge_index: Optional[dict] = None
        self._relevant: dict = {}

    def __len__(self) -> int:
        return len(self.dom)

    def edge(self, k: int) -> Hyperedge:
        return Hyperedge(self.configs[self.dom[k]], self.configs[self.cod[k]])

    def index_of(self, edge: Hyperedge) -> int:
        if self._edge_index is None:
            self._edge_index = {
                (int(d), int(c)): k for k, (d, c) in enumerate(zip(self.dom, self.cod))
            }
        d = self.config_id.get(edge.domain)
        c = self.config_id.get(edge.codomain)
        k = self._edge_index.get((d, c))
        if k is None:
            raise KeyError(f"edge {edge} not in table")
        return k

    def shallow_part(self, config: Config) -> Config:
        lay = self.layer_of
        top = min(lay[c] for c in config)
        return tuple(c for c in config if lay[c] == top)

    def relevant(self, config: Config, bias: BiasKind) -> np.ndarray:
        key = (config, bias)
        hit = self._relevant.get(key)
        if hit is not None:
            return hit
        if bias.layered and not self.layered:
            raise ConfigurationError(f"bias {bias.value} needs a layered clip table")
        pool = self.shallow_part(config) if bias is BiasKind.SF else config
        if self.domain_match == "exact":
            cid = self.config_id.get(config) if pool == config else None
            parts = [self.by_domain[cid]] if cid in self.by_domain else []
        else:
            parts = []
            for i in self.in_sizes:
                if i > len(pool):
                    break
                for sub in combinations(pool, i):
                    cid = self.config_id.get(sub)
                    if cid is not None and cid in self.by_domain:
                        parts.append(self.by_domain[cid])
        out = np.sort(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.int64)
        out.setflags(write=False)
        if len(self._relevant) > 200_000:
            self._relevant.clear()
        self._relevant[key] = out
        return out


def build_topology(clips: ClipTable, io_set, rule: EdgeRule, domain_match="subset") -> EdgeTopology:
    io_set = sorted({(int(i), int(o)) for i, o in io_set})
    if not io_set:
        raise ConfigurationError("io_set must be nonempty")
    for i, o in io_set:
        if i < 1 or o < 1:
            raise ConfigurationError(f"(i,o)={(i, o)} must be positive")
    configs: list[Config] = []
    cid: dict = {}

    def ids(cfgs):
        out = np.empty(len(cfgs), dtype=np.int32)
        for k, c in enumerate(cfgs):
            v = cid.get(c)
            if v is None:
                v = cid[c] = len(configs)
                configs.append(c)
            out[k] = v
        return out

    doms, cods = [], []
    for i, o in io_set:
        n_before = sum(len(d) for d in doms)
        for dl, cl in rule.blocks(clips, i, o):
            d = ids([tuple(x) for x in dl])
            c = ids([tuple(x) for x in cl])
            dd = np.repeat(d, len(c))
            cc = np.tile(c, len(d))
            keep = dd != cc
            doms.append(dd[keep])
            cods.append(cc[keep])
        if sum(len(d) for d in doms) == n_before:
            raise ConfigurationError(f"no admissible edges for (i,o)={(i, o)}")
    dom = np.concatenate(doms).astype(np.int32)
    cod = np.concatenate(cods).astype(np.int32)
    rank = np.empty(len(configs), dtype=np.int64)
    rank[sorted(range(len(configs)), key=lambda k: configs[k])] = np.arange(len(configs))
    sizes = np.array([len(c) for c in configs])
    order = np.lexsort((rank[cod], rank[dom], sizes[cod], sizes[dom]))
    dom, cod = dom[order], cod[order]
    if len(dom) > 1:
        same = (dom[1:] == dom[:-1]) & (cod[1:] == cod[:-1])
        if same.any():
            keep = np.concatenate([[True], ~same])
            dom, cod = dom[keep], cod[keep]
    return EdgeTopology(clips, io_set, configs, dom, cod, domain_match)


# --------------------------------------------------------------------------
# tables


class ManyBodyTable:
    """Trainable many-body h-values with glows over a shared topology."""

    def __init__(self, topology: EdgeTopology, h_init):
        self.topology = topology
        n = len(topology)
        self.h_init = np.broadcast_to(np.asarray(h_init, dtype=np.float64), (n,)).copy()
        self.h = self.h_init.copy()
        self.glow = np.zeros(n)
        # lazy-update bookkeeping: edges with glow != 0, edges with h != h_init
        self._glowing = np.zeros(0, dtype=np.int64)
        self._displaced = np.zeros(0, dtype=np.int64)
        self._clamped = False

    @property
    def clips(self) -> ClipTable:
        return self.topology.clips

    @property
    def io_set(self):
        return self.topology.io_set

    def __len__(self) -> int:
        return len(self.topology)

    def copy(self) -> "ManyBodyTable":
        t = ManyBodyTable.__new__(ManyBodyTable)
        t.topology = self.topology
        t.h, t.h_init, t.glow = self.h.copy(), self.h_init.copy(), self.glow.copy()
        t._glowing, t._displaced = self._glowing.copy(), self._displaced.copy()
        t._clamped = self._clamped
        return t

    def edge(self, k: int) -> Hyperedge:
        return self.topology.edge(k)

    def index_of(self, edge: Hyperedge) -> int:
        return self.topology.index_of(edge)

    def record(self, edge: Hyperedge) -> HRecord:
        k = self.index_of(edge)
        return HRecord(float(self.h[k]), float(self.h_init[k]), float(self.glow[k]))

    def edges(self, io: Optional[tuple[int, int]] = None) -> Iterator[Hyperedge]:
        for k in range(len(self)):
            if io is None or tuple(self.topology.io[k]) == tuple(io):
                yield self.edge(k)

    def by_io(self) -> dict:
        """The nested mapping (i,o) -> {Hyperedge: HRecord}."""
        out: dict = {io: {} for io in self.io_set}
        for k in range(len(self)):
            e = self.edge(k)
            out[e.io][e] = HRecord(float(self.h[k]), float(self.h_init[k]), float(self.glow[k]))
        return out

    # serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        topo = self.topology
        return {
            "io": [list(io) for io in topo.io_set],
            "domain_match": topo.domain_match,
            "clips": topo.clips.to_json(),
            "edges": [
                {
                    "io": [len(topo.configs[d]), len(topo.configs[c])],
                    "dom": list(topo.configs[d]),
                    "cod": list(topo.configs[c]),
                    "h": float(self.h[k]),
                    "h_init": float(self.h_init[k]),
                    "glow": float(self.glow[k]),
                }
                for k, (d, c) in enumerate(zip(topo.dom, topo.cod))
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data: dict, clips: Optional[ClipTable] = None) -> "ManyBodyTable":
        if clips is None:
            clips = ClipTable.from_json(data["clips"])
        edges = [Hyperedge(tuple(e["dom"]), tuple(e["cod"])) for e in data["edges"]]
        io_set = {tuple(x) for x in data["io"]}
        topo = build_topology(clips, io_set, ExplicitEdges(edges), data.get("domain_match", "subset"))
        table = cls(topo, 0.0)
        for e, d in zip(edges, data["edges"]):
            k = topo.index_of(e)
            table.h[k], table.h_init[k], table.glow[k] = d["h"], d["h_init"], d["glow"]
        table._glowing = np.flatnonzero(table.glow != 0)
        table._displaced = np.flatnonzero(table.h != table.h_init)
        return table

    @classmethod
    def loads(cls, s: str) -> "ManyBodyTable":
        return cls.from_json(json.loads(s))


def build_table(
    clips: ClipTable,
    io_set,
    edge_predicate: EdgeRule | Callable = None,
    h_init: float = 1.0,
    *,
    domain_match: str = "subset",
) -> ManyBodyTable:
    """Enumerate every admissible edge of each E^(i,o) and initialize it.

    ``edge_predicate`` is an :class:`EdgeRule` or a plain function
    ``fn(clips, dom, cod) -> bool``; ``None`` admits every edge.
    """
    if edge_predicate is None:
        rule = AllEdges()
    elif isinstance(edge_predicate, EdgeRule):
        rule = edge_predicate
    else:
        rule = Predicate(edge_predicate)
    topo = build_topology(clips, io_set, rule, domain_match)
    return ManyBodyTable(topo, h_init)


def relevant_hvalues(config, table: ManyBodyTable, bias: BiasKind = BiasKind.MB1) -> list:
    """Edges applicable to ``config`` with their h-values, in table order."""
    from .deliberation import DeadEnd

    config = canon(config)
    if not config:
        raise ValueError("configuration must be nonempty")
    idx = table.topology.relevant(config, bias)
    if len(idx) == 0:
        raise DeadEnd(config)
    return [(table.edge(k), float(table.h[k])) for k in idx]


def count_parameters(table: ManyBodyTable) -> int:
    return len(table)
