"""Training history as a dynamic hypergraph: one weight function per step.

Leaves are stored as deltas against the previous leaf, with a full snapshot
every ``full_every`` leaves so a reader can seek without replaying from t=0.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .clips import ClipTable
from .table import ManyBodyTable

FULL_EVERY = 100


class OrderingError(ValueError):
    pass


class DynamicHypergraph:
    def __init__(self, clips: ClipTable, edges: list, full_every: int = FULL_EVERY, record_glow: bool = False):
        self.clips = clips
        self.edges = list(edges)  # (dom, cod) per edge, table order
        self.full_every = full_every
        self.record_glow = record_glow
        self.leaves: list[tuple[int, np.ndarray, np.ndarray, bool]] = []  # (t, idx, h, full)
        self.glows: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._current: Optional[np.ndarray] = None

    @classmethod
    def for_table(cls, table: ManyBodyTable, **kw) -> "DynamicHypergraph":
        topo = table.topology
        edges = [(topo.configs[d], topo.configs[c]) for d, c in zip(topo.dom, topo.cod)]
        return cls(table.clips, edges, **kw)

    def __len__(self) -> int:
        return len(self.leaves)

    @property
    def times(self) -> list[int]:
        return [t for t, *_ in self.leaves]

    def _append(self, t: int, h: np.ndarray, full: bool) -> None:
        if self.leaves and t <= self.leaves[-1][0]:
            raise OrderingError(f"leaf index {t} is not after {self.leaves[-1][0]}")
        if full or self._current is None:
            idx = np.arange(len(h))
            full = True
        else:
            idx = np.flatnonzero(h != self._current)
        self.leaves.append((int(t), idx, h[idx].copy(), full))
        self._current = h.copy()

    def leaf_array(self, t: int) -> np.ndarray:
        pos = self.times.index(t)
        start = max(k for k in range(pos + 1) if self.leaves[k][3])
        h = np.empty(len(self.edges))
        for _, idx, vals, _ in self.leaves[start : pos + 1]:
            h[idx] = vals
        return h

    def leaf(self, t: int) -> dict:
        return {e: float(v) for e, v in zip(self.edges, self.leaf_array(t))}

    def __eq__(self, other) -> bool:
        if not isinstance(other, DynamicHypergraph):
            return NotImplemented
        if self.edges != other.edges or self.times != other.times:
            return False
        return all(np.array_equal(self.leaf_array(t), other.leaf_array(t)) for t in self.times)


def snapshot(table: ManyBodyTable, t: int, store: DynamicHypergraph) -> None:
    if len(table) != len(store.edges):
        raise ValueError("table does not match the recorded edge set")
    full = len(store.leaves) % store.full_every == 0
    store._append(t, table.h, full)
    if store.record_glow:
        g = np.flatnonzero(table.glow)
        store.glows[int(t)] = (g, table.glow[g].copy())


def _edge_json(store: DynamicHypergraph, k: int, h: float) -> dict:
    dom, cod = store.edges[k]
    return {"io": [len(dom), len(cod)], "dom": list(dom), "cod": list(cod), "h": float(h)}


def export(store: DynamicHypergraph, path) -> None:
    """Write JSON lines, one per leaf. The first line carries the clip table."""
    if not store.leaves:
        raise ValueError("history is empty")
    path = Path(path)
    try:
        with path.open("w") as fh:
            for n, (t, idx, vals, full) in enumerate(store.leaves):
                line = {"t": t, "changed": [_edge_json(store, int(k), v) for k, v in zip(idx, vals)]}
                if full:
                    line["full"] = True
                if n == 0:
                    line["clips"] = store.clips.to_json()
                    line["full_every"] = store.full_every
                fh.write(json.dumps(line) + "\n")
        if store.record_glow:
            with path.with_suffix(".glow.jsonl").open("w") as fh:
                for t, (idx, vals) in store.glows.items():
                    fh.write(json.dumps({"t": t, "glow": [[int(k), float(v)] for k, v in zip(idx, vals)]}) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write history to {path}: {exc}") from exc


def load(path) -> DynamicHypergraph:
    path = Path(path)
    try:
        lines = [json.loads(x) for x in path.read_text().splitlines() if x.strip()]
    except OSError as exc:
        raise OSError(f"cannot read history from {path}: {exc}") from exc
    if not lines:
        raise ValueError(f"{path} holds no leaves")
    head = lines[0]
    edges = [(tuple(e["dom"]), tuple(e["cod"])) for e in head["changed"]]
    store = DynamicHypergraph(ClipTable.from_json(head["clips"]), edges, head.get("full_every", FULL_EVERY))
    index = {e: k for k, e in enumerate(edges)}
    cur = np.empty(len(edges))
    for line in lines:
        idx = np.array([index[(tuple(e["dom"]), tuple(e["cod"]))] for e in line["changed"]], dtype=np.int64)
        vals = np.array([e["h"] for e in line["changed"]], dtype=np.float64)
        cur[idx] = vals
        store.leaves.append((line["t"], idx, vals, bool(line.get("full", False))))
    store._current = cur
    return store


def to_interchange(store: DynamicHypergraph) -> dict:
    """Generic directed-hypergraph JSON: nodes, hyperedges and one weight vector per leaf."""
    return {
        "directed": True,
        "nodes": [{"id": c.id, "label": c.label, "layer": c.layer, "category": c.category} for c in store.clips.clips],
        "hyperedges": [
            {"id": k, "tail": list(d), "head": list(c), "io": [len(d), len(c)]} for k, (d, c) in enumerate(store.edges)
        ],
        "snapshots": [{"t": t, "weights": store.leaf_array(t).tolist()} for t in store.times],
    }
