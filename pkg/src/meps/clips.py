"""Clip tables, excitation configurations and hyperedges."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

Config = tuple  # canonical ascending tuple of clip ids


def canon(ids: Iterable[int]) -> Config:
    """Return the canonical form of an excitation configuration.

    Raises ValueError on duplicate ids: an atomic clip carries at most one
    excitation.
    """
    out = tuple(sorted(int(i) for i in ids))
    for a, b in zip(out, out[1:]):
        if a == b:
            raise ValueError(f"duplicate clip id {a} in configuration")
    return out


@dataclass(frozen=True, order=True)
class Hyperedge:
    domain: Config
    codomain: Config

    def __post_init__(self):
        if not self.domain or not self.codomain:
            raise ValueError("hyperedge domain and codomain must be nonempty")
        if self.domain == self.codomain:
            raise ValueError(f"transition {self.domain} -> itself does nothing")

    @property
    def io(self) -> tuple[int, int]:
        return len(self.domain), len(self.codomain)

    def sort_key(self):
        return (len(self.domain), len(self.codomain), self.domain, self.codomain)


@dataclass(frozen=True)
class Clip:
    id: int
    label: str
    layer: Optional[int] = None
    category: Optional[str] = None


@dataclass
class ClipTable:
    """The vertex set V. Layers are 1-based when declared."""

    clips: list = field(default_factory=list)

    def __post_init__(self):
        self._by_label = {}
        for c in self.clips:
            self._register(c)

    def _register(self, clip: Clip) -> None:
        if clip.label in self._by_label:
            raise ValueError(f"duplicate clip label {clip.label!r}")
        self._by_label[clip.label] = clip.id

    def add(self, label: str, layer: Optional[int] = None, category: Optional[str] = None) -> int:
        clip = Clip(len(self.clips), label, layer, category)
        self._register(clip)
        self.clips.append(clip)
        return clip.id

    def __len__(self) -> int:
        return len(self.clips)

    def __getitem__(self, i: int) -> Clip:
        return self.clips[i]

    def id_of(self, label: str) -> int:
        return self._by_label[label]

    @property
    def layered(self) -> bool:
        if not self.clips:
            return False
        has = [c.layer is not None for c in self.clips]
        if any(has) and not all(has):
            raise ValueError("either every clip has a layer or none does")
        return all(has)

    @property
    def depth(self) -> int:
        return max(c.layer for c in self.clips) if self.layered else 1

    def layer(self, j: int) -> Config:
        return tuple(c.id for c in self.clips if c.layer == j)

    def layer_sizes(self) -> list[int]:
        return [len(self.layer(j)) for j in range(1, self.depth + 1)]

    def labels(self, config: Sequence[int]) -> list[str]:
        return [self.clips[i].label for i in config]

    def to_json(self) -> list[dict]:
        return [
            {"id": c.id, "label": c.label, "layer": c.layer, "category": c.category}
            for c in self.clips
        ]

    @classmethod
    def from_json(cls, data: list[dict]) -> "ClipTable":
        table = cls()
        for i, d in enumerate(sorted(data, key=lambda d: d["id"])):
            if d["id"] != i:
                raise ValueError("clip ids must be contiguous from 0")
            table.add(d["label"], d.get("layer"), d.get("category"))
        return table
