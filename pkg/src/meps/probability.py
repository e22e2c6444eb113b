"""Turning h-values into probabilities."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Standard:
    """p_k = h_k / sum(h). Updates clamp h at ``h_min``."""

    h_min: float = 0.0

    def __post_init__(self):
        if self.h_min < 0:
            raise ValueError("h_min must be >= 0")


@dataclass(frozen=True)
class Softmax:
    beta: float = 1.0


ProbabilityRule = Union[Standard, Softmax]


def to_probabilities(hs, rule: ProbabilityRule) -> np.ndarray:
    h = np.asarray(hs, dtype=np.float64)
    if h.ndim != 1 or h.size == 0:
        raise ValueError("need a nonempty 1-d list of h-values")
    if isinstance(rule, Standard):
        if np.any(h <= 0) or not np.all(np.isfinite(h)):
            raise FloatingPointError("standard rule needs strictly positive finite h-values")
        return h / h.sum()
    if isinstance(rule, Softmax):
        x = rule.beta * h
        w = np.exp(x - x.max())
        return w / w.sum()
    raise TypeError(f"unknown probability rule {rule!r}")


def rule_to_json(rule: ProbabilityRule) -> dict:
    if isinstance(rule, Standard):
        return {"kind": "standard", "h_min": rule.h_min}
    return {"kind": "softmax", "beta": rule.beta}


def rule_from_json(d: dict) -> ProbabilityRule:
    kind = d.get("kind", "softmax")
    if kind == "standard":
        return Standard(float(d.get("h_min", 0.0)))
    if kind == "softmax":
        return Softmax(float(d.get("beta", 1.0)))
    raise ValueError(f"unknown probability rule kind {kind!r}")
