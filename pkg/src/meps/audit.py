"""Analytic parameter and walk-length bounds, and the avalanche walk."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from math import comb, prod
from typing import Iterable, Mapping, Sequence, Union

from .clips import ClipTable, Hyperedge
from .table import BiasKind, ConfigurationError, FeedForward, build_table

UNBOUNDED = math.inf
INT_LIMIT = 2**63


class BoundOverflow(OverflowError):
    pass


def _checked(value: int, what: str) -> int:
    if value > INT_LIMIT:
        raise BoundOverflow(f"{what} exceeds 2^63")
    return value


@dataclass(frozen=True)
class BoundReport:
    bound_name: str
    analytic_value: Union[int, float]
    observed_value: int
    satisfied: bool
    kind: str = "upper"

    @classmethod
    def check(cls, name: str, analytic, observed: int, kind: str = "upper") -> "BoundReport":
        if kind == "upper":
            ok = observed <= analytic
        elif kind == "lower":
            ok = observed >= analytic
        elif kind == "exact":
            ok = observed == analytic
        else:
            raise ValueError(f"unknown bound kind {kind!r}")
        return cls(name, analytic, int(observed), bool(ok), kind)

    def to_json(self) -> dict:
        d = asdict(self)
        if d["analytic_value"] == UNBOUNDED:
            d["analytic_value"] = "unbounded"
        return d


def reports_to_json(reports: Iterable[BoundReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2)


def _io_maxima(io_set) -> tuple[int, int, int]:
    io_set = list(io_set)
    if not io_set:
        raise ValueError("io_set must be nonempty")
    max_i = max(i for i, _ in io_set)
    max_o = max(o for _, o in io_set)
    max_io = max(i + o for i, o in io_set)
    return max_i, max_o, max_io


def param_bound(io_set, v_size: int) -> int:
    """max I * max O * |V|^(max IO), with max IO the largest i + o."""
    max_i, max_o, max_io = _io_maxima(io_set)
    return _checked(max_i * max_o * v_size**max_io, "parameter bound")


def relevant_bound(io_set, v_size: int, x: int) -> int:
    """Upper bound on relevant h-values for a configuration of size x >= 2.

    The constant 2 in each factor comes from the geometric-sum estimate
    sum_{k<=m} n^k <= 2 n^m for n >= 2.
    """
    if x < 2:
        raise ValueError("bound holds for configurations with at least 2 excitations")
    max_i, max_o, _ = _io_maxima(io_set)
    return min(2**v_size, 2 * v_size**max_o) * min(2**x, 2 * x**max_i)


def unrestricted_costs(v_size: int) -> tuple[int, int]:
    """(parameters, relevant h-values per step) of the unrestricted agent."""
    if v_size < 1:
        raise ValueError("v_size must be >= 1")
    if v_size > 40:
        raise BoundOverflow(f"v_size={v_size} is above the supported maximum of 40")
    n = 2**v_size - 1
    return n * n, n


def walk_length_bounds(bias: BiasKind, layer_sizes: Sequence[int], io_set) -> dict[str, Union[int, float]]:
    """Every analytic walk-length bound that applies to ``bias``."""
    sizes = [int(s) for s in layer_sizes]
    depth = len(sizes)
    if bias is BiasKind.MB1:
        return {"MB1": UNBOUNDED}
    if depth < 1:
        raise ValueError("need at least one layer")
    if bias is BiasKind.DP:
        return {"DP": depth - 1}
    if bias is BiasKind.SF:
        return {"SF": sum(sizes[:-1])}
    out = {"FF": _checked(prod(s + 1 for s in sizes[:-1]), "feed-forward bound")}
    io_set = list(io_set)
    if io_set and all(o <= i for i, o in io_set):
        out["FF o<=i"] = (depth - 1) * sum(sizes)
    return out


def walk_length_bound(bias: BiasKind, layer_sizes: Sequence[int], io_set=()) -> Union[int, float]:
    """The tightest bound; ``UNBOUNDED`` for MB1."""
    return min(walk_length_bounds(bias, layer_sizes, io_set).values())


# --------------------------------------------------------------------------
# avalanche construction


def layered_clips(layer_sizes: Sequence[int]) -> ClipTable:
    clips = ClipTable()
    for j, n in enumerate(layer_sizes, start=1):
        for k in range(n):
            clips.add(f"L{j}_{k}", layer=j)
    return clips


def avalanche_table(layer_sizes: Sequence[int], o: int, h_init: float = 1.0):
    """Feed-forward table with IO={(1,o)} holding every admissible edge."""
    return build_table(layered_clips(layer_sizes), {(1, o)}, FeedForward(), h_init)


def avalanche_walk(layer_sizes: Sequence[int], o: int, start_excitations: int):
    """Deep-to-shallow removal walk with (1, o) transitions.

    Always moves the lowest clip of the deepest non-final occupied layer onto
    the first ``o`` clips of the next layer. The result has at least
    o^(D-1) edges.
    """
    from .deliberation import Termination, WalkRecord, apply_edge

    sizes = list(layer_sizes)
    depth = len(sizes)
    if depth < 2:
        raise ConfigurationError("need at least two layers")
    if o < 2 or any(o > s for s in sizes[1:]):
        raise ConfigurationError("need 2 <= o <= |L_j| for every j >= 2")
    if not o <= start_excitations <= sizes[0]:
        raise ConfigurationError("need o <= start_excitations <= |L_1|")
    clips = layered_clips(sizes)
    layer = [clips.layer(j) for j in range(1, depth + 1)]
    config = layer[0][:start_excitations]
    rec = WalkRecord(configs=[config])
    while True:
        occupied = [j for j in range(depth - 1) if set(layer[j]) & set(config)]
        if not occupied:
            break
        j = occupied[-1]
        src = min(set(layer[j]) & set(config))
        edge = Hyperedge((src,), layer[j + 1][:o])
        config = apply_edge(config, edge, BiasKind.FF)
        rec.edges.append(edge)
        rec.configs.append(config)
    rec.terminated_by = Termination.ACTION
    return rec


def avalanche_length(depth: int, o: int, start_excitations: int) -> int:
    """Closed form of the avalanche walk length: s * sum_{k<D-1} o^k."""
    return start_excitations * sum(o**k for k in range(depth - 1))


def cycle_fixture(n_clips: int = 2, hot: float = 50.0):
    """Unlayered (1,1) table with a back-and-forth cycle between clips 0 and 1.

    Every other edge keeps h = 1, the two cycle edges get ``hot``.
    """
    clips = ClipTable()
    for k in range(n_clips):
        clips.add(f"c{k}")
    table = build_table(clips, {(1, 1)}, None, 1.0)
    for e in (Hyperedge((0,), (1,)), Hyperedge((1,), (0,))):
        table.h[table.index_of(e)] = hot
    table._displaced = (table.h != table.h_init).nonzero()[0]
    return table


# --------------------------------------------------------------------------
# maintenance parameter count


def _cut_tuple(cutoffs) -> tuple[int, int, int, int, int]:
    if isinstance(cutoffs, Mapping):
        return tuple(int(cutoffs[k]) for k in ("n_s", "n_hc", "n_c", "n_ac", "n_f"))
    n_s, (n_hc, n_c), (n_ac, n_f) = cutoffs
    return int(n_s), int(n_hc), int(n_c), int(n_ac), int(n_f)


def _size_tuple(sizes) -> tuple[int, int, int, int]:
    if isinstance(sizes, Mapping):
        return tuple(int(sizes[k]) for k in ("N_s", "N_c", "N_ca", "N_f"))
    return tuple(int(s) for s in sizes)


def nl_formula(cutoffs, sizes) -> int:
    """Trainable parameters of a {n_s, [n_hc, n_c], [n_ac, n_f]} maintenance agent.

    ``cutoffs`` is a mapping with keys n_s, n_hc, n_c, n_ac, n_f or the nested
    tuple (n_s, [n_hc, n_c], [n_ac, n_f]); ``sizes`` a mapping with keys
    N_s, N_c, N_ca, N_f or a 4-tuple in that order.
    """
    n_s, n_hc, n_c, n_ac, n_f = _cut_tuple(cutoffs)
    N_s, N_c, N_ca, N_f = _size_tuple(sizes)
    if n_s > N_s or n_hc > N_c or n_c > N_ca or n_ac > N_c or n_f > N_f:
        raise ValueError("cutoffs must not exceed the category sizes")
    percept = sum(comb(N_s, k) for k in range(1, n_s + 1))
    action = sum(comb(N_c, a) * comb(N_f, b) for a in range(1, n_ac + 1) for b in range(1, n_f + 1))
    hidden = sum(comb(N_c, a) * comb(N_ca, b) for a in range(1, n_hc + 1) for b in range(1, n_c + 1))
    return hidden * (percept + action)
