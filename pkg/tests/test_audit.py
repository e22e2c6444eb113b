import itertools
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from meps import BiasKind, FeedForward, build_table, count_parameters
from meps.agents import INDUCTIVE_CUTOFFS, UNRESTRICTED_CUTOFFS, maintenance_topology
from meps.audit import (
    UNBOUNDED,
    BoundOverflow,
    BoundReport,
    avalanche_length,
    avalanche_table,
    avalanche_walk,
    nl_formula,
    param_bound,
    reports_to_json,
    unrestricted_costs,
    walk_length_bound,
    walk_length_bounds,
)
from meps.table import ConfigurationError

SIZES = {"N_s": 10, "N_c": 5, "N_ca": 5, "N_f": 4}


def test_param_bound_examples():
    assert param_bound({(1, 1)}, 10) == 100
    assert param_bound({(2, 2)}, 8) == 16384


def test_param_bound_overflow():
    with pytest.raises(BoundOverflow):
        param_bound({(5, 5)}, 2**10)


@pytest.mark.parametrize("v,expected", [(1, (1, 1)), (3, (49, 7)), (10, (1046529, 1023))])
def test_unrestricted_costs(v, expected):
    assert unrestricted_costs(v) == expected


@pytest.mark.parametrize("v", [1, 2, 3, 4, 5])
def test_unrestricted_relevant_is_subset_count(v):
    nonempty = sum(1 for k in range(1, v + 1) for _ in itertools.combinations(range(v), k))
    assert unrestricted_costs(v)[1] == nonempty


def test_walk_bounds_examples():
    assert walk_length_bound(BiasKind.FF, [2, 2, 2]) == 9
    assert walk_length_bound(BiasKind.SF, [2, 2, 2]) == 4
    assert walk_length_bound(BiasKind.DP, [2, 2, 2]) == 2
    assert walk_length_bound(BiasKind.MB1, [2, 2, 2]) == UNBOUNDED
    assert walk_length_bounds(BiasKind.FF, [2, 2, 2], {(1, 1)}) == {"FF": 9, "FF o<=i": 12}


def test_avalanche_examples():
    assert len(avalanche_walk([2, 2, 2], 2, 2)) == 6 >= 2**2
    assert len(avalanche_walk([2, 2], 2, 2)) == 2 >= 2**1


@pytest.mark.parametrize("o", [2, 3])
@pytest.mark.parametrize("depth", [2, 3, 4])
def test_avalanche_length_and_validity(o, depth):
    sizes = [o] * depth
    rec = avalanche_walk(sizes, o, o)
    assert len(rec) >= o ** (depth - 1)
    assert len(rec) == avalanche_length(depth, o, o)
    assert len(rec) <= walk_length_bound(BiasKind.FF, sizes)
    table = avalanche_table(sizes, o)
    stored = set(table.edges())
    for c_in, e in zip(rec.configs, rec.edges):
        assert e in stored and set(e.domain) <= set(c_in)


def test_avalanche_preconditions():
    with pytest.raises(ConfigurationError):
        avalanche_walk([2], 2, 2)
    with pytest.raises(ConfigurationError):
        avalanche_walk([2, 1], 2, 2)


def test_nl_formula_reference_values():
    assert nl_formula(INDUCTIVE_CUTOFFS, SIZES) == 114375
    assert nl_formula(UNRESTRICTED_CUTOFFS, SIZES) == 1429968
    assert nl_formula((1, (1, 1), (1, 1)), (1, 1, 1, 1)) == 2


def test_nl_formula_rejects_oversized_cutoffs():
    with pytest.raises(ValueError):
        nl_formula((11, (1, 1), (1, 1)), SIZES)


def test_nl_formula_matches_built_table():
    assert len(maintenance_topology(INDUCTIVE_CUTOFFS, "subset")) == nl_formula(INDUCTIVE_CUTOFFS, SIZES)


@pytest.mark.slow
def test_nl_formula_matches_unrestricted_table():
    assert len(maintenance_topology(UNRESTRICTED_CUTOFFS, "exact")) == 1429968


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=2, max_size=4), st.sampled_from([{(1, 1)}, {(1, 1), (2, 1)}, {(1, 2)}]))
def test_random_ff_walks_respect_bounds(sizes, io):
    import numpy as np

    from meps import CouplingMaps, Softmax, walk
    from meps.audit import layered_clips

    clips = layered_clips(sizes)
    try:
        t = build_table(clips, io, FeedForward())
    except ConfigurationError:
        return
    rng = np.random.default_rng(len(t))
    final = set(clips.layer(len(sizes)))
    maps = CouplingMaps(lambda obs: obs, lambda c: c, trigger=lambda c: set(c) <= final)
    for bias in (BiasKind.FF, BiasKind.SF, BiasKind.DP):
        for _ in range(5):
            rec, _ = walk(clips.layer(1), t, bias, Softmax(1.0), maps, step_cap=10_000, rng=rng, check_bounds=True)
            assert len(rec) <= walk_length_bound(bias, sizes, io)


def test_bound_report_json():
    reps = [BoundReport.check("a", 3, 2), BoundReport.check("b", UNBOUNDED, 9), BoundReport.check("c", 4, 4, "exact")]
    data = json.loads(reports_to_json(reps))
    assert [d["satisfied"] for d in data] == [True, True, True]
    assert data[1]["analytic_value"] == "unbounded"
    assert not BoundReport.check("d", 2, 3).satisfied
