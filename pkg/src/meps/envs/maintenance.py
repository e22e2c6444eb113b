"""Computer maintenance: diagnose symptoms, hypothesize causes, pick fixes.

Codes: symptoms 1-10, fixes 11-14, components 15-19, causes 20-24.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

SYMPTOMS = {
    1: "PC overheating",
    2: "files disappearing",
    3: "visible markings on components",
    4: "unexpected shutdowns",
    5: "slow performance",
    6: "old hardware",
    7: "strange noises",
    8: "software glitches",
    9: "blue screen",
    10: "no internet",
}
FIXES = {
    11: "replace components",
    12: "install missing software",
    13: "cooldown computer",
    14: "run antivirus",
}
COMPONENTS = {15: "CPU", 16: "SSD", 17: "MoBo", 18: "PSU", 19: "OS"}
CAUSES = {20: "physical damage", 21: "software damage", 22: "malware", 23: "faulty", 24: "not connected"}

CATEGORY_CODES = {
    "symptoms": tuple(SYMPTOMS),
    "components": tuple(COMPONENTS),
    "causes": tuple(CAUSES),
    "fixes": tuple(FIXES),
}
MAX_PER_CATEGORY = 3
N_SCENARIOS = 44

HIT = 5.0
MISS = -10.0
BONUS = 15.0
SHAPING_FLOOR = -16.0
A_MAX_INDUCTIVE = 500
A_MAX_UNRESTRICTED = 1000


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    symptoms: frozenset
    components: frozenset
    causes: frozenset
    fixes: frozenset

    @classmethod
    def make(cls, symptoms, components, causes, fixes) -> "Scenario":
        return cls(frozenset(symptoms), frozenset(components), frozenset(causes), frozenset(fixes))

    def validate(self) -> None:
        for name, codes in CATEGORY_CODES.items():
            vals = getattr(self, name)
            if not vals:
                raise DataError(f"{name} must be nonempty")
            if len(vals) > MAX_PER_CATEGORY:
                raise DataError(f"{name} has more than {MAX_PER_CATEGORY} elements")
            bad = set(vals) - set(codes)
            if bad:
                raise DataError(f"{name} contains codes {sorted(bad)} outside {codes[0]}..{codes[-1]}")

    @property
    def hidden(self) -> tuple[frozenset, frozenset]:
        return self.components, self.causes

    @property
    def action(self) -> tuple[frozenset, frozenset]:
        return self.components, self.fixes

    def to_json(self) -> dict:
        return {k: sorted(getattr(self, k)) for k in CATEGORY_CODES}

    @classmethod
    def from_json(cls, d: Mapping) -> "Scenario":
        return cls.make(d["symptoms"], d["components"], d["causes"], d["fixes"])


FIG5_SCENARIO = Scenario.make({2, 3}, {17, 16}, {20, 21}, {11})


# --------------------------------------------------------------------------
# data files


def _data_path(name: str) -> Path:
    return Path(str(resources.files("meps") / "data" / name))


def load_compat(path=None) -> dict[int, frozenset]:
    path = Path(path) if path else _data_path("compat.json")
    raw = json.loads(path.read_text())
    compat = {int(k): frozenset(int(c) for c in v) for k, v in raw.items()}
    for fix, causes in compat.items():
        if fix not in FIXES:
            raise DataError(f"unknown fix code {fix} in compat table")
        if not causes <= set(CAUSES):
            raise DataError(f"fix {fix} lists unknown cause codes")
    return compat


def validate_scenarios(scenarios: Sequence[Scenario], n_expected: Optional[int] = N_SCENARIOS) -> None:
    if n_expected is not None and len(scenarios) != n_expected:
        raise DataError(f"expected {n_expected} scenarios, found {len(scenarios)}")
    for k, s in enumerate(scenarios):
        try:
            s.validate()
        except DataError as exc:
            raise DataError(f"scenario {k}: {exc}") from None


def load_scenarios(path=None, n_expected: Optional[int] = N_SCENARIOS) -> list[Scenario]:
    path = Path(path) if path else _data_path("scenarios.json")
    scenarios = [Scenario.from_json(d) for d in json.loads(path.read_text())]
    validate_scenarios(scenarios, n_expected)
    return scenarios


def dump_scenarios(scenarios: Iterable[Scenario]) -> str:
    return json.dumps([s.to_json() for s in scenarios], indent=1) + "\n"


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def justified(fix: int, causes, compat: Mapping[int, frozenset]) -> bool:
    if fix not in compat:
        raise DataError(f"unknown fix code {fix}")
    return bool(compat[fix] & set(causes))


def _has_key(symptoms: frozenset, others: Sequence[frozenset], max_key: int) -> bool:
    for k in range(1, max_key + 1):
        for sub in combinations(sorted(symptoms), k):
            if not any(set(sub) <= o for o in others):
                return True
    return False


def identifiable(scenarios: Sequence[Scenario], max_key: int = 2) -> bool:
    """Every symptom set has a subset of <= max_key symptoms found in no other set."""
    sets = [s.symptoms for s in scenarios]
    return all(_has_key(x, sets[:k] + sets[k + 1 :], max_key) for k, x in enumerate(sets))


def generate_scenarios(
    n: int = N_SCENARIOS,
    seed: int = 20240611,
    compat: Optional[Mapping[int, frozenset]] = None,
    shared_hypotheses: int = 0,
    max_key: int = 2,
) -> list[Scenario]:
    """Sample a scenario set that an agent with symptom cutoff ``max_key`` can solve.

    Rules enforced:
      * the first scenario is :data:`FIG5_SCENARIO`;
      * every fix is justified by one of the scenario's causes;
      * symptom sets are distinct pairs, so each is identified by a subset of
        at most two symptoms (see :func:`identifiable`);
      * ``shared_hypotheses`` pairs of scenarios share (components, causes)
        but need different fixes.
    """
    compat = compat if compat is not None else load_compat()
    rng = np.random.default_rng(seed)
    comps, causes_all, fixes_all = list(COMPONENTS), list(CAUSES), list(FIXES)
    out = [FIG5_SCENARIO]

    def pick(pool, kmax, weights=None):
        k = int(rng.choice(np.arange(1, kmax + 1), p=weights))
        return frozenset(int(x) for x in rng.choice(pool, size=k, replace=False))

    def fix_options(causes):
        ok = [f for f in fixes_all if justified(f, causes, compat)]
        return [frozenset(c) for k in (1, 2) for c in combinations(ok, k)]

    # Ten symptoms leave room for only 45 sets whose <=2-subsets identify
    # them; a triple would use up three of those, so percepts are pairs.
    pool = [frozenset(p) for p in combinations(SYMPTOMS, 2) if frozenset(p) != FIG5_SCENARIO.symptoms]
    order = iter(rng.permutation(len(pool)))

    def symptoms_for(existing):
        return pool[int(next(order))]

    pending_shared = shared_hypotheses
    while len(out) < n:
        if pending_shared and len(out) + 2 <= n:
            base = None
            for _ in range(1000):
                c = pick(comps, 3, [0.4, 0.4, 0.2])
                ca = pick(causes_all, 2, [0.5, 0.5])
                if len(fix_options(ca)) >= 2 and all(s.hidden != (c, ca) for s in out):
                    base = (c, ca)
                    break
            if base is None:
                raise RuntimeError("no hypothesis admits two fix sets")
            opts = fix_options(base[1])
            i, j = rng.choice(len(opts), size=2, replace=False)
            for f in (opts[i], opts[j]):
                out.append(Scenario(symptoms_for(out), base[0], base[1], f))
            pending_shared -= 1
            continue
        c = pick(comps, 3, [0.4, 0.4, 0.2])
        ca = pick(causes_all, 2, [0.5, 0.5])
        opts = fix_options(ca)
        if not opts or any(s.hidden == (c, ca) for s in out):
            continue
        f = opts[int(rng.integers(len(opts)))]
        out.append(Scenario(symptoms_for(out), c, ca, f))
    validate_scenarios(out, n)
    if not identifiable(out, max_key):
        raise RuntimeError("generated symptom sets are not identifiable")
    return out


# --------------------------------------------------------------------------
# rewards


def _as_sets(choice) -> tuple[frozenset, frozenset]:
    a, b = choice
    return frozenset(a), frozenset(b)


def _excess_fraction(chosen: tuple, target: tuple, cutoffs: tuple[int, int]) -> float:
    excess = sum(max(0, len(c) - len(t)) for c, t in zip(chosen, target))
    max_excess = sum(max(0, cut - len(t)) for cut, t in zip(cutoffs, target))
    if max_excess == 0:
        return 0.0
    return min(excess / max_excess, 1.0)


def hypothesis_reward(hidden_choice, scenario: Scenario, cutoffs: tuple[int, int] = (3, 2)) -> float:
    """+5 for the exact (components, causes) pair, -10 otherwise, minus up to 1 for excess picks."""
    chosen = _as_sets(hidden_choice)
    base = HIT if chosen == scenario.hidden else MISS
    return base - _excess_fraction(chosen, scenario.hidden, cutoffs)


def consistency_term(hidden_components, action_components) -> float:
    h, a = frozenset(hidden_components), frozenset(action_components)
    if h == a:
        return 1.0
    if a < h:
        return 0.25
    return -2.0


def causal_term(fixes, causes, scenario: Scenario, compat: Mapping[int, frozenset]) -> float:
    """+0.3/n_fix per justified fix; unjustified fixes share a penalty of at most -4/n_fix."""
    fixes = sorted(fixes)
    n_fix = len(scenario.fixes)
    if not fixes:
        return 0.0
    ok = [justified(f, causes, compat) for f in fixes]
    bad = len(ok) - sum(ok)
    return 0.3 / n_fix * sum(ok) - (4.0 / n_fix) * bad / len(fixes)


def plausibility_reward(
    hidden_choice,
    action_choice,
    scenario: Scenario,
    compat: Mapping[int, frozenset],
    cutoffs: tuple[int, int] = (3, 2),
) -> float:
    h_comp, h_causes = _as_sets(hidden_choice)
    action = _as_sets(action_choice)
    match = (HIT if action == scenario.action else MISS) - 4.0 * _excess_fraction(
        action, scenario.action, cutoffs
    )
    return match + consistency_term(h_comp, action[0]) + causal_term(action[1], h_causes, scenario, compat)


def exact_match_bonus(hidden_choice, action_choice, scenario: Scenario) -> tuple[float, float, bool]:
    try:
        hit = _as_sets(hidden_choice) == scenario.hidden and _as_sets(action_choice) == scenario.action
    except (TypeError, ValueError):
        hit = False
    return (BONUS, BONUS, True) if hit else (0.0, 0.0, False)


def shape_reward(r: float, steps: int, a_max: int) -> float:
    """max(r - theta(b) ln(b + 1) / 4, -16) with b = steps - a_max and theta(0) = 0."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    b = steps - a_max
    penalty = 0.25 * math.log(b + 1) if b > 0 else 0.0
    return max(r - penalty, SHAPING_FLOOR)


# --------------------------------------------------------------------------
# environment


@dataclass
class MaintenanceEpisode:
    scenario: Scenario
    steps_taken: int = 0
    solved: bool = False


class MaintenanceEnv:
    """One environment step is one full deliberation (hypothesis + action).

    ``step`` takes ``(hidden_choice, action_choice)`` and returns
    ``((r_hypothesis, r_plausibility), done, info)`` with shaped rewards.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        scenarios: Optional[Sequence[Scenario]] = None,
        compat: Optional[Mapping[int, frozenset]] = None,
        hidden_cutoffs: tuple[int, int] = (3, 2),
        action_cutoffs: tuple[int, int] = (3, 2),
        a_max: int = A_MAX_INDUCTIVE,
        step_cap: int = 5000,
    ):
        self.rng = rng
        self.scenarios = list(scenarios) if scenarios is not None else load_scenarios()
        self.compat = compat if compat is not None else load_compat()
        self.hidden_cutoffs = tuple(hidden_cutoffs)
        self.action_cutoffs = tuple(action_cutoffs)
        self.a_max = a_max
        self.step_cap = step_cap
        self.episode: Optional[MaintenanceEpisode] = None

    def reset(self) -> tuple[int, ...]:
        s = self.scenarios[int(self.rng.integers(len(self.scenarios)))]
        self.episode = MaintenanceEpisode(s)
        return tuple(sorted(s.symptoms))

    def rewards(self, hidden_choice, action_choice) -> tuple[float, float, bool]:
        s = self.episode.scenario
        r_h = hypothesis_reward(hidden_choice, s, self.hidden_cutoffs)
        r_p = plausibility_reward(hidden_choice, action_choice, s, self.compat, self.action_cutoffs)
        b_h, b_p, done = exact_match_bonus(hidden_choice, action_choice, s)
        return r_h + b_h, r_p + b_p, done

    def step(self, choice):
        ep = self.episode
        ep.steps_taken += 1
        if choice is None:  # the deliberation produced no action
            r_h = r_p = MISS
            solved = False
        else:
            r_h, r_p, solved = self.rewards(*choice)
        r_h = shape_reward(r_h, ep.steps_taken, self.a_max)
        r_p = shape_reward(r_p, ep.steps_taken, self.a_max)
        ep.solved = solved
        done = solved or ep.steps_taken >= self.step_cap
        return (r_h, r_p), done, {"solved": solved, "steps": ep.steps_taken}
