from .deception import DeceptionEnv, DeceptionState, deception_reward
from .distraction import DistractionEnv, DistractionState, distraction_reward
from .maintenance import (
    MaintenanceEnv,
    MaintenanceEpisode,
    Scenario,
    exact_match_bonus,
    hypothesis_reward,
    load_compat,
    load_scenarios,
    plausibility_reward,
    shape_reward,
)

__all__ = [
    "DeceptionEnv",
    "DeceptionState",
    "deception_reward",
    "DistractionEnv",
    "DistractionState",
    "distraction_reward",
    "MaintenanceEnv",
    "MaintenanceEpisode",
    "Scenario",
    "exact_match_bonus",
    "hypothesis_reward",
    "load_compat",
    "load_scenarios",
    "plausibility_reward",
    "shape_reward",
]
