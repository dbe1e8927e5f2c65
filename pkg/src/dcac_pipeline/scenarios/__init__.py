"""Load perturbation scenarios."""

from .generator import (
    RNG_ALGORITHM,
    Scenario,
    ScenarioConfig,
    draw_multipliers,
    generate_batch,
    generate_scenario,
    scenario_rng,
)

__all__ = [
    "RNG_ALGORITHM",
    "Scenario",
    "ScenarioConfig",
    "draw_multipliers",
    "generate_batch",
    "generate_scenario",
    "scenario_rng",
]
