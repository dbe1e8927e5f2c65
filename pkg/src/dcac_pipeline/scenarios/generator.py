"""Seeded load perturbation scenarios."""

from __future__ import annotations

import hashlib
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..grid.model import NetworkCase

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.random.PCG64(SeedSequence(seed, spawn_key=(index,)))"


class ScenarioConfig(BaseModel):
    """Gaussian load multiplier and power factor ranges for a batch."""

    model_config = ConfigDict(frozen=True)

    sigma: float = Field(default=0.05, ge=0, description="Relative std of the load multiplier")
    pf_min: float = Field(default=0.95, gt=0, le=1)
    pf_max: float = Field(default=1.0, gt=0, le=1)
    n_samples: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    nominal: bool = Field(
        default=False,
        description="Keep the case demand unchanged in every scenario",
    )

    @model_validator(mode="after")
    def _check_pf_range(self) -> ScenarioConfig:
        if self.pf_min > self.pf_max:
            raise ValueError(f"pf_min {self.pf_min} exceeds pf_max {self.pf_max}")
        if self.nominal and self.sigma > 0:
            raise ValueError(f"nominal scenarios need sigma=0, got {self.sigma}")
        return self


class Scenario(BaseModel):
    """One perturbed load instance. Loads are per unit and cover every bus."""

    model_config = ConfigDict(frozen=True)

    index: int
    perturbed_buses: tuple[int, ...]
    multipliers: tuple[float, ...]
    power_factors: tuple[float, ...]
    p_d: tuple[float, ...]
    q_d: tuple[float, ...]

    @property
    def pf_digest(self) -> str:
        """SHA-256 of the drawn power factors."""
        return hashlib.sha256(np.asarray(self.power_factors, dtype="<f8").tobytes()).hexdigest()

    def apply(self, case: NetworkCase) -> NetworkCase:
        return case.with_loads(np.asarray(self.p_d), np.asarray(self.q_d))


def scenario_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for scenario ``index`` of a seeded batch."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(sequence))


def draw_multipliers(rng: np.random.Generator, sigma: float, size: int) -> np.ndarray:
    """Draw ``N(1, sigma^2)`` multipliers, redrawing any that are not positive."""
    xi = rng.normal(1.0, sigma, size)
    bad = xi <= 0
    while bad.any():
        xi[bad] = rng.normal(1.0, sigma, int(bad.sum()))
        bad = xi <= 0
    return xi


def generate_scenario(case: NetworkCase, config: ScenarioConfig, index: int) -> Scenario:
    """
    Perturb every positive demand of ``case``.

    Reactive demand follows from the drawn power factor and keeps the sign of
    the original reactive demand, zero counting as positive. Nominal scenarios
    keep the case demand and report its power factors.
    """
    arr = case.arrays
    loads = np.flatnonzero(arr.pd > 0)
    if config.nominal:
        return Scenario(
            index=index,
            perturbed_buses=tuple(int(b) for b in arr.bus_ids[loads]),
            multipliers=(1.0,) * loads.size,
            power_factors=tuple(arr.pd[loads] / np.hypot(arr.pd[loads], arr.qd[loads])),
            p_d=tuple(arr.pd),
            q_d=tuple(arr.qd),
        )

    rng = scenario_rng(config.seed, index)
    xi = draw_multipliers(rng, config.sigma, loads.size)
    pf = rng.uniform(config.pf_min, config.pf_max, loads.size)

    p_d, q_d = arr.pd.copy(), arr.qd.copy()
    p_d[loads] = arr.pd[loads] * xi
    sign = np.where(arr.qd[loads] < 0, -1.0, 1.0)
    q_d[loads] = sign * p_d[loads] * np.tan(np.arccos(pf))

    return Scenario(
        index=index,
        perturbed_buses=tuple(int(b) for b in arr.bus_ids[loads]),
        multipliers=tuple(xi),
        power_factors=tuple(pf),
        p_d=tuple(p_d),
        q_d=tuple(q_d),
    )


def generate_batch(case: NetworkCase, config: ScenarioConfig) -> list[Scenario]:
    """Scenarios ``0 .. n_samples - 1``, each reproducible on its own."""
    batch = [generate_scenario(case, config, k) for k in range(config.n_samples)]
    logger.info(
        "Generated %d %s scenarios for %s (sigma %.3f, pf [%.3f, %.3f], seed %d)",
        len(batch),
        "nominal" if config.nominal else "perturbed",
        case.name,
        config.sigma,
        config.pf_min,
        config.pf_max,
        config.seed,
    )
    return batch
