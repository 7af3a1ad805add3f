"""
Measurements - PMU phasor noise and potential-transformer bias
"""
from dataclasses import dataclass

import numpy as np

from grid.model import Grid
from signatures.placement import Placement
from simulation.constants import PT_BIAS_MAX, TVE_BOUND


@dataclass
class MeasurementModel:
    """
    y = I_P u + e + b

    e is circular Gaussian with per-axis SD tve * |u| / 3, drawn every
    sample. b is one complex bias per bus, drawn once per run. Noise and bias
    exist for every bus so placements sharing a bus see the same errors.
    """
    tve: float
    bias: np.ndarray
    rng: np.random.Generator

    @classmethod
    def draw(
        cls,
        grid: Grid,
        rng: np.random.Generator,
        enabled: bool = True,
        tve: float = TVE_BOUND,
        pt_bias_max: float = PT_BIAS_MAX,
    ) -> "MeasurementModel":
        if not enabled:
            return cls(tve=0.0, bias=np.zeros(grid.n, dtype=complex), rng=rng)
        magnitude = rng.uniform(0.0, pt_bias_max * grid.base_voltage, grid.n)
        phase = rng.uniform(0.0, 2 * np.pi, grid.n)
        return cls(tve=tve, bias=magnitude * np.exp(1j * phase), rng=rng)

    @property
    def enabled(self) -> bool:
        return self.tve > 0 or bool(np.any(self.bias))

    def noise(self, u: np.ndarray) -> np.ndarray:
        sd = self.tve * np.abs(u) / 3.0
        return sd * (self.rng.standard_normal(u.shape[0]) + 1j * self.rng.standard_normal(u.shape[0]))


def measure(u: np.ndarray, placement: Placement, grid: Grid, model: MeasurementModel) -> np.ndarray:
    """PMU readings at the placement buses, in placement order"""
    u = np.asarray(u, dtype=complex)
    if not model.enabled:
        return u[placement.indices(grid)]
    y = u + model.noise(u) + model.bias
    return y[placement.indices(grid)]
