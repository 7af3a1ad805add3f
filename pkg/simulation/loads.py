"""
Loads - Random-walk load dynamics at constant power factor
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from grid.model import Grid
from simulation.constants import relative_load_sd


@dataclass
class LoadModel:
    """
    p(t+1) = p(t) + n(t), q = gamma * p

    p0, gamma and sigma are per bus in the grid's per-unit power; the slack
    entry has sigma = 0.
    """
    p0: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    rng: np.random.Generator
    clamp: bool = False

    @classmethod
    def from_grid(
        cls,
        grid: Grid,
        frequency: float,
        rng: np.random.Generator,
        enabled: bool = True,
        clamp: bool = False,
    ) -> "LoadModel":
        """Each bus follows the household statistics scaled to its nominal load"""
        p0, q0 = grid.nominal_power()
        gamma = np.divide(q0, p0, out=np.zeros_like(p0), where=p0 != 0)
        sigma = relative_load_sd(frequency) * np.abs(p0) if enabled else np.zeros_like(p0)
        return cls(p0=p0.copy(), gamma=gamma, sigma=sigma, rng=rng, clamp=clamp)

    @property
    def q0(self) -> np.ndarray:
        return self.gamma * self.p0


def load_step(p: np.ndarray, model: LoadModel) -> Tuple[np.ndarray, np.ndarray]:
    """Advance consumption one sample; negative loads survive unless clamped"""
    p_next = p + model.sigma * model.rng.standard_normal(p.shape[0])
    if model.clamp:
        p_next = np.maximum(p_next, 0.0)
    return p_next, model.gamma * p_next
