"""
Models - Detector configuration, projection scores and detection events
"""
from typing import Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from grid.model import SwitchStatus

IDEAL_MIN_PROJ = 0.98
NOISY_MIN_PROJ = 0.94
# Norm gate in per-unit of the measurements: 0.05 kV on the 12.66 kV base.
DEFAULT_MIN_NORM = 0.004
DEFAULT_TAU = 5


class DetectorConfig(BaseModel):
    """
    Thresholds and lag of one detector

    min_proj defaults by mode: 0.98 for the ideal algorithm, 0.94 for the
    noise-tolerant one. min_norm is in the per-unit scale of the measurements.
    """
    model_config = ConfigDict(frozen=True)

    mode: Literal["ideal", "noisy"] = "noisy"
    tau: int = Field(DEFAULT_TAU, ge=1)
    min_proj: Optional[float] = Field(None, ge=0.0, le=1.0)
    min_norm: float = Field(DEFAULT_MIN_NORM, ge=0.0)
    base_voltage: float = Field(1.0, gt=0.0)

    @model_validator(mode="before")
    @classmethod
    def _default_min_proj(cls, data):
        if isinstance(data, dict) and data.get("min_proj") is None:
            data = dict(data)
            data["min_proj"] = IDEAL_MIN_PROJ if data.get("mode") == "ideal" else NOISY_MIN_PROJ
        return data

    @model_validator(mode="after")
    def _check_tau(self) -> "DetectorConfig":
        if self.mode == "noisy" and self.tau < 2:
            raise ValueError(f"Noisy detection needs tau >= 2 to confirm clusters, got {self.tau}")
        return self

    @property
    def lag(self) -> int:
        """Sample distance of the trend vector"""
        return 1 if self.mode == "ideal" else self.tau

    @property
    def zero_norm(self) -> float:
        """Trend norms at or below this are numerically zero"""
        return 1e-12 * self.base_voltage


class ProjectionScores(BaseModel):
    """Projection of one trend vector on a particular library"""
    scores: Dict[int, float]
    breaker: int
    value: float
    status_after: SwitchStatus


class DetectionEvent(BaseModel):
    """
    A committed breaker action

    sample is the commit sample; cluster_start is the first sample of the
    confirming cluster (equal to sample for the ideal algorithm).
    """
    sample: int
    cluster_start: int
    breaker: int
    sigma_before: SwitchStatus
    sigma_after: SwitchStatus
    score: float
    span: int = 1

    @model_validator(mode="after")
    def _check_toggle(self) -> "DetectionEvent":
        if self.sigma_after != self.sigma_before.toggle(self.breaker):
            raise ValueError(
                f"Event status {self.sigma_after} is not {self.sigma_before} with S{self.breaker} toggled"
            )
        return self
