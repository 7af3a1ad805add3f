"""
Settings - YAML configuration loading and validation
"""
import yaml
import logging
from pathlib import Path
from typing import Dict, Literal, Optional

from pydantic import BaseModel, Field, ValidationError

from detection.models import (
    DEFAULT_MIN_NORM,
    DEFAULT_TAU,
    IDEAL_MIN_PROJ,
    NOISY_MIN_PROJ,
    DetectorConfig,
)
from grid.model import Grid
from grid.network import IEEE33_PATH, load_network
from simulation.constants import DEFAULT_FREQUENCY, DEFAULT_RUNS, PT_BIAS_MAX, TVE_BOUND
from simulation.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class NetworkSettings(BaseModel):
    path: str = str(IEEE33_PATH)


class LibrarySettings(BaseModel):
    placement: str = "P33"
    cache: Optional[str] = None
    workers: int = Field(1, ge=1)


class DetectionSettings(BaseModel):
    mode: Literal["ideal", "noisy"] = "noisy"
    tau: int = Field(DEFAULT_TAU, ge=1)
    min_proj: float = Field(NOISY_MIN_PROJ, ge=0.0, le=1.0)
    ideal_min_proj: float = Field(IDEAL_MIN_PROJ, ge=0.0, le=1.0)
    min_norm: float = Field(DEFAULT_MIN_NORM, ge=0.0)


class SimulationSettings(BaseModel):
    frequency: float = DEFAULT_FREQUENCY
    duration: Optional[int] = Field(None, ge=2)
    noise: bool = True
    load_variation: bool = True
    tve_bound: float = Field(TVE_BOUND, ge=0.0)
    pt_bias_max: float = Field(PT_BIAS_MAX, ge=0.0)
    simulator: Literal["linear", "nonlinear"] = "nonlinear"
    clamp_loads: bool = False
    runs: int = Field(DEFAULT_RUNS, ge=1)
    seed: int = 0
    workers: int = Field(1, ge=1)


class PlacementSettings(BaseModel):
    runs: int = Field(100, ge=1)
    tstop: Optional[int] = Field(None, ge=2)
    target_size: int = Field(7, ge=1)
    strict: bool = False


class ServiceSettings(BaseModel):
    host: str = "0.0.0.0"
    port: int = Field(8000, ge=1, le=65535)
    event_db: str = "data/events.db"


class LoggingSettings(BaseModel):
    level: str = "INFO"


SECTIONS = {
    "network": NetworkSettings,
    "library": LibrarySettings,
    "detection": DetectionSettings,
    "simulation": SimulationSettings,
    "placement": PlacementSettings,
    "service": ServiceSettings,
    "logging": LoggingSettings,
}


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
    numeric_level = getattr(logging, level.upper(), logging.INFO)
    logging.getLogger().setLevel(numeric_level)


class Settings:
    """
    Loads config.yaml and exposes validated sections
    """

    def __init__(self, config_path: str = "config.yaml"):
        self.config_path = Path(config_path)
        self.config: Dict = {}
        self.sections: Dict[str, BaseModel] = {name: model() for name, model in SECTIONS.items()}

    def load_config(self) -> Dict:
        """
        Load and validate configuration from the YAML file

        Raises:
            FileNotFoundError: missing file
            yaml.YAMLError: malformed YAML
            ValueError: unknown section or invalid value
        """
        try:
            with open(self.config_path, 'r') as f:
                self.config = yaml.safe_load(f) or {}

            self._validate_sections()

            logger.info(f"Loaded {len(self.config)} configuration sections from {self.config_path}")
            return self.config

        except FileNotFoundError:
            logger.error(f"Config file not found: {self.config_path}")
            raise
        except yaml.YAMLError as e:
            logger.error(f"Invalid YAML in config file: {e}")
            raise

    def _validate_sections(self):
        if not isinstance(self.config, dict):
            raise ValueError(f"Configuration must be a mapping, got {type(self.config).__name__}")

        unknown = set(self.config) - set(SECTIONS)
        if unknown:
            raise ValueError(f"Unknown configuration sections: {sorted(unknown)}")

        for name, model in SECTIONS.items():
            try:
                self.sections[name] = model.model_validate(self.config.get(name) or {})
            except ValidationError as e:
                raise ValueError(f"Invalid '{name}' configuration: {e}")

    def get_config(self) -> Dict:
        return self.config

    def get_network_path(self) -> Path:
        """Network file; relative paths are taken from the config file's directory"""
        path = Path(self.sections["network"].path)
        return path if path.is_absolute() else self.config_path.parent / path

    def load_grid(self) -> Grid:
        return load_network(self.get_network_path())

    def get_library_config(self) -> LibrarySettings:
        return self.sections["library"]

    def get_detection_config(self, mode: Optional[str] = None) -> DetectorConfig:
        """Detector thresholds; the ideal mode takes ideal_min_proj"""
        detection = self.sections["detection"]
        mode = mode or detection.mode
        return DetectorConfig(
            mode=mode,
            tau=detection.tau,
            min_proj=detection.ideal_min_proj if mode == "ideal" else detection.min_proj,
            min_norm=detection.min_norm,
        )

    def get_simulation_config(self) -> SimulationSettings:
        return self.sections["simulation"]

    def get_scenario_template(self, mode: Optional[str] = None) -> ScenarioConfig:
        """Monte Carlo template built from the library, detection and simulation sections"""
        simulation = self.sections["simulation"]
        return ScenarioConfig(
            label="montecarlo",
            placement=self.sections["library"].placement,
            frequency=simulation.frequency,
            duration=simulation.duration,
            detector=self.get_detection_config(mode),
            noise=simulation.noise,
            load_variation=simulation.load_variation,
            simulator=simulation.simulator,
            clamp_loads=simulation.clamp_loads,
            tve_bound=simulation.tve_bound,
            pt_bias_max=simulation.pt_bias_max,
            seed=simulation.seed,
        )

    def get_placement_config(self) -> PlacementSettings:
        return self.sections["placement"]

    def get_service_config(self) -> ServiceSettings:
        return self.sections["service"]

    def get_log_level(self) -> str:
        return self.sections["logging"].level
