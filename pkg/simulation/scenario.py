"""
Scenario - One simulated measurement window with scheduled breaker actions

Each sample advances the loads, solves the feeder under the true status,
measures at the placement and feeds the detector. The run is then judged
against the schedule.
"""
import json
import logging
from pathlib import Path
from typing import List, Literal, NamedTuple, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from detection.models import DetectionEvent, DetectorConfig
from detection.stream import StreamResult, run_stream
from grid.matrices import TopologyCache, approx_voltage
from grid.model import Grid, SwitchStatus
from grid.power_flow import injections, solve_with_inverse
from signatures.library import SignatureKey, SignatureLibrary, build_library
from signatures.placement import load_placement
from simulation.constants import DEFAULT_FREQUENCY, PT_BIAS_MAX, TVE_BOUND, window_samples
from simulation.loads import LoadModel, load_step
from simulation.measurements import MeasurementModel, measure

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.SeedSequence]


class ScenarioError(ValueError):
    """Raised for scenarios that cannot be simulated as written"""
    pass


class Transition(BaseModel):
    sample: int = Field(ge=0)
    breaker: int = Field(ge=1)


class ScenarioConfig(BaseModel):
    """
    Simulation settings for one run; loaded from scenario JSON files

    sigma1 accepts "1,1,1,0,1", "11101" or a list of bits. Without an explicit
    duration the run covers a 1000 s window at the sampling frequency.
    """
    label: str = "scenario"
    placement: str = "P33"
    frequency: float = Field(DEFAULT_FREQUENCY, gt=0.0)
    duration: Optional[int] = Field(None, ge=2)
    sigma1: Optional[SwitchStatus] = None
    transitions: List[Transition] = []
    detector: DetectorConfig = DetectorConfig()
    noise: bool = True
    load_variation: bool = True
    simulator: Literal["linear", "nonlinear"] = "nonlinear"
    clamp_loads: bool = False
    tve_bound: float = Field(TVE_BOUND, ge=0.0)
    pt_bias_max: float = Field(PT_BIAS_MAX, ge=0.0)
    seed: Optional[int] = None

    @field_validator("sigma1", mode="before")
    @classmethod
    def _parse_sigma(cls, value):
        if isinstance(value, str):
            return SwitchStatus.parse(value)
        if isinstance(value, (list, tuple)):
            return SwitchStatus(bits=tuple(value))
        return value

    @property
    def n_samples(self) -> int:
        return self.duration if self.duration is not None else window_samples(self.frequency)

    @model_validator(mode="after")
    def _check_schedule(self) -> "ScenarioConfig":
        lag = self.detector.lag
        previous = None
        for transition in self.transitions:
            if transition.sample < lag or transition.sample >= self.n_samples:
                raise ValueError(
                    f"Transition at sample {transition.sample} outside [{lag}, {self.n_samples})"
                )
            if previous is not None and transition.sample - previous < lag:
                raise ValueError(
                    f"Transitions at {previous} and {transition.sample} are closer than {lag} samples"
                )
            previous = transition.sample
        return self


class Verdict(BaseModel):
    """Per-run classification; a wrong detection is also a decision error"""
    non_detection: bool = False
    wrong_detection: bool = False
    decision_error: bool = False

    @property
    def ok(self) -> bool:
        return not (self.non_detection or self.wrong_detection or self.decision_error)


class ScenarioResult(NamedTuple):
    config: ScenarioConfig
    events: List[DetectionEvent]
    stream: StreamResult
    samples: np.ndarray
    truth: List[SwitchStatus]
    verdict: Verdict


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """
    Raises:
        FileNotFoundError: missing file
        ScenarioError: malformed JSON or invalid settings
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        logger.error(f"Scenario file not found: {path}")
        raise
    except json.JSONDecodeError as e:
        raise ScenarioError(f"Scenario {path} is not valid JSON: {e}")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(f"Invalid scenario {path}: {e}")


def child_seeds(seed: SeedLike, count: int) -> List[np.random.SeedSequence]:
    """Independent child sequences without mutating the parent"""
    parent = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [
        np.random.SeedSequence(parent.entropy, spawn_key=parent.spawn_key + (i,))
        for i in range(count)
    ]


def status_timeline(grid: Grid, cfg: ScenarioConfig) -> List[SwitchStatus]:
    """
    True status at every sample

    Raises:
        ScenarioError: unset or disconnected initial status, or a
            transition that disconnects the feeder
    """
    if cfg.sigma1 is None:
        raise ScenarioError(f"Scenario {cfg.label} has no initial status")
    if cfg.sigma1.r != grid.r:
        raise ScenarioError(f"Initial status {cfg.sigma1} does not fit {grid.r} breakers")
    if not grid.is_admissible(cfg.sigma1):
        raise ScenarioError(f"Initial status {cfg.sigma1} disconnects the feeder")

    changes = {t.sample: t.breaker for t in cfg.transitions}
    status = cfg.sigma1
    timeline = []
    for t in range(cfg.n_samples):
        if t in changes:
            if changes[t] > grid.r:
                raise ScenarioError(f"Transition at sample {t} names unknown breaker S{changes[t]}")
            status = status.toggle(changes[t])
            if not grid.is_admissible(status):
                raise ScenarioError(f"Toggling S{changes[t]} at sample {t} disconnects the feeder")
        timeline.append(status)
    return timeline


def judge(
    events: List[DetectionEvent],
    transitions: List[Transition],
    truth: List[SwitchStatus],
    lag: int,
) -> Verdict:
    """
    A transition at t_k needs an event in [t_k, t_k + lag]; an event needs
    a transition in [sample - lag, sample] and must land on the true status.
    """
    non_detection = any(
        not any(t.sample <= e.sample <= t.sample + lag for e in events) for t in transitions
    )
    wrong_detection = any(
        not any(e.sample - lag <= t.sample <= e.sample for t in transitions) for e in events
    )
    wrong_status = any(e.sigma_after != truth[e.sample] for e in events)
    return Verdict(
        non_detection=non_detection,
        wrong_detection=wrong_detection,
        decision_error=wrong_detection or wrong_status,
    )


def simulate_measurements(
    grid: Grid,
    cfg: ScenarioConfig,
    library: SignatureLibrary,
    truth: List[SwitchStatus],
    seed: SeedLike,
    cache: Optional[TopologyCache] = None,
) -> np.ndarray:
    """
    T x p measurement matrix for a status timeline

    Raises:
        PowerFlowDivergenceError: from the nonlinear simulator
    """
    load_seed, meter_seed = child_seeds(seed, 2)
    loads = LoadModel.from_grid(
        grid,
        cfg.frequency,
        np.random.default_rng(load_seed),
        enabled=cfg.load_variation,
        clamp=cfg.clamp_loads,
    )
    meter = MeasurementModel.draw(
        grid,
        np.random.default_rng(meter_seed),
        enabled=cfg.noise,
        tve=cfg.tve_bound,
        pt_bias_max=cfg.pt_bias_max,
    )
    cache = cache or TopologyCache(grid)
    U_N = grid.base_voltage

    p, q = loads.p0, loads.q0
    samples = np.empty((cfg.n_samples, library.placement.p), dtype=complex)
    for t, status in enumerate(truth):
        if t > 0:
            p, q = load_step(p, loads)
        X = cache.inverse(status)
        s = injections(p, q)
        if cfg.simulator == "linear":
            u = approx_voltage(X, s, U_N)
        else:
            u = solve_with_inverse(X, s, U_N)
        samples[t] = measure(u, library.placement, grid, meter)
    return samples


def run_scenario(
    grid: Grid,
    cfg: ScenarioConfig,
    library: Optional[SignatureLibrary] = None,
    seed: SeedLike = None,
    cache: Optional[TopologyCache] = None,
) -> ScenarioResult:
    """
    Simulate one scenario and judge the detector's events

    Args:
        grid: feeder model
        cfg: scenario settings
        library: prebuilt library on the scenario placement (built if omitted)
        seed: overrides cfg.seed; a SeedSequence is used as is
        cache: shared pseudo-inverse cache

    Raises:
        ScenarioError: invalid status schedule
        PowerFlowDivergenceError: nonlinear simulator failed to converge
    """
    cache = cache or TopologyCache(grid)
    if library is None:
        library = build_library(grid, load_placement(cfg.placement, grid))
    truth = status_timeline(grid, cfg)
    seed = cfg.seed if seed is None else seed

    samples = simulate_measurements(grid, cfg, library, truth, seed, cache)
    stream = run_stream(library, cfg.detector, truth[0], samples)
    verdict = judge(stream.events, cfg.transitions, truth, cfg.detector.lag)
    logger.debug(f"Scenario {cfg.label}: {len(stream.events)} events, verdict {verdict}")
    return ScenarioResult(
        config=cfg,
        events=stream.events,
        stream=stream,
        samples=samples,
        truth=truth,
        verdict=verdict,
    )


def random_transition(
    grid: Grid, library: SignatureLibrary, cfg: ScenarioConfig, rng: np.random.Generator
) -> ScenarioConfig:
    """
    Template copy with a random admissible status, breaker and action time

    The status is uniform over connected statuses with at least one
    admissible toggle; the action time is uniform after warm-up, leaving
    room for the detection window.
    """
    statuses = [s for s in grid.admissible_statuses() if library.particular(s)]
    if not statuses:
        raise ScenarioError(f"No admissible breaker action exists on {grid.name}")
    sigma1 = statuses[int(rng.integers(len(statuses)))]
    breakers = [c.breaker for c in library.particular(sigma1)]
    breaker = breakers[int(rng.integers(len(breakers)))]

    lag = cfg.detector.lag
    n = cfg.n_samples
    if n - lag <= lag + 1:
        raise ScenarioError(f"Duration {n} leaves no room for lag {lag}")
    sample = int(rng.integers(lag + 1, n - lag))
    logger.debug(f"Random action {SignatureKey.of(sigma1, breaker)} at sample {sample}")
    return cfg.model_copy(
        update={"sigma1": sigma1, "transitions": [Transition(sample=sample, breaker=breaker)]}
    )
