"""
Detector - Online topology-change detection state machines

Two step functions share one DetectorState:

- detect_step_ideal projects the one-sample trend on the particular library
  and commits as soon as the best score reaches min_proj.
- detect_step_noisy gates the tau-sample trend on its norm and only commits
  once the same breaker has led the projection for tau consecutive samples.
"""
import copy
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional, Tuple

import numpy as np

from detection.models import DetectionEvent, DetectorConfig, ProjectionScores
from detection.trend import DimensionMismatchError, project, trend_vector
from grid.model import SwitchStatus
from signatures.library import Candidate, SignatureLibrary

logger = logging.getLogger(__name__)


@dataclass
class DetectorState:
    """
    Mutable state of one measurement stream

    candidate is set iff cluster_length > 0. The last_* fields hold the
    trace values of the most recent sample.
    """
    config: DetectorConfig
    sigma: SwitchStatus
    buffer: Deque[np.ndarray] = field(default_factory=deque)
    candidate: Optional[Candidate] = None
    cluster_length: int = 0
    cluster_start: Optional[int] = None
    cluster_peak: float = 0.0
    sample: int = -1
    events: List[DetectionEvent] = field(default_factory=list)
    last_norm: float = 0.0
    last_score: float = 0.0
    last_raw_score: float = 0.0

    def __post_init__(self):
        self.buffer = deque(self.buffer, maxlen=self.config.lag + 1)

    @property
    def warmed_up(self) -> bool:
        return len(self.buffer) == self.config.lag + 1

    def reset_cluster(self) -> None:
        self.candidate = None
        self.cluster_length = 0
        self.cluster_start = None
        self.cluster_peak = 0.0

    def snapshot(self) -> "DetectorState":
        """Independent copy for checkpointing"""
        return copy.deepcopy(self)


def _push(state: DetectorState, y: np.ndarray) -> None:
    y = np.asarray(y, dtype=complex)
    if state.buffer and state.buffer[-1].shape != y.shape:
        raise DimensionMismatchError(
            f"Sample has shape {y.shape}, stream carries {state.buffer[-1].shape}"
        )
    state.sample += 1
    state.buffer.append(y)
    state.last_norm = 0.0
    state.last_score = 0.0
    state.last_raw_score = 0.0


def _commit(
    state: DetectorState, candidate: Candidate, score: float, cluster_start: int, span: int
) -> DetectionEvent:
    event = DetectionEvent(
        sample=state.sample,
        cluster_start=cluster_start,
        breaker=candidate.breaker,
        sigma_before=state.sigma,
        sigma_after=candidate.status_after,
        score=score,
        span=span,
    )
    logger.info(
        f"Sample {state.sample}: S{event.breaker} toggled, "
        f"{event.sigma_before} -> {event.sigma_after} (score {score:.4f})"
    )
    state.sigma = candidate.status_after
    state.events.append(event)
    return event


def _scores(state: DetectorState, library: SignatureLibrary) -> Optional[ProjectionScores]:
    """Project the lag trend on the particular library of the current estimate"""
    delta = trend_vector(state.buffer[-1], state.buffer[0], state.sample, state.sample - state.config.lag)
    state.last_norm = delta.norm
    if delta.norm <= state.config.zero_norm:
        return None
    candidates = library.particular(state.sigma)
    if not candidates:
        return None
    scores = project(delta, candidates)
    state.last_raw_score = scores.value
    return scores


def detect_step_ideal(
    state: DetectorState, y: np.ndarray, library: SignatureLibrary
) -> Tuple[DetectorState, Optional[DetectionEvent]]:
    """
    One sample of the noiseless algorithm on delta(t, t-1)

    A numerically zero trend never produces an event.
    """
    _push(state, y)
    if not state.warmed_up:
        return state, None

    scores = _scores(state, library)
    if scores is None:
        return state, None
    state.last_score = scores.value

    if scores.value < state.config.min_proj:
        logger.debug(f"Sample {state.sample}: best S{scores.breaker} at {scores.value:.4f}, below threshold")
        return state, None

    candidate = next(c for c in library.particular(state.sigma) if c.breaker == scores.breaker)
    event = _commit(state, candidate, scores.value, state.sample, 1)
    return state, event


def detect_step_noisy(
    state: DetectorState, y: np.ndarray, library: SignatureLibrary
) -> Tuple[DetectorState, Optional[DetectionEvent]]:
    """
    One sample of the noise-tolerant algorithm on delta(t, t-tau)

    Trends below min_norm are zeroed and reset the cluster. A score above
    min_proj extends the cluster when it names the running candidate and
    restarts it otherwise; a cluster of length tau commits. The particular
    library stays that of the current estimate until the commit.
    """
    _push(state, y)
    if not state.warmed_up:
        return state, None

    config = state.config
    scores = _scores(state, library)
    if scores is None or state.last_norm < config.min_norm:
        state.reset_cluster()
        return state, None
    state.last_score = scores.value

    if scores.value <= config.min_proj:
        if state.cluster_length:
            logger.debug(f"Sample {state.sample}: cluster of S{state.candidate.breaker} broken")
        state.reset_cluster()
        return state, None

    if state.candidate is not None and state.candidate.breaker == scores.breaker:
        state.cluster_length += 1
        state.cluster_peak = max(state.cluster_peak, scores.value)
    else:
        state.candidate = next(
            c for c in library.particular(state.sigma) if c.breaker == scores.breaker
        )
        state.cluster_length = 1
        state.cluster_start = state.sample
        state.cluster_peak = scores.value
    logger.debug(
        f"Sample {state.sample}: S{scores.breaker} at {scores.value:.4f}, "
        f"cluster {state.cluster_length}/{config.tau}"
    )

    if state.cluster_length < config.tau:
        return state, None

    event = _commit(state, state.candidate, state.cluster_peak, state.cluster_start, state.cluster_length)
    state.reset_cluster()
    return state, event


class TopologyDetector:
    """
    Online detector bound to one signature library and one stream

    The library is shared read-only; each detector owns its state.
    """

    def __init__(self, library: SignatureLibrary, config: DetectorConfig, sigma0: SwitchStatus):
        if sigma0.r != library.r:
            raise ValueError(f"Initial status {sigma0} does not match a library with {library.r} breakers")
        if not library.particular(sigma0):
            raise ValueError(f"No admissible transition leaves status {sigma0}")
        self.library = library
        self.state = DetectorState(config=config, sigma=sigma0)
        self._step = detect_step_ideal if config.mode == "ideal" else detect_step_noisy
        logger.info(f"Detector started in {config.mode} mode from {sigma0} on {library.placement}")

    @property
    def config(self) -> DetectorConfig:
        return self.state.config

    @property
    def sigma(self) -> SwitchStatus:
        return self.state.sigma

    @property
    def events(self) -> List[DetectionEvent]:
        return self.state.events

    def step(self, y: np.ndarray) -> Optional[DetectionEvent]:
        """Feed one measurement vector, ordered as the library placement"""
        y = np.asarray(y, dtype=complex)
        if y.shape != (self.library.placement.p,):
            raise DimensionMismatchError(
                f"Sample has {y.size} entries, placement {self.library.placement.name} "
                f"has {self.library.placement.p}"
            )
        _, event = self._step(self.state, y, self.library)
        return event
