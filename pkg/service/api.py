"""
Detection API - Online detector streams, stored events and library checks
"""
import logging
import threading
import uuid
from typing import Dict, List, Optional

import numpy as np
from fastapi import APIRouter, Query, Request
from fastapi.responses import JSONResponse

from detection.detector import TopologyDetector
from detection.trend import DimensionMismatchError
from grid.model import SwitchStatus
from placement.observability import observability_full, observability_particular
from service.models import (
    EventOut,
    SamplePush,
    SampleResult,
    StoredEvent,
    StreamCreate,
    StreamInfo,
    StreamState,
)

logger = logging.getLogger(__name__)

router = APIRouter()


class StreamRegistry:
    """
    Detectors by stream id, each with its own lock

    Samples of one stream are processed one at a time; different streams
    share the library read-only and run concurrently.
    """

    def __init__(self):
        self._detectors: Dict[str, TopologyDetector] = {}
        self._locks: Dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def add(self, detector: TopologyDetector) -> str:
        stream_id = uuid.uuid4().hex[:12]
        with self._guard:
            self._detectors[stream_id] = detector
            self._locks[stream_id] = threading.Lock()
        return stream_id

    def get(self, stream_id: str) -> Optional[TopologyDetector]:
        return self._detectors.get(stream_id)

    def lock(self, stream_id: str) -> threading.Lock:
        return self._locks[stream_id]

    def __len__(self) -> int:
        return len(self._detectors)


def _error(status_code: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"error": message})


def _event_out(event) -> EventOut:
    return EventOut(
        sample=event.sample,
        cluster_start=event.cluster_start,
        breaker=event.breaker,
        sigma_before=str(event.sigma_before),
        sigma_after=str(event.sigma_after),
        score=event.score,
        span=event.span,
    )


@router.post("/streams", response_model=StreamInfo)
def create_stream(request: Request, body: StreamCreate):
    """
    Start a detector from a known breaker status

    Unset thresholds come from the service configuration.
    """
    state = request.app.state
    try:
        sigma0 = SwitchStatus.parse(body.sigma0)
        state.grid.require_admissible(sigma0)
        defaults = state.settings.get_detection_config(body.mode)
        overrides = {
            k: v for k, v in body.model_dump(include={"tau", "min_proj", "min_norm"}).items()
            if v is not None
        }
        config = defaults.model_validate({**defaults.model_dump(), **overrides})
        detector = TopologyDetector(state.library, config, sigma0)
    except ValueError as e:
        logger.warning(f"Rejected stream request: {e}")
        return _error(400, str(e))

    stream_id = state.streams.add(detector)
    logger.info(f"Stream {stream_id} created from {sigma0} in {config.mode} mode")
    return StreamInfo(
        stream_id=stream_id,
        placement=list(state.library.placement.buses),
        config=config.model_dump(),
    )


@router.post("/streams/{stream_id}/samples", response_model=SampleResult)
def push_sample(request: Request, stream_id: str, body: SamplePush):
    """Feed one measurement vector; returns the scores and any committed event"""
    state = request.app.state
    detector = state.streams.get(stream_id)
    if detector is None:
        return _error(404, f"Unknown stream {stream_id}")

    y = np.array([complex(v.re, v.im) for v in body.values], dtype=complex)
    with state.streams.lock(stream_id):
        try:
            event = detector.step(y)
        except DimensionMismatchError as e:
            return _error(400, str(e))
        snapshot = detector.state

        if event is not None:
            state.event_store.record(stream_id, event)

        return SampleResult(
            sample=snapshot.sample,
            norm=snapshot.last_norm,
            score=snapshot.last_score,
            raw_score=snapshot.last_raw_score,
            sigma=str(snapshot.sigma),
            event=_event_out(event) if event is not None else None,
        )


@router.get("/streams/{stream_id}", response_model=StreamState)
def get_stream(request: Request, stream_id: str):
    state = request.app.state
    detector = state.streams.get(stream_id)
    if detector is None:
        return _error(404, f"Unknown stream {stream_id}")

    with state.streams.lock(stream_id):
        snapshot = detector.state.snapshot()
    return StreamState(
        stream_id=stream_id,
        mode=snapshot.config.mode,
        sigma=str(snapshot.sigma),
        sample=snapshot.sample,
        candidate=snapshot.candidate.breaker if snapshot.candidate else None,
        cluster_length=snapshot.cluster_length,
        events=len(snapshot.events),
        placement=list(detector.library.placement.buses),
    )


@router.get("/events", response_model=List[StoredEvent])
def get_events(
    request: Request,
    limit: int = Query(100, ge=1, le=1000),
    offset: int = Query(0, ge=0),
    stream_id: Optional[str] = Query(None),
    breaker: Optional[int] = Query(None, ge=1),
):
    """
    Stored detection events, most recent first

    - **limit**: Number of records to return (1-1000)
    - **offset**: Number of records to skip
    - **stream_id**: Filter by stream
    - **breaker**: Filter by breaker number
    """
    return request.app.state.event_store.get_events(
        limit=limit, offset=offset, stream_id=stream_id, breaker=breaker
    )


@router.get("/events/stats")
def get_event_stats(request: Request):
    return {"status": "success", "stats": request.app.state.event_store.get_stats()}


@router.get("/library/observability")
def get_observability(request: Request):
    """Full and particular Gram certificates of the loaded library"""
    library = request.app.state.library
    full = observability_full(library)
    particular = observability_particular(library)
    return {
        "placement": list(library.placement.buses),
        "signatures": len(library),
        "full": full.model_dump(),
        "particular": particular.model_dump(),
    }
