"""
Models - Request/response bodies and the SQLite schema for stored events
"""
from datetime import datetime
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class StoredEvent(BaseModel):
    """
    Detection event as persisted by the event store
    """
    model_config = ConfigDict(from_attributes=True)

    id: Optional[int] = None
    timestamp: datetime
    stream_id: str
    sample: int
    cluster_start: int
    breaker: int
    sigma_before: str
    sigma_after: str
    score: float
    span: int


class StreamCreate(BaseModel):
    """
    New detector stream; thresholds default to the service configuration
    """
    sigma0: str
    mode: Optional[Literal["ideal", "noisy"]] = None
    tau: Optional[int] = Field(None, ge=1)
    min_proj: Optional[float] = Field(None, ge=0.0, le=1.0)
    min_norm: Optional[float] = Field(None, ge=0.0)


class Phasor(BaseModel):
    re: float
    im: float


class SamplePush(BaseModel):
    """One measurement vector in placement order"""
    values: List[Phasor]


class EventOut(BaseModel):
    sample: int
    cluster_start: int
    breaker: int
    sigma_before: str
    sigma_after: str
    score: float
    span: int


class SampleResult(BaseModel):
    sample: int
    norm: float
    score: float
    raw_score: float
    sigma: str
    event: Optional[EventOut] = None


class StreamState(BaseModel):
    stream_id: str
    mode: str
    sigma: str
    sample: int
    candidate: Optional[int] = None
    cluster_length: int
    events: int
    placement: List[int]


class StreamInfo(BaseModel):
    stream_id: str
    placement: List[int]
    config: Dict


# SQLite schema
EVENT_SCHEMA = """
CREATE TABLE IF NOT EXISTS detection_events (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    timestamp TEXT NOT NULL,
    stream_id TEXT NOT NULL,
    sample INTEGER NOT NULL,
    cluster_start INTEGER NOT NULL,
    breaker INTEGER NOT NULL,
    sigma_before TEXT NOT NULL,
    sigma_after TEXT NOT NULL,
    score REAL NOT NULL,
    span INTEGER NOT NULL
);

CREATE INDEX IF NOT EXISTS idx_timestamp ON detection_events(timestamp);
CREATE INDEX IF NOT EXISTS idx_stream_id ON detection_events(stream_id);
CREATE INDEX IF NOT EXISTS idx_breaker ON detection_events(breaker);
"""
