"""
Tests for the detection event store
"""
import pytest
import tempfile
import os
from pathlib import Path

from detection.models import DetectionEvent
from grid.model import SwitchStatus
from service.event_store import EventStore


@pytest.fixture
def event_store():
    """Create temporary event store for testing"""
    temp_dir = tempfile.mkdtemp()
    db_path = os.path.join(temp_dir, "test_events.db")

    store = EventStore(db_path=db_path)
    yield store

    store.close()
    try:
        os.remove(db_path)
        os.rmdir(temp_dir)
    except OSError:
        pass


def _event(sample, breaker, sigma="1,1,1,0,1"):
    before = SwitchStatus.parse(sigma)
    return DetectionEvent(
        sample=sample,
        cluster_start=sample - 4,
        breaker=breaker,
        sigma_before=before,
        sigma_after=before.toggle(breaker),
        score=0.97,
        span=5,
    )


def test_event_store_init(event_store):
    """Test event store initialization"""
    assert event_store.conn is not None
    assert Path(event_store.db_path).exists()


def test_record_event(event_store):
    """Test persisting a committed breaker action"""
    row_id = event_store.record("abc123", _event(52, 3))
    assert row_id is not None

    events = event_store.get_events(limit=10)

    assert len(events) == 1
    assert events[0].stream_id == "abc123"
    assert events[0].sample == 52
    assert events[0].cluster_start == 48
    assert events[0].breaker == 3
    assert events[0].sigma_before == "(1,1,1,0,1)"
    assert events[0].sigma_after == "(1,1,0,0,1)"
    assert events[0].score == 0.97
    assert events[0].span == 5


def test_get_events_filtering(event_store):
    """Test filtering stored events"""
    event_store.record("first", _event(10, 1))
    event_store.record("first", _event(30, 3))
    event_store.record("second", _event(20, 3))

    assert len(event_store.get_events(stream_id="first")) == 2
    assert len(event_store.get_events(breaker=3)) == 2
    assert len(event_store.get_events(stream_id="second", breaker=1)) == 0


def test_get_events_order_and_pagination(event_store):
    """Test most-recent-first ordering with limit and offset"""
    for sample in range(10, 15):
        event_store.record("s", _event(sample, 2))

    first_page = event_store.get_events(limit=2)
    second_page = event_store.get_events(limit=2, offset=2)

    assert [e.sample for e in first_page] == [14, 13]
    assert [e.sample for e in second_page] == [12, 11]


def test_get_stats(event_store):
    """Test event statistics"""
    event_store.record("a", _event(10, 1))
    event_store.record("a", _event(20, 3))
    event_store.record("b", _event(20, 3))

    stats = event_store.get_stats()

    assert stats["total_events"] == 3
    assert stats["streams"] == 2
    assert stats["per_breaker"] == {"S1": 1, "S3": 2}


def test_empty_stats(event_store):
    assert event_store.get_stats() == {"total_events": 0, "streams": 0, "per_breaker": {}}
