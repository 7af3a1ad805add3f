"""
Event Store - SQLite-based storage of committed detection events
"""
import sqlite3
import logging
from datetime import datetime, timezone
from typing import List, Optional
from pathlib import Path

from detection.models import DetectionEvent
from service.models import EVENT_SCHEMA, StoredEvent

logger = logging.getLogger(__name__)


class EventStore:
    """
    SQLite-backed log of detection events, one row per committed breaker action
    """

    def __init__(self, db_path: str = "data/events.db"):
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.conn = None
        self._init_db()

    def _init_db(self):
        """Initialize database and create tables"""
        try:
            self.conn = sqlite3.connect(str(self.db_path), check_same_thread=False)
            self.conn.execute("PRAGMA journal_mode=WAL")
            self.conn.executescript(EVENT_SCHEMA)
            self.conn.commit()
            logger.info(f"Event database initialized at {self.db_path}")
        except sqlite3.Error as e:
            logger.error(f"Failed to initialize event database: {e}")
            raise

    def record(self, stream_id: str, event: DetectionEvent) -> Optional[int]:
        """Persist one event; returns its row id"""
        try:
            cursor = self.conn.execute(
                """
                INSERT INTO detection_events
                (timestamp, stream_id, sample, cluster_start, breaker, sigma_before, sigma_after, score, span)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
                """,
                (
                    datetime.now(timezone.utc).isoformat(),
                    stream_id,
                    event.sample,
                    event.cluster_start,
                    event.breaker,
                    str(event.sigma_before),
                    str(event.sigma_after),
                    event.score,
                    event.span,
                ),
            )
            self.conn.commit()
            return cursor.lastrowid
        except sqlite3.Error as e:
            logger.error(f"Failed to store event of stream {stream_id}: {e}")
            return None

    def get_events(
        self,
        limit: int = 100,
        offset: int = 0,
        stream_id: Optional[str] = None,
        breaker: Optional[int] = None,
    ) -> List[StoredEvent]:
        """Most recent events first, optionally filtered"""
        try:
            query = "SELECT * FROM detection_events WHERE 1=1"
            params = []

            if stream_id:
                query += " AND stream_id = ?"
                params.append(stream_id)

            if breaker is not None:
                query += " AND breaker = ?"
                params.append(breaker)

            query += " ORDER BY id DESC LIMIT ? OFFSET ?"
            params.extend([limit, offset])

            rows = self.conn.execute(query, params).fetchall()
            return [
                StoredEvent(
                    id=row[0],
                    timestamp=datetime.fromisoformat(row[1]),
                    stream_id=row[2],
                    sample=row[3],
                    cluster_start=row[4],
                    breaker=row[5],
                    sigma_before=row[6],
                    sigma_after=row[7],
                    score=row[8],
                    span=row[9],
                )
                for row in rows
            ]
        except sqlite3.Error as e:
            logger.error(f"Failed to fetch events: {e}")
            return []

    def get_stats(self) -> dict:
        """Event counts overall, per stream and per breaker"""
        try:
            total, streams = self.conn.execute(
                "SELECT COUNT(*), COUNT(DISTINCT stream_id) FROM detection_events"
            ).fetchone()
            per_breaker = self.conn.execute(
                "SELECT breaker, COUNT(*) FROM detection_events GROUP BY breaker ORDER BY breaker"
            ).fetchall()
            return {
                "total_events": total,
                "streams": streams,
                "per_breaker": {f"S{b}": count for b, count in per_breaker},
            }
        except sqlite3.Error as e:
            logger.error(f"Failed to get event stats: {e}")
            return {"total_events": 0, "streams": 0, "per_breaker": {}}

    def close(self):
        """Close database connection"""
        if self.conn:
            self.conn.close()
            logger.info("Event database connection closed")
