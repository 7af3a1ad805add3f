"""
Trend - Trend vectors and their projection on a particular library
"""
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from detection.models import ProjectionScores
from signatures.library import Candidate


class DimensionMismatchError(ValueError):
    """Raised when measurement vectors do not line up"""
    pass


class ZeroTrendError(ValueError):
    """Raised when projecting a zero trend vector"""
    pass


@dataclass(frozen=True)
class TrendVector:
    """delta = y(t1) - y(t2)"""
    delta: np.ndarray
    t1: int
    t2: int

    @property
    def lag(self) -> int:
        return self.t1 - self.t2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.delta))


def trend_vector(y1: np.ndarray, y2: np.ndarray, t1: int = 1, t2: int = 0) -> TrendVector:
    """
    Difference of two measurement vectors

    Raises:
        DimensionMismatchError: if the vectors differ in length
    """
    y1 = np.asarray(y1, dtype=complex)
    y2 = np.asarray(y2, dtype=complex)
    if y1.shape != y2.shape:
        raise DimensionMismatchError(f"Measurement shapes differ: {y1.shape} vs {y2.shape}")
    if t1 - t2 < 1:
        raise ValueError(f"Trend lag must be at least 1, got t1={t1}, t2={t2}")
    return TrendVector(delta=y1 - y2, t1=t1, t2=t2)


def project(
    delta: Union[TrendVector, np.ndarray], candidates: Sequence[Candidate]
) -> ProjectionScores:
    """
    Scores c = |<delta/||delta||, g>| for every candidate signature

    The maximizer is the highest score; exact ties go to the lowest breaker.

    Raises:
        ZeroTrendError: if delta is zero
        DimensionMismatchError: if delta and the signatures differ in length
    """
    vector = delta.delta if isinstance(delta, TrendVector) else np.asarray(delta, dtype=complex)
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise ZeroTrendError("Cannot project a zero trend vector")
    if not candidates:
        raise ValueError("No candidate transitions to project on")

    unit = vector / norm
    scores = {}
    best = None
    for candidate in sorted(candidates, key=lambda c: c.breaker):
        if candidate.vector.shape != unit.shape:
            raise DimensionMismatchError(
                f"Trend has {unit.shape[0]} entries, signature has {candidate.vector.shape[0]}"
            )
        score = float(abs(np.vdot(unit, candidate.vector)))
        scores[candidate.breaker] = score
        if best is None or score > scores[best.breaker]:
            best = candidate

    return ProjectionScores(
        scores=scores,
        breaker=best.breaker,
        value=scores[best.breaker],
        status_after=best.status_after,
    )
