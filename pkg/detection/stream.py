"""
Stream - Drive a detector over a measurement stream and keep its traces
"""
import logging
from pathlib import Path
from typing import Iterable, List, NamedTuple, Union

import numpy as np
import pandas as pd

from detection.detector import TopologyDetector
from detection.models import DetectionEvent, DetectorConfig
from detection.trend import DimensionMismatchError
from grid.model import SwitchStatus
from signatures.library import SignatureLibrary
from signatures.placement import Placement

logger = logging.getLogger(__name__)

STREAM_COLUMNS = ["t_index", "bus_id", "real", "imag"]
EVENT_COLUMNS = [
    "sample", "cluster_start", "breaker", "sigma_before", "sigma_after", "score", "span",
]


class StreamResult(NamedTuple):
    """Events plus one trace entry per sample"""
    events: List[DetectionEvent]
    scores: np.ndarray
    norms: np.ndarray
    raw_scores: np.ndarray


class Cluster(NamedTuple):
    start: int
    length: int
    peak: float


def run_stream(
    library: SignatureLibrary,
    config: DetectorConfig,
    sigma0: SwitchStatus,
    samples: Iterable[np.ndarray],
) -> StreamResult:
    """
    Run one detector over a whole stream

    scores holds the gated score the detector acted on (zero while warming
    up or below the norm gate); raw_scores holds the best projection
    regardless of the gate.

    Raises:
        DimensionMismatchError: if a sample does not match the placement
    """
    detector = TopologyDetector(library, config, sigma0)
    scores, norms, raw = [], [], []
    for y in samples:
        detector.step(y)
        scores.append(detector.state.last_score)
        norms.append(detector.state.last_norm)
        raw.append(detector.state.last_raw_score)

    return StreamResult(
        events=list(detector.events),
        scores=np.array(scores, dtype=float),
        norms=np.array(norms, dtype=float),
        raw_scores=np.array(raw, dtype=float),
    )


def score_clusters(trace: Union[np.ndarray, List[float]], threshold: float) -> List[Cluster]:
    """Maximal runs of consecutive samples scoring strictly above threshold"""
    values = np.asarray(trace, dtype=float)
    above = values > threshold
    clusters = []
    start = None
    for t, flag in enumerate(above):
        if flag and start is None:
            start = t
        elif not flag and start is not None:
            clusters.append(Cluster(start, t - start, float(np.max(values[start:t]))))
            start = None
    if start is not None:
        clusters.append(Cluster(start, len(above) - start, float(np.max(values[start:]))))
    return clusters


def read_measurement_stream(path: Union[str, Path], placement: Placement) -> np.ndarray:
    """
    Load a long-format stream (t_index, bus_id, real, imag) as a T x p array

    Columns of the result follow the placement's bus order.

    Raises:
        DimensionMismatchError: if a sample lacks a placement bus
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        logger.error(f"Measurement stream not found: {path}")
        raise

    missing = set(STREAM_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"Stream {path} lacks columns {sorted(missing)}")

    frame = frame[frame["bus_id"].isin(placement.buses)]
    values = frame["real"].to_numpy(dtype=float) + 1j * frame["imag"].to_numpy(dtype=float)
    table = (
        pd.Series(values, index=pd.MultiIndex.from_arrays([frame["t_index"], frame["bus_id"]]))
        .unstack("bus_id")
        .sort_index()
    )
    absent = [b for b in placement.buses if b not in table.columns]
    if absent or table.isna().to_numpy().any():
        raise DimensionMismatchError(f"Stream {path} has missing readings for placement {placement}")

    samples = table[list(placement.buses)].to_numpy(dtype=complex)
    logger.info(f"Read {samples.shape[0]} samples on {placement.p} buses from {path}")
    return samples


def write_measurement_stream(
    samples: np.ndarray, placement: Placement, path: Union[str, Path]
) -> None:
    samples = np.asarray(samples, dtype=complex)
    t_index, column = np.meshgrid(np.arange(samples.shape[0]), np.arange(placement.p), indexing="ij")
    frame = pd.DataFrame({
        "t_index": t_index.ravel(),
        "bus_id": np.asarray(placement.buses)[column.ravel()],
        "real": samples.real.ravel(),
        "imag": samples.imag.ravel(),
    })
    frame.to_csv(path, index=False)


def events_frame(events: List[DetectionEvent]) -> pd.DataFrame:
    rows = [
        {
            "sample": e.sample,
            "cluster_start": e.cluster_start,
            "breaker": e.breaker,
            "sigma_before": str(e.sigma_before),
            "sigma_after": str(e.sigma_after),
            "score": e.score,
            "span": e.span,
        }
        for e in events
    ]
    return pd.DataFrame(rows, columns=EVENT_COLUMNS)


def write_events(events: List[DetectionEvent], path: Union[str, Path]) -> None:
    events_frame(events).to_csv(path, index=False)
    logger.info(f"Wrote {len(events)} events to {path}")


def write_trace(result: StreamResult, path: Union[str, Path]) -> None:
    frame = pd.DataFrame({
        "sample": np.arange(len(result.scores)),
        "norm": result.norms,
        "score": result.scores,
        "raw_score": result.raw_scores,
    })
    frame.to_csv(path, index=False)
    logger.info(f"Wrote trace of {len(frame)} samples to {path}")
