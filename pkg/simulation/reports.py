"""
Reports - CSV and JSON tables of Monte Carlo results and detector traces
"""
import json
import logging
from pathlib import Path
from typing import List, Sequence, Union

import pandas as pd

from detection.stream import StreamResult, write_trace
from simulation.montecarlo import ErrorReport

logger = logging.getLogger(__name__)

REPORT_COLUMNS = {
    "label": "label",
    "non_detections": "non detections",
    "wrong_detections": "wrong detection",
    "decision_errors": "decision errors",
    "total_errors": "total errors",
    "percent_errors": "perc. of errors",
    "runs": "runs",
    "aborted": "aborted",
}


class ReportIOError(OSError):
    """Raised when a report cannot be written or parsed"""

    def __init__(self, path: Union[str, Path], reason: str):
        self.path = Path(path)
        super().__init__(f"{self.path}: {reason}")


def _as_list(reports: Union[ErrorReport, Sequence[ErrorReport]]) -> List[ErrorReport]:
    return [reports] if isinstance(reports, ErrorReport) else list(reports)


def report_frame(reports: Union[ErrorReport, Sequence[ErrorReport]]) -> pd.DataFrame:
    """Table with the column headers of the published results"""
    rows = [r.model_dump() for r in _as_list(reports)]
    frame = pd.DataFrame(rows, columns=list(REPORT_COLUMNS))
    return frame.rename(columns=REPORT_COLUMNS)


def emit_report(reports: Union[ErrorReport, Sequence[ErrorReport]], path: Union[str, Path]) -> Path:
    """
    Write reports as CSV, or JSON when the path ends in .json

    Raises:
        ReportIOError: with the offending path
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix == ".json":
            rows = [r.model_dump() for r in _as_list(reports)]
            path.write_text(json.dumps(rows, indent=2) + "\n")
        else:
            report_frame(reports).to_csv(path, index=False, float_format="%.2f")
    except OSError as e:
        raise ReportIOError(path, f"cannot write report ({e.strerror or e})")
    logger.info(f"Wrote {len(_as_list(reports))} report rows to {path}")
    return path


def read_report(path: Union[str, Path]) -> List[ErrorReport]:
    """
    Parse a report written by emit_report

    Raises:
        ReportIOError: unreadable file or unexpected columns
    """
    path = Path(path)
    try:
        if path.suffix == ".json":
            rows = json.loads(path.read_text())
        else:
            frame = pd.read_csv(path, keep_default_na=False, dtype={"label": str})
            missing = set(REPORT_COLUMNS.values()) - set(frame.columns)
            if missing:
                raise ReportIOError(path, f"missing columns {sorted(missing)}")
            inverse = {header: field for field, header in REPORT_COLUMNS.items()}
            rows = json.loads(frame.rename(columns=inverse).to_json(orient="records"))
    except (OSError, ValueError) as e:
        if isinstance(e, ReportIOError):
            raise
        raise ReportIOError(path, f"cannot read report ({e})")
    return [ErrorReport.model_validate(row) for row in rows]


def emit_trace(result: StreamResult, path: Union[str, Path]) -> Path:
    """Plot-ready CSV of trend norms and projection scores"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        write_trace(result, path)
    except OSError as e:
        raise ReportIOError(path, f"cannot write trace ({e.strerror or e})")
    return path
