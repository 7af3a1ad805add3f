"""
Network - Feeder data file parser with per-unit conversion

File layout:

    # base_kv = 12.66
    # base_mva = 10
    [buses]
    bus_id,P_kW,Q_kvar,is_slack
    ...
    [lines]
    from_bus,to_bus,R_ohm,X_ohm,switch_id
    ...
"""
import io
import logging
import re
from pathlib import Path
from typing import Dict, Union

import pandas as pd

from grid.model import Bus, Grid, Line

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
IEEE33_PATH = DATA_DIR / "ieee33.txt"

BUS_COLUMNS = ["bus_id", "P_kW", "Q_kvar", "is_slack"]
LINE_COLUMNS = ["from_bus", "to_bus", "R_ohm", "X_ohm", "switch_id"]

_HEADER = re.compile(r"^#\s*(\w+)\s*=\s*([-+0-9.eE]+)\s*$")


class NetworkFormatError(ValueError):
    """Raised when a network file is malformed"""
    pass


def _split_sections(text: str) -> Dict[str, str]:
    sections: Dict[str, list] = {"header": []}
    current = "header"
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections[current] = []
            continue
        sections[current].append(line)
    return {name: "\n".join(lines) for name, lines in sections.items()}


def parse_network(text: str, name: str = "feeder") -> Grid:
    """
    Parse network file contents into a per-unit Grid

    Raises:
        NetworkFormatError: missing sections, columns or header values
    """
    sections = _split_sections(text)

    header = {}
    for line in sections["header"].splitlines():
        match = _HEADER.match(line)
        if match:
            header[match.group(1).lower()] = float(match.group(2))
    if "base_kv" not in header or "base_mva" not in header:
        raise NetworkFormatError("Network header must define base_kv and base_mva")
    base_kv, base_mva = header["base_kv"], header["base_mva"]
    if base_kv <= 0 or base_mva <= 0:
        raise NetworkFormatError(f"Invalid bases: {base_kv} kV, {base_mva} MVA")

    for section in ("buses", "lines"):
        if section not in sections:
            raise NetworkFormatError(f"Missing [{section}] section")

    try:
        buses = pd.read_csv(io.StringIO(sections["buses"]), comment="#")
        lines = pd.read_csv(io.StringIO(sections["lines"]), comment="#")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise NetworkFormatError(f"Unreadable network table: {e}")

    missing = [c for c in BUS_COLUMNS if c not in buses.columns]
    missing += [c for c in LINE_COLUMNS[:4] if c not in lines.columns]
    if missing:
        raise NetworkFormatError(f"Missing columns: {', '.join(missing)}")

    z_base = base_kv ** 2 / base_mva
    s_base_kw = base_mva * 1000.0

    buses = buses.sort_values("is_slack", ascending=False, kind="stable")
    try:
        bus_models = tuple(
            Bus(
                id=int(row.bus_id),
                p=float(row.P_kW) / s_base_kw,
                q=float(row.Q_kvar) / s_base_kw,
                is_slack=bool(int(row.is_slack)),
            )
            for row in buses.itertuples(index=False)
        )
        line_models = tuple(
            Line(
                from_bus=int(row.from_bus),
                to_bus=int(row.to_bus),
                r=float(row.R_ohm) / z_base,
                x=float(row.X_ohm) / z_base,
                switch_id=None if pd.isna(getattr(row, "switch_id", float("nan"))) else int(row.switch_id),
            )
            for row in lines.itertuples(index=False)
        )
        grid = Grid(
            name=name,
            buses=bus_models,
            lines=line_models,
            base_voltage=1.0,
            base_kv=base_kv,
            base_mva=base_mva,
        )
    except ValueError as e:
        raise NetworkFormatError(f"Invalid network data: {e}")

    logger.info(
        f"Loaded network {name}: {grid.n} buses, {grid.w} lines, {grid.r} switches"
    )
    return grid


def load_network(path: Union[str, Path]) -> Grid:
    """
    Load a feeder from a network file

    Raises:
        FileNotFoundError: if the file does not exist
        NetworkFormatError: if the contents are malformed
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        logger.error(f"Network file not found: {path}")
        raise
    return parse_network(text, name=path.stem)


def ieee33() -> Grid:
    """The shipped IEEE 33-bus feeder with tie switches S1..S5"""
    return load_network(IEEE33_PATH)
