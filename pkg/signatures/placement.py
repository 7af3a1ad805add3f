"""
Placement - Ordered set of buses endowed with phasor measurement units
"""
import json
import logging
import re
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from grid.model import Grid
from grid.network import DATA_DIR

logger = logging.getLogger(__name__)

PLACEMENTS_DIR = DATA_DIR / "placements"


class Placement(BaseModel):
    """
    PMU placement; the bus order fixes the measurement vector layout
    """
    model_config = ConfigDict(frozen=True)

    name: str = "custom"
    buses: Tuple[int, ...]

    @field_validator("buses")
    @classmethod
    def _check_buses(cls, buses: Tuple[int, ...]) -> Tuple[int, ...]:
        if not buses:
            raise ValueError("Placement needs at least one bus")
        if len(set(buses)) != len(buses):
            raise ValueError(f"Placement buses must be distinct: {buses}")
        return buses

    @classmethod
    def full(cls, grid: Grid) -> "Placement":
        return cls(name=f"P{grid.n}", buses=grid.bus_ids)

    @property
    def p(self) -> int:
        return len(self.buses)

    def indices(self, grid: Grid) -> np.ndarray:
        """Row positions of the placement buses in the grid's bus ordering"""
        missing = [b for b in self.buses if b not in grid.bus_index]
        if missing:
            raise ValueError(f"Placement {self.name} has buses not in {grid.name}: {missing}")
        return np.array([grid.bus_index[b] for b in self.buses], dtype=int)

    def selection_matrix(self, grid: Grid) -> np.ndarray:
        """I_P, p x n with a single 1 per row"""
        I_P = np.zeros((self.p, grid.n))
        I_P[np.arange(self.p), self.indices(grid)] = 1.0
        return I_P

    def with_bus(self, bus: int) -> "Placement":
        if bus in self.buses:
            raise ValueError(f"Bus {bus} already in placement {self.name}")
        buses = tuple(sorted(self.buses + (bus,)))
        return Placement(name=f"P{len(buses)}", buses=buses)

    def __str__(self) -> str:
        return f"{self.name}{{{','.join(str(b) for b in self.buses)}}}"


def load_placement(source: Union[str, Path], grid: Grid) -> Placement:
    """
    Resolve a placement from a name, a JSON file or an inline list

    Accepted forms: "P33" / "P15" / "P7" (shipped placements, "P<n>" also
    means the full placement of an n-bus grid), a path to a JSON file with a
    "buses" array, or "9,12,15".
    """
    text = str(source).strip()

    if re.fullmatch(r"P\d+", text):
        shipped = PLACEMENTS_DIR / f"{text}.json"
        if text == f"P{grid.n}":
            return Placement.full(grid)
        if shipped.exists():
            return _read_placement_file(shipped, grid)
        raise ValueError(f"Unknown placement name: {text}")

    if re.fullmatch(r"[\d,\s]+", text):
        buses = tuple(int(b) for b in re.split(r"[,\s]+", text) if b)
        placement = Placement(buses=buses)
        placement.indices(grid)
        return placement

    return _read_placement_file(Path(text), grid)


def _read_placement_file(path: Path, grid: Grid) -> Placement:
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        logger.error(f"Placement file not found: {path}")
        raise
    placement = Placement(name=data.get("name", path.stem), buses=tuple(data["buses"]))
    placement.indices(grid)
    logger.info(f"Loaded placement {placement}")
    return placement


def save_placement(placement: Placement, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps({"name": placement.name, "buses": list(placement.buses)}) + "\n")


def named_placements(grid: Grid) -> List[Placement]:
    """The shipped placements that fit this grid"""
    found = []
    for path in sorted(PLACEMENTS_DIR.glob("P*.json")):
        try:
            found.append(_read_placement_file(path, grid))
        except ValueError:
            continue
    return found
