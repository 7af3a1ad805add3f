"""
Grid Model - Feeder graph, breaker status and per-unit network data
"""
import hashlib
import logging
import re
from functools import cached_property
from itertools import product
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

logger = logging.getLogger(__name__)


class DisconnectedTopologyError(ValueError):
    """Raised when a switch status leaves part of the feeder disconnected"""

    def __init__(self, status: "SwitchStatus", components: int):
        self.status = status
        self.components = components
        super().__init__(
            f"Switch status {status} splits the feeder into {components} islands"
        )


class SwitchStatus(BaseModel):
    """
    Breaker status vector (1 = closed, 0 = open)

    Breakers are addressed 1..r everywhere outside this class.
    """
    model_config = ConfigDict(frozen=True)

    bits: Tuple[int, ...]

    @field_validator("bits")
    @classmethod
    def _check_bits(cls, bits: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"Switch status bits must be 0 or 1: {bits}")
        return tuple(int(b) for b in bits)

    @classmethod
    def closed(cls, r: int) -> "SwitchStatus":
        return cls(bits=(1,) * r)

    @classmethod
    def open(cls, r: int) -> "SwitchStatus":
        return cls(bits=(0,) * r)

    @classmethod
    def parse(cls, text: str) -> "SwitchStatus":
        """
        Parse "1,1,1,0,1", "(1,1,1,0,1)" or "11101"
        """
        digits = re.findall(r"[01]", text)
        if not digits or re.search(r"[^01,()\s\[\]]", text):
            raise ValueError(f"Invalid switch status: {text!r}")
        return cls(bits=tuple(int(d) for d in digits))

    @classmethod
    def from_context(cls, breaker: int, context: Tuple[int, ...], value: int) -> "SwitchStatus":
        """Rebuild a status from the other breakers' bits and the bit of `breaker`"""
        bits = list(context)
        bits.insert(breaker - 1, value)
        return cls(bits=tuple(bits))

    @property
    def r(self) -> int:
        return len(self.bits)

    def is_closed(self, breaker: int) -> bool:
        return self.bits[breaker - 1] == 1

    def toggle(self, breaker: int) -> "SwitchStatus":
        if not 1 <= breaker <= self.r:
            raise ValueError(f"Breaker {breaker} out of range 1..{self.r}")
        bits = list(self.bits)
        bits[breaker - 1] = 1 - bits[breaker - 1]
        return SwitchStatus(bits=tuple(bits))

    def context(self, breaker: int) -> Tuple[int, ...]:
        """Status of every breaker except `breaker`"""
        return self.bits[: breaker - 1] + self.bits[breaker:]

    def __str__(self) -> str:
        return "(" + ",".join(str(b) for b in self.bits) + ")"


class Bus(BaseModel):
    """Feeder bus with nominal consumption in per-unit"""
    model_config = ConfigDict(frozen=True)

    id: int
    p: float = 0.0
    q: float = 0.0
    is_slack: bool = False


class Line(BaseModel):
    """Series branch in per-unit; switch_id marks a breaker"""
    model_config = ConfigDict(frozen=True)

    from_bus: int
    to_bus: int
    r: float
    x: float
    switch_id: Optional[int] = None

    @model_validator(mode="after")
    def _check_impedance(self) -> "Line":
        if self.r <= 0:
            raise ValueError(
                f"Line {self.from_bus}-{self.to_bus} needs positive resistance, got {self.r}"
            )
        if self.from_bus == self.to_bus:
            raise ValueError(f"Line {self.from_bus}-{self.to_bus} is a self loop")
        return self

    @property
    def admittance(self) -> complex:
        return 1.0 / complex(self.r, self.x)


class Grid(BaseModel):
    """
    Single-phase equivalent feeder

    Buses are ordered with the slack (substation) first. Lines carrying a
    switch_id are breakers; all other lines are always energized.
    """
    model_config = ConfigDict(frozen=True)

    name: str = "feeder"
    buses: Tuple[Bus, ...]
    lines: Tuple[Line, ...]
    base_voltage: float = 1.0
    base_kv: float = 1.0
    base_mva: float = 1.0

    @model_validator(mode="after")
    def _check_topology(self) -> "Grid":
        if self.base_voltage <= 0:
            raise ValueError(f"Base voltage must be positive: {self.base_voltage}")

        slack = [b.id for b in self.buses if b.is_slack]
        if len(slack) != 1:
            raise ValueError(f"Exactly one slack bus required, found {len(slack)}")
        if not self.buses[0].is_slack:
            raise ValueError(f"Slack bus {slack[0]} must be listed first")

        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ValueError("Duplicate bus ids in network data")
        known = set(ids)
        for line in self.lines:
            if line.from_bus not in known or line.to_bus not in known:
                raise ValueError(
                    f"Line {line.from_bus}-{line.to_bus} references an unknown bus"
                )

        switch_ids = sorted(l.switch_id for l in self.lines if l.switch_id is not None)
        if switch_ids != list(range(1, len(switch_ids) + 1)):
            raise ValueError(f"Switch ids must be distinct and cover 1..r: {switch_ids}")

        components = self.count_islands(SwitchStatus.closed(len(switch_ids)))
        if components != 1:
            raise ValueError(
                f"Feeder is disconnected even with all switches closed ({components} islands)"
            )
        return self

    @property
    def n(self) -> int:
        return len(self.buses)

    @property
    def w(self) -> int:
        return len(self.lines)

    @property
    def r(self) -> int:
        return sum(1 for line in self.lines if line.switch_id is not None)

    @cached_property
    def bus_index(self) -> Dict[int, int]:
        return {bus.id: idx for idx, bus in enumerate(self.buses)}

    @cached_property
    def bus_ids(self) -> Tuple[int, ...]:
        return tuple(bus.id for bus in self.buses)

    @cached_property
    def switch_lines(self) -> Dict[int, Line]:
        return {line.switch_id: line for line in self.lines if line.switch_id is not None}

    @cached_property
    def fingerprint(self) -> str:
        """SHA-256 of the canonical network data"""
        return hashlib.sha256(self.model_dump_json().encode()).hexdigest()

    def nominal_power(self) -> Tuple[np.ndarray, np.ndarray]:
        """Nominal (p, q) consumption vectors in per-unit, slack entry zero"""
        p = np.array([0.0 if b.is_slack else b.p for b in self.buses])
        q = np.array([0.0 if b.is_slack else b.q for b in self.buses])
        return p, q

    def energized_lines(self, status: SwitchStatus) -> List[Line]:
        if status.r != self.r:
            raise ValueError(f"Switch status has {status.r} bits, grid has {self.r} switches")
        return [
            line for line in self.lines
            if line.switch_id is None or status.is_closed(line.switch_id)
        ]

    def count_islands(self, status: SwitchStatus) -> int:
        lines = self.energized_lines(status)
        rows = [self.bus_index[l.from_bus] for l in lines]
        cols = [self.bus_index[l.to_bus] for l in lines]
        adjacency = coo_matrix((np.ones(len(lines)), (rows, cols)), shape=(self.n, self.n))
        components, _ = connected_components(adjacency, directed=False)
        return int(components)

    def is_admissible(self, status: SwitchStatus) -> bool:
        return self.count_islands(status) == 1

    def require_admissible(self, status: SwitchStatus) -> None:
        components = self.count_islands(status)
        if components != 1:
            raise DisconnectedTopologyError(status, components)

    def admissible_statuses(self) -> List[SwitchStatus]:
        """Every connected status, in lexicographic bit order"""
        statuses = [SwitchStatus(bits=bits) for bits in product((0, 1), repeat=self.r)]
        return [s for s in statuses if self.is_admissible(s)]
