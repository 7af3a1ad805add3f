"""
Shared fixtures: the shipped feeder, its signatures and small hand-built grids
"""
import pytest

from grid.matrices import TopologyCache
from grid.model import Bus, Grid, Line
from grid.network import ieee33
from signatures.library import build_library, compute_signatures
from signatures.placement import load_placement


@pytest.fixture(scope="session")
def grid():
    """IEEE 33-bus feeder with tie breakers S1..S5"""
    return ieee33()


@pytest.fixture(scope="session")
def cache(grid):
    return TopologyCache(grid)


@pytest.fixture(scope="session")
def signatures(grid, cache):
    return compute_signatures(grid, cache)


@pytest.fixture(scope="session")
def libraries(grid, signatures):
    """Libraries on the shipped placements, keyed by name"""
    return {
        name: build_library(grid, load_placement(name, grid), signatures)
        for name in ("P33", "P15", "P7")
    }


@pytest.fixture
def two_bus():
    """Slack and one load bus joined by a unit-admittance line"""
    return Grid(
        name="two-bus",
        buses=(Bus(id=1, is_slack=True), Bus(id=2, p=0.01)),
        lines=(Line(from_bus=1, to_bus=2, r=1.0, x=0.0),),
    )


@pytest.fixture
def three_bus_path():
    return Grid(
        name="three-bus",
        buses=(Bus(id=1, is_slack=True), Bus(id=2), Bus(id=3)),
        lines=(
            Line(from_bus=1, to_bus=2, r=1.0, x=0.0),
            Line(from_bus=2, to_bus=3, r=1.0, x=0.0),
        ),
    )


@pytest.fixture
def ring():
    """Four buses in a ring; breaker S1 closes the loop, S2 feeds bus 4 alone"""
    return Grid(
        name="ring",
        buses=(
            Bus(id=1, is_slack=True),
            Bus(id=2, p=0.02, q=0.01),
            Bus(id=3, p=0.03, q=0.01),
            Bus(id=4, p=0.01),
        ),
        lines=(
            Line(from_bus=1, to_bus=2, r=0.01, x=0.02),
            Line(from_bus=2, to_bus=3, r=0.02, x=0.02),
            Line(from_bus=3, to_bus=1, r=0.03, x=0.01, switch_id=1),
            Line(from_bus=3, to_bus=4, r=0.01, x=0.01, switch_id=2),
        ),
    )
