"""
Observability - Gram-matrix certificates for a PMU placement

A placement identifies every breaker action when no two library columns are
parallel on it. The full certificate compares all columns; the particular
certificate only compares the transitions that leave one status, which is
all a detector with a known status ever has to tell apart.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from grid.model import Grid, SwitchStatus
from signatures.library import (
    SignatureKey,
    SignatureLibrary,
    UnobservableSignatureError,
    build_library,
    compute_signatures,
)
from signatures.placement import Placement

logger = logging.getLogger(__name__)

CERTIFICATE_MARGIN = 1e-6


class PlacementError(ValueError):
    """Raised when a placement search cannot reach its goal"""
    pass


class GramReport(BaseModel):
    """
    Largest off-diagonal |G_uv| of the library Gram matrix

    worst_pair names the two columns achieving max_offdiag; pair is only set
    when they break the certificate. contexts maps each status to its own
    maximum for the particular variant.
    """
    kind: str
    placement: str
    max_offdiag: float
    worst_pair: Optional[Tuple[str, str]] = None
    pair: Optional[Tuple[str, str]] = None
    worst_status: Optional[str] = None
    contexts: Dict[str, float] = {}
    margin: float = CERTIFICATE_MARGIN
    certified: bool

    def summary(self) -> str:
        verdict = "certified" if self.certified else "NOT certified"
        text = f"{self.kind} Gram max {self.max_offdiag:.6f} on {self.placement}: {verdict}"
        if self.pair:
            text += f" (columns {self.pair[0]} and {self.pair[1]}"
            text += f" from {self.worst_status})" if self.worst_status else ")"
        return text


def _gram_max(columns: Sequence[np.ndarray]) -> Tuple[float, Optional[Tuple[int, int]]]:
    if len(columns) < 2:
        return 0.0, None
    L = np.column_stack(columns)
    G = np.abs(L.conj().T @ L)
    np.fill_diagonal(G, 0.0)
    u, v = np.unravel_index(int(np.argmax(G)), G.shape)
    u, v = min(u, v), max(u, v)
    return float(G[u, v]), (int(u), int(v))


def observability_full(library: SignatureLibrary, margin: float = CERTIFICATE_MARGIN) -> GramReport:
    """Certificate over every pair of library columns"""
    keys = library.keys()
    value, pair = _gram_max([library.vector(k) for k in keys])
    names = (str(keys[pair[0]]), str(keys[pair[1]])) if pair else None
    certified = value < 1.0 - margin
    report = GramReport(
        kind="full",
        placement=str(library.placement),
        max_offdiag=value,
        worst_pair=names,
        pair=None if certified else names,
        margin=margin,
        certified=certified,
    )
    logger.debug(report.summary())
    return report


def _library_statuses(library: SignatureLibrary) -> List[SwitchStatus]:
    statuses = {}
    for key in library.keys():
        for status in (key.open_status(), key.closed_status()):
            statuses[status.bits] = status
    return [statuses[bits] for bits in sorted(statuses)]


def observability_particular(
    library: SignatureLibrary, margin: float = CERTIFICATE_MARGIN
) -> GramReport:
    """Worst certificate over the particular libraries of every reachable status"""
    value, names, worst_status = 0.0, None, None
    contexts = {}
    for status in _library_statuses(library):
        candidates = library.particular(status)
        local, pair = _gram_max([c.vector for c in candidates])
        contexts[str(status)] = local
        if pair and local > value:
            value = local
            worst_status = str(status)
            names = tuple(
                str(SignatureKey.of(status, candidates[i].breaker)) for i in pair
            )

    certified = value < 1.0 - margin
    report = GramReport(
        kind="particular",
        placement=str(library.placement),
        max_offdiag=value,
        worst_pair=names,
        pair=None if certified else names,
        worst_status=worst_status,
        contexts=contexts,
        margin=margin,
        certified=certified,
    )
    logger.debug(report.summary())
    return report


def certify(library: SignatureLibrary, margin: float = CERTIFICATE_MARGIN) -> Tuple[GramReport, GramReport]:
    return observability_full(library, margin), observability_particular(library, margin)


def _slack_neighbour(grid: Grid) -> int:
    slack = grid.bus_ids[0]
    neighbours = [
        line.to_bus if line.from_bus == slack else line.from_bus
        for line in grid.lines
        if line.switch_id is None and slack in (line.from_bus, line.to_bus)
    ]
    if not neighbours:
        raise PlacementError(f"Slack bus {slack} of {grid.name} has no permanent neighbour")
    return min(neighbours)


def find_seed_placement(
    grid: Grid,
    signatures: Optional[Dict[SignatureKey, np.ndarray]] = None,
    require_full: bool = True,
    margin: float = CERTIFICATE_MARGIN,
) -> Placement:
    """
    Smallest-effort observable placement grown from the slack-adjacent bus

    Each step adds the bus that lowers the Gram maximum the most (the full
    one when require_full, otherwise the particular one); ties go to the
    lowest bus id.

    Raises:
        PlacementError: if even the full placement is not certified
    """
    signatures = signatures if signatures is not None else compute_signatures(grid)
    placement = Placement(name="P1", buses=(_slack_neighbour(grid),))
    others = list(grid.bus_ids[1:])

    def objective(candidate: Placement) -> Tuple[bool, float]:
        try:
            library = build_library(grid, candidate, signatures)
        except UnobservableSignatureError:
            return False, np.inf
        particular = observability_particular(library, margin)
        if not require_full:
            return particular.certified, particular.max_offdiag
        full = observability_full(library, margin)
        return full.certified and particular.certified, full.max_offdiag

    done, _ = objective(placement)
    while not done:
        remaining = [b for b in others if b not in placement.buses]
        if not remaining:
            raise PlacementError(f"No placement of {grid.name} passes the certificate")
        scored = [(objective(placement.with_bus(b)), b) for b in remaining]
        (done, value), bus = min(scored, key=lambda item: (item[0][1], item[1]))
        placement = placement.with_bus(bus)
        logger.info(f"Seed placement grown with bus {bus} to {placement} (Gram max {value:.6f})")

    return placement
