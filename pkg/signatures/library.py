"""
Library - Transition signatures for every admissible single-breaker action

A breaker toggle changes the slack-grounded pseudo-inverse by a rank-one
term, so the voltage trend it causes always points along one direction
that depends only on the breaker and the status of the other breakers.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from grid.matrices import TopologyCache
from grid.model import Grid, SwitchStatus
from signatures.placement import Placement

logger = logging.getLogger(__name__)

POWER_ITERATIONS = 50
UNIT_NORM_TOL = 1e-12


class InadmissibleKeyError(ValueError):
    """Raised when either side of a breaker action disconnects the feeder"""
    pass


class UnobservableSignatureError(ValueError):
    """Raised when a placement sees nothing of a transition signature"""

    def __init__(self, key: "SignatureKey", placement: Placement):
        self.key = key
        self.placement = placement
        super().__init__(f"Signature {key} vanishes on placement {placement}")


class SignatureKey(BaseModel):
    """Breaker (1-based) plus the status of all other breakers"""
    model_config = ConfigDict(frozen=True)

    breaker: int
    context: Tuple[int, ...]

    @classmethod
    def of(cls, status: SwitchStatus, breaker: int) -> "SignatureKey":
        return cls(breaker=breaker, context=status.context(breaker))

    def open_status(self) -> SwitchStatus:
        return SwitchStatus.from_context(self.breaker, self.context, 0)

    def closed_status(self) -> SwitchStatus:
        return SwitchStatus.from_context(self.breaker, self.context, 1)

    def __str__(self) -> str:
        ctx = "".join(str(b) for b in self.context)
        return f"S{self.breaker}|{ctx}"


class Candidate(NamedTuple):
    """One entry of a particular library"""
    breaker: int
    vector: np.ndarray
    status_after: SwitchStatus


def is_admissible_key(grid: Grid, key: SignatureKey) -> bool:
    return grid.is_admissible(key.open_status()) and grid.is_admissible(key.closed_status())


def signature_keys(grid: Grid) -> List[SignatureKey]:
    """All admissible keys, breaker-major, contexts in lexicographic order"""
    keys = []
    for breaker in range(1, grid.r + 1):
        for context in product((0, 1), repeat=grid.r - 1):
            key = SignatureKey(breaker=breaker, context=context)
            if is_admissible_key(grid, key):
                keys.append(key)
    return keys


def difference_matrix(
    grid: Grid, key: SignatureKey, cache: Optional[TopologyCache] = None
) -> np.ndarray:
    """X_closed - X_open for a breaker action"""
    if not is_admissible_key(grid, key):
        raise InadmissibleKeyError(f"Signature key {key} has a disconnected side")
    cache = cache or TopologyCache(grid)
    return cache.inverse(key.closed_status()) - cache.inverse(key.open_status())


def dominant_direction(D: np.ndarray, iterations: int = POWER_ITERATIONS) -> np.ndarray:
    """
    Leading left singular vector of D by power iteration on D D^H

    Seeded with the normalized all-ones vector; if that seed is orthogonal
    to the range of D, the largest column of D is used instead. The phase is
    fixed so the largest-magnitude entry is real and positive.
    """
    n = D.shape[0]
    M = D @ D.conj().T
    scale = np.linalg.norm(M)
    if scale == 0:
        raise ValueError("Difference matrix is identically zero")

    v = np.ones(n, dtype=complex) / np.sqrt(n)
    if np.linalg.norm(M @ v) <= 1e-12 * scale:
        column = int(np.argmax(np.linalg.norm(D, axis=0)))
        v = D[:, column] / np.linalg.norm(D[:, column])

    for _ in range(iterations):
        v = M @ v
        v /= np.linalg.norm(v)

    pivot = v[int(np.argmax(np.abs(v)))]
    return v * (np.conj(pivot) / abs(pivot))


def signature_vector(
    grid: Grid, key: SignatureKey, cache: Optional[TopologyCache] = None
) -> np.ndarray:
    """
    Full-dimension signature Λ ĝ of a breaker action

    Raises:
        InadmissibleKeyError: if opening or closing the breaker islands the feeder
    """
    g_hat = dominant_direction(difference_matrix(grid, key, cache))
    return g_hat - g_hat[0]


def rank_one_ratio(
    grid: Grid, key: SignatureKey, cache: Optional[TopologyCache] = None
) -> float:
    """Second over first singular value of X_closed - X_open"""
    singular = np.linalg.svd(difference_matrix(grid, key, cache), compute_uv=False)
    return float(singular[1] / singular[0]) if len(singular) > 1 else 0.0


def restrict_and_normalize(
    g_hat: np.ndarray, placement: Placement, grid: Grid, key: Optional[SignatureKey] = None
) -> np.ndarray:
    """
    I_P Λ ĝ / ||I_P Λ ĝ||

    Raises:
        UnobservableSignatureError: if the restriction is zero
    """
    full = g_hat - g_hat[0]
    restricted = full[placement.indices(grid)]
    norm = np.linalg.norm(restricted)
    if norm <= UNIT_NORM_TOL * max(np.linalg.norm(full), UNIT_NORM_TOL):
        raise UnobservableSignatureError(key or SignatureKey(breaker=0, context=()), placement)
    return restricted / norm


def compute_signatures(
    grid: Grid, cache: Optional[TopologyCache] = None, workers: int = 1
) -> Dict[SignatureKey, np.ndarray]:
    """
    Full-dimension signatures for every admissible key

    Pseudo-inverses are factorized up front; the per-key extraction then
    runs in a thread pool when workers > 1.
    """
    cache = cache or TopologyCache(grid)
    keys = signature_keys(grid)
    for status in grid.admissible_statuses():
        cache.inverse(status)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            vectors = list(executor.map(lambda k: signature_vector(grid, k, cache), keys))
    else:
        vectors = [signature_vector(grid, k, cache) for k in keys]

    logger.info(f"Computed {len(keys)} transition signatures for {grid.name}")
    return dict(zip(keys, vectors))


@dataclass(frozen=True)
class SignatureLibrary:
    """
    Unit signatures restricted to a placement, keyed by SignatureKey

    Immutable once built; safe to share between detectors.
    """
    entries: Dict[SignatureKey, np.ndarray]
    placement: Placement
    fingerprint: str
    r: int
    _by_status: Dict[Tuple[int, ...], List[Candidate]] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __len__(self) -> int:
        return len(self.entries)

    def keys(self) -> List[SignatureKey]:
        return list(self.entries.keys())

    def vector(self, key: SignatureKey) -> np.ndarray:
        return self.entries[key]

    def matrix(self) -> np.ndarray:
        """Library columns juxtaposed, p x |L|"""
        return np.column_stack(list(self.entries.values()))

    def particular(self, status: SwitchStatus) -> List[Candidate]:
        """Memoized particular_library"""
        if status.bits not in self._by_status:
            self._by_status[status.bits] = particular_library(self, status)
        return self._by_status[status.bits]


def build_library(
    grid: Grid,
    placement: Placement,
    signatures: Optional[Dict[SignatureKey, np.ndarray]] = None,
    workers: int = 1,
) -> SignatureLibrary:
    """
    Restrict every admissible signature to a placement

    Args:
        grid: feeder model
        placement: PMU buses
        signatures: precomputed full-dimension signatures (reused across placements)
        workers: thread pool size for signature extraction

    Raises:
        UnobservableSignatureError: naming the first key the placement cannot see
    """
    signatures = signatures if signatures is not None else compute_signatures(grid, workers=workers)
    entries = {
        key: restrict_and_normalize(g_hat, placement, grid, key)
        for key, g_hat in signatures.items()
    }
    library = SignatureLibrary(
        entries=entries, placement=placement, fingerprint=grid.fingerprint, r=grid.r
    )
    logger.info(f"Built library of {len(library)} signatures on {placement}")
    return library


def particular_library(library: SignatureLibrary, status: SwitchStatus) -> List[Candidate]:
    """
    The signatures reachable from a known status, one per breaker

    Breakers whose toggle would disconnect the feeder are left out.
    """
    if status.r != library.r:
        raise ValueError(f"Status {status} does not match a library with {library.r} breakers")
    candidates = []
    for breaker in range(1, library.r + 1):
        key = SignatureKey.of(status, breaker)
        vector = library.entries.get(key)
        if vector is None:
            continue
        candidates.append(Candidate(breaker, vector, status.toggle(breaker)))
    return candidates
