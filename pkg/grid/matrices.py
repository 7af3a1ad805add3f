"""
Matrices - Incidence, bus admittance and the slack-grounded pseudo-inverse
"""
import logging
from typing import Dict, Tuple

import numpy as np
import scipy.linalg as la

from grid.model import Grid, SwitchStatus

logger = logging.getLogger(__name__)

# Reciprocal condition number below which the grounded admittance is treated
# as singular (numerically disconnected feeder).
MIN_RCOND = 1e-14


class FactorizationError(ValueError):
    """Raised when the grounded admittance matrix cannot be factorized"""
    pass


def incidence_matrix(grid: Grid, status: SwitchStatus) -> np.ndarray:
    """
    Incidence matrix of the energized lines

    One row per energized line (in network order) with +1 at the sending bus
    and -1 at the receiving bus.

    Raises:
        DisconnectedTopologyError: if the status islands part of the feeder
    """
    grid.require_admissible(status)
    lines = grid.energized_lines(status)
    A = np.zeros((len(lines), grid.n), dtype=complex)
    for row, line in enumerate(lines):
        A[row, grid.bus_index[line.from_bus]] = 1.0
        A[row, grid.bus_index[line.to_bus]] = -1.0
    return A


def line_vector(grid: Grid, breaker: int) -> Tuple[np.ndarray, complex]:
    """Incidence row a_l and admittance Y_l of a breaker's line"""
    line = grid.switch_lines[breaker]
    a = np.zeros(grid.n, dtype=complex)
    a[grid.bus_index[line.from_bus]] = 1.0
    a[grid.bus_index[line.to_bus]] = -1.0
    return a, line.admittance


def bus_admittance(grid: Grid, status: SwitchStatus) -> np.ndarray:
    """
    Bus admittance matrix A^T diag(Y) A of the energized lines (no shunts)
    """
    A = incidence_matrix(grid, status)
    y = np.array([line.admittance for line in grid.energized_lines(status)])
    return A.T @ (y[:, None] * A)


def pseudo_inverse(Y: np.ndarray) -> np.ndarray:
    """
    Constrained pseudo-inverse X with X Y = I - 1 e1^T and X e1 = 0

    The slack row and column are dropped, the grounded matrix is LU
    factorized and inverted, and the result is re-embedded with a zero first
    row and column.

    Raises:
        FactorizationError: if the grounded matrix is singular
    """
    n = Y.shape[0]
    if Y.shape != (n, n):
        raise FactorizationError(f"Admittance matrix must be square, got {Y.shape}")
    X = np.zeros((n, n), dtype=complex)
    if n == 1:
        return X

    grounded = Y[1:, 1:]
    try:
        lu, piv = la.lu_factor(grounded, check_finite=True)
    except (la.LinAlgError, ValueError) as e:
        raise FactorizationError(f"Grounded admittance factorization failed: {e}")

    diag = np.abs(np.diag(lu))
    if diag.min() <= MIN_RCOND * diag.max():
        raise FactorizationError(
            "Grounded admittance is singular beyond its kernel (disconnected feeder?)"
        )

    X[1:, 1:] = la.lu_solve((lu, piv), np.eye(n - 1, dtype=complex))
    # Symmetric by construction; remove round-off asymmetry
    X = 0.5 * (X + X.T)
    return X


def rank_one_update(X_open: np.ndarray, a: np.ndarray, y: complex) -> np.ndarray:
    """
    Pseudo-inverse after adding admittance y along incidence row a

    Sherman-Morrison on the grounded matrices:
        X_closed = X_open - y (X a)(X a)^T / (1 + y a^T X a)
    """
    Xa = X_open @ a
    denom = 1.0 + y * (a @ Xa)
    if abs(denom) < MIN_RCOND:
        raise FactorizationError("Rank-one update denominator vanished")
    return X_open - (y / denom) * np.outer(Xa, Xa)


def approx_voltage(X: np.ndarray, s: np.ndarray, base_voltage: float) -> np.ndarray:
    """
    Linearized voltages u = U_N 1 + X conj(s) / U_N

    s is the injected complex power; its slack entry has no effect since
    X e1 = 0.
    """
    return base_voltage + X @ np.conj(s) / base_voltage


class TopologyCache:
    """
    Memoizes admittance matrices and pseudo-inverses per switch status

    A grid has at most 2^r statuses, so everything is kept.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        self._admittance: Dict[Tuple[int, ...], np.ndarray] = {}
        self._inverse: Dict[Tuple[int, ...], np.ndarray] = {}

    def admittance(self, status: SwitchStatus) -> np.ndarray:
        key = status.bits
        if key not in self._admittance:
            self._admittance[key] = bus_admittance(self.grid, status)
        return self._admittance[key]

    def inverse(self, status: SwitchStatus) -> np.ndarray:
        key = status.bits
        if key not in self._inverse:
            self._inverse[key] = pseudo_inverse(self.admittance(status))
            logger.debug(f"Factorized topology {status} of {self.grid.name}")
        return self._inverse[key]

    def __len__(self) -> int:
        return len(self._inverse)
