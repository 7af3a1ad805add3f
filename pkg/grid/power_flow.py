"""
Power Flow - Nonlinear constant-power solution used as simulation ground truth
"""
import logging
from typing import Optional

import numpy as np

from grid.matrices import pseudo_inverse, bus_admittance
from grid.model import Grid, SwitchStatus

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100


class PowerFlowDivergenceError(RuntimeError):
    """Raised when the fixed-point iteration does not converge"""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"Power flow did not converge after {iterations} iterations "
            f"(last update {residual:.3e} p.u.)"
        )


def injections(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Injected complex power for consumption (p, q)"""
    return -(np.asarray(p) + 1j * np.asarray(q))


def solve_with_inverse(
    X: np.ndarray,
    s: np.ndarray,
    base_voltage: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """
    Fixed point u = U_N 1 + X conj(s / u) for a precomputed pseudo-inverse

    Every solve starts flat, so equal inputs give bit-identical voltages.

    Args:
        X: slack-grounded pseudo-inverse of the bus admittance
        s: injected complex power per bus (slack entry ignored)
        base_voltage: slack voltage U_N
        tol: stop when the largest voltage update is below tol
        max_iter: iteration limit

    Raises:
        PowerFlowDivergenceError: with the last update norm
    """
    s = np.asarray(s, dtype=complex)
    u = np.full(X.shape[0], base_voltage, dtype=complex)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        u_next = base_voltage + X @ np.conj(s / u)
        residual = float(np.max(np.abs(u_next - u)))
        u = u_next
        if not np.isfinite(residual):
            break
        if residual <= tol:
            return u
    raise PowerFlowDivergenceError(iteration, residual)


def solve_power_flow(
    grid: Grid,
    status: SwitchStatus,
    s: np.ndarray,
    base_voltage: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """
    Bus voltages of the constant-power feeder under a switch status

    Raises:
        DisconnectedTopologyError: inadmissible status
        PowerFlowDivergenceError: loads outside the convergence region
    """
    U_N = grid.base_voltage if base_voltage is None else base_voltage
    X = pseudo_inverse(bus_admittance(grid, status))
    return solve_with_inverse(X, s, U_N, tol=tol, max_iter=max_iter)


def power_mismatch(Y: np.ndarray, u: np.ndarray, s: np.ndarray) -> float:
    """Largest |u_v conj((Y u)_v) - s_v| over non-slack buses"""
    mismatch = u * np.conj(Y @ u) - s
    return float(np.max(np.abs(mismatch[1:]))) if len(u) > 1 else 0.0
