"""Task division between local and MEC processing, and MEC capacity water-filling.

A device with workload C bits processes (1 - alpha) C locally at rate L and
offloads alpha C, which is uplinked at rate R and then processed at rate U.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


def _check_rates(L: float, R: float, U: float) -> None:
    if not L > 0:
        raise ValueError(f"local rate must be positive, got {L}")
    if not R > 0:
        raise ValueError(f"uplink rate must be positive, got {R}")
    if not U >= 0:
        raise ValueError(f"MEC rate must be non-negative, got {U}")


def split_ratio(L: float, R: float, U: float) -> float:
    """Offloaded fraction that makes the local and offload paths finish together."""
    _check_rates(L, R, U)
    if U == 0:
        return 0.0
    if math.isinf(U):
        return R / (L + R)
    # (1/L) / (1/R + 1/U + 1/L), multiplied through by L*R*U
    return R * U / (R * U + L * U + L * R)


def task_delay(C: float, L: float, R: float, U: float) -> float:
    """Completion time of the slower of the two paths under the optimal split."""
    if C < 0:
        raise ValueError("workload must be non-negative")
    alpha = split_ratio(L, R, U)
    local = (1.0 - alpha) * C / L
    if alpha == 0.0:
        return local
    offload = alpha * C * (1.0 / R + 1.0 / U)
    return max(local, offload)


def effective_rate(L: float, R: float, U: float) -> float:
    """Aggregate processing rate L + RU/(R+U); task_delay equals C over this."""
    _check_rates(L, R, U)
    if U == 0:
        return L
    return L + R * U / (R + U)


def min_required_rate(C: float, T: float, L: float, R: float) -> float:
    """Smallest MEC rate meeting deadline T, or ``math.inf`` when none can."""
    if not (C > 0 and T > 0 and L > 0 and R > 0):
        raise ValueError("C, T, L and R must all be positive")
    shortfall = C / T - L
    if shortfall <= 0:
        return 0.0
    if R <= shortfall:
        return math.inf
    return shortfall * R / (R - shortfall)


def marginal_reduction(C, L, R, U):
    """-d(delay)/dU = C R^2 / (L R + U (L + R))^2, vectorised."""
    C, L, R, U = (np.asarray(a, dtype=float) for a in (C, L, R, U))
    return C * R**2 / (L * R + U * (L + R)) ** 2


def _level_allocation(level, C, L, R, floor):
    # U at which the marginal reduction equals ``level``, clipped to the floor
    return np.maximum(floor, (R * np.sqrt(C / level) - L * R) / (L + R))


def waterfill(C, L, R, u_min, capacity: float, rel_tol: float = 1e-10) -> np.ndarray:
    """Split ``capacity`` so that each device gets at least ``u_min`` and the sum of
    delays is minimal.

    Every device's delay is convex and decreasing in U, so at the optimum all
    devices above their floor share one marginal delay reduction (the water
    level).  The level is located by bracketing root search on log(level).
    """
    C, L, R, floor = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (C, L, R, u_min))
    if not (C.shape == L.shape == R.shape == floor.shape):
        raise ValueError("per-device inputs must be aligned")
    if np.any(~np.isfinite(floor)) or np.any(floor < 0):
        raise ValueError("minimum rates must be finite and non-negative")
    total_min = float(floor.sum())
    if total_min > capacity * (1.0 + 1e-12):
        raise ValueError(f"minimum rates {total_min:.6g} exceed capacity {capacity:.6g}")
    residual = capacity - total_min
    if C.size == 0 or residual <= 0 or not np.any(C > 0):
        return floor.copy()

    live = C > 0
    Cl, Ll, Rl, Fl = C[live], L[live], R[live], floor[live]

    def excess(log_level):
        return _level_allocation(math.exp(log_level), Cl, Ll, Rl, Fl).sum() - (capacity - floor[~live].sum())

    hi = math.log(float(marginal_reduction(Cl, Ll, Rl, Fl).max()))
    lo = hi
    while excess(lo) < 0:
        lo -= 10.0
    if excess(hi) >= 0:
        return floor.copy()
    log_level = brentq(excess, lo, hi, xtol=rel_tol, rtol=4 * np.finfo(float).eps, maxiter=500)

    u = floor.copy()
    u[live] = _level_allocation(math.exp(log_level), Cl, Ll, Rl, Fl)
    # Hand the root-finding remainder to the devices above their floor.
    above = u - floor
    slack = capacity - u.sum()
    if above.sum() > 0:
        u += slack * above / above.sum()
    return u


@dataclass(frozen=True)
class AllocationResult:
    device_id: int
    bs_id: int
    alpha: float
    mec_rate_bps: float
    uplink_rate_bps: float
    planned_delay_s: float
    realized_delay_s: float
    deadline_s: float

    @property
    def met_deadline(self) -> bool:
        return self.realized_delay_s <= self.deadline_s * (1.0 + 1e-9)
