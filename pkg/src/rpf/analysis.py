"""
Closed-loop evaluation of phase-tracking filters against uncertain plants.

A filter designed for one plant is run against another by stacking plant
and filter states into ``xbar = [x, xhat]``::

    dxbar/dt = Abar xbar + Bbar [v, w]

The steady-state covariance of ``xbar`` follows from a Lyapunov equation,
and the estimation-error covariance from ``[I, -I] P_S [I, -I]^T``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError, UnstableLoopError
from .filters import FilterDesign, design_kalman, design_robust, optimize_epsilon
from .model import (
    Delta,
    ProcessModel,
    ResonantParams,
    UncertaintyModel,
    build_dual_homodyne_measurement,
    build_homodyne_measurement,
    build_process_model,
    realize_plant,
)
from .solvers import is_hurwitz, solve_lyapunov

__all__ = [
    "AugmentedSystem",
    "ErrorCovariance",
    "SweepAxis",
    "SweepPoint",
    "SweepResult",
    "augment",
    "closed_loop_error",
    "evaluate",
    "sql_sigma2",
    "sweep",
    "default_delta_grid",
]


@dataclass(frozen=True)
class AugmentedSystem:
    A_bar: np.ndarray
    B_bar: np.ndarray
    error_selector: np.ndarray


@dataclass(frozen=True)
class ErrorCovariance:
    P_S: np.ndarray
    Sigma: np.ndarray
    sigma2: float


class SweepAxis(str, enum.Enum):
    DELTA1 = "delta1"
    DELTA2 = "delta2"


@dataclass(frozen=True)
class SweepPoint:
    """One grid point; ``None`` marks an unstable closed loop (a gap)."""

    delta: float
    sigma2_robust: Optional[float]
    sigma2_kalman: Optional[float]
    sigma2_sql: Optional[float] = None

    @property
    def is_gap(self) -> bool:
        return self.sigma2_robust is None or self.sigma2_kalman is None


@dataclass(frozen=True)
class SweepResult:
    axis: SweepAxis
    mu1: float
    mu2: float
    points: list
    epsilon_opt: float
    q_bound: float
    include_sql: bool

    @property
    def deltas(self) -> np.ndarray:
        return np.array([p.delta for p in self.points])

    def column(self, name: str) -> np.ndarray:
        """Values of one sigma2 column as floats, NaN at gaps."""
        return np.array(
            [math.nan if getattr(p, name) is None else getattr(p, name) for p in self.points]
        )


def augment(plant: ProcessModel, filt: FilterDesign) -> AugmentedSystem:
    """Stack a realized plant and a filter into one linear system.

    ``Abar = [[A_real, 0], [F, L]]`` and ``Bbar = [[G, 0], [0, N]]``;
    the first noise column drives the plant, the remaining ``m`` columns are
    the measurement noise seen by the filter.
    """
    n = plant.A.shape[0]
    if plant.A.shape != (n, n) or filt.L.shape != (n, n) or filt.F.shape != (n, n):
        raise InvalidInputError(
            f"plant {plant.A.shape} incompatible with filter L {filt.L.shape}, F {filt.F.shape}"
        )
    if filt.N.shape[0] != n or plant.G.shape[0] != n:
        raise InvalidInputError("noise injection matrices have the wrong row count")
    p = plant.G.shape[1]
    m = filt.N.shape[1]
    A_bar = np.block([[plant.A, np.zeros((n, n))], [filt.F, filt.L]])
    B_bar = np.block(
        [
            [plant.G @ np.linalg.cholesky(plant.R), np.zeros((n, m))],
            [np.zeros((n, p)), filt.N],
        ]
    )
    sel = np.hstack([np.eye(n), -np.eye(n)])
    return AugmentedSystem(A_bar=A_bar, B_bar=B_bar, error_selector=sel)


def closed_loop_error(aug: AugmentedSystem, delta=None) -> ErrorCovariance:
    """Steady-state estimation-error covariance of an augmented loop.

    Raises
    ------
    UnstableLoopError
        If ``A_bar`` is not Hurwitz; ``delta`` is attached for reporting.
    """
    if not is_hurwitz(aug.A_bar):
        raise UnstableLoopError(f"closed loop is not asymptotically stable (Delta={delta})", delta)
    P_S = solve_lyapunov(aug.A_bar, aug.B_bar @ aug.B_bar.T)
    n = aug.A_bar.shape[0] // 2
    P1, P2, P3 = P_S[:n, :n], P_S[:n, n:], P_S[n:, n:]
    Sigma = P1 - P2 - P2.T + P3
    return ErrorCovariance(P_S=P_S, Sigma=Sigma, sigma2=float(Sigma[0, 0]))


def evaluate(plant: ProcessModel, filt: FilterDesign, delta=None) -> float:
    """Phase-error variance of ``filt`` running against ``plant``."""
    return closed_loop_error(augment(plant, filt), delta).sigma2


def sql_sigma2(
    params: ResonantParams, unc: UncertaintyModel, d: Delta, alpha_mag: float
) -> float:
    """Standard quantum limit at a realized uncertainty.

    The heterodyne-equivalent dual-homodyne scheme feeds an optimal Kalman
    filter designed for the true (perturbed) plant; its steady-state phase
    variance ``P[0, 0]`` is the limit.
    """
    plant = realize_plant(build_process_model(params), unc, d)
    return float(design_kalman(plant, build_dual_homodyne_measurement(alpha_mag)).design_cov[0, 0])


def default_delta_grid(n_points: int = 41) -> np.ndarray:
    return np.linspace(-1.0, 1.0, n_points)


def _delta_at(axis: SweepAxis, value: float) -> Delta:
    return Delta(value, 0.0) if axis == SweepAxis.DELTA1 else Delta(0.0, value)


def sweep(
    params: ResonantParams,
    alpha_mag: float,
    unc: UncertaintyModel,
    axis,
    grid: Sequence[float],
    include_sql: bool = False,
    epsilon: Optional[float] = None,
    scan_lo: float = 1e-2,
    scan_hi: float = 1e6,
    scan_points: int = 200,
) -> SweepResult:
    """Compare the robust filter, the nominal Kalman filter and the SQL along one delta axis.

    Both filters are designed once (Kalman at the nominal plant, robust at
    ``epsilon`` or the optimal epsilon) and evaluated at every grid point.
    Grid points whose closed loop is unstable are kept as gaps.
    """
    axis = SweepAxis(axis)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidInputError("delta grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise InvalidInputError("delta grid must be strictly increasing")
    if grid[0] < -1.0 or grid[-1] > 1.0:
        raise InvalidInputError("delta grid must lie within [-1, 1]")

    nominal = build_process_model(params)
    meas = build_homodyne_measurement(alpha_mag)
    kalman = design_kalman(nominal, meas)
    if epsilon is None:
        epsilon = optimize_epsilon(nominal, meas, unc, scan_lo, scan_hi, scan_points).epsilon_opt
    robust = design_robust(nominal, meas, unc, epsilon)

    points = []
    for value in grid:
        d = _delta_at(axis, float(value))
        plant = realize_plant(nominal, unc, d)
        vals = []
        for filt in (robust, kalman):
            try:
                vals.append(evaluate(plant, filt, d))
            except UnstableLoopError:
                vals.append(None)
        sql = None
        if include_sql and vals[1] is not None:
            sql = sql_sigma2(params, unc, d, alpha_mag)
        points.append(SweepPoint(float(value), vals[0], vals[1], sql))
    return SweepResult(
        axis=axis,
        mu1=unc.mu1,
        mu2=unc.mu2,
        points=points,
        epsilon_opt=float(epsilon),
        q_bound=float(robust.design_cov[0, 0]),
        include_sql=include_sql,
    )
