"""
Steady-state Kalman filter and guaranteed-cost robust filter design.

Both filters share the structure::

    dxhat/dt = L xhat + F x + N w

so that either can be closed around any realized plant by
:func:`rpf.analysis.augment`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DesignFailureError,
    InfeasibleEpsilonError,
    InvalidParameterError,
    NoFeasibleEpsilonError,
    SolverError,
)
from .model import MeasurementModel, ProcessModel, UncertaintyModel
from .solvers import CareProblem, CareSolution, is_hurwitz, solve_care

__all__ = [
    "FilterKind",
    "FilterDesign",
    "EpsilonScanResult",
    "design_kalman",
    "robust_riccati",
    "optimize_epsilon",
    "design_robust",
    "q_plus",
]


class FilterKind(str, enum.Enum):
    KALMAN = "kalman"
    ROBUST = "robust"


@dataclass(frozen=True)
class FilterDesign:
    """State matrices of a linear filter and the covariance it was designed for.

    Attributes
    ----------
    L : (2, 2) ndarray
        Filter system matrix.
    F : (2, 2) ndarray
        Injection of the true state (through the noiseless part of the
        measurement).
    N : (2, m) ndarray
        Injection of measurement noise.
    design_cov : (2, 2) ndarray
        Kalman error covariance ``P`` or robust upper bound ``Q~``.
    """

    L: np.ndarray
    F: np.ndarray
    N: np.ndarray
    design_cov: np.ndarray
    kind: FilterKind
    epsilon: Optional[float] = None
    gain: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return self.N.shape[1]


@dataclass(frozen=True)
class EpsilonScanResult:
    """Coarse scan of ``Q+(eps) = Q~(eps)[0, 0]`` plus the refined optimum.

    ``q_plus`` holds NaN at infeasible grid points.
    """

    epsilons: np.ndarray
    q_plus: np.ndarray
    epsilon_opt: float
    q_plus_opt: float
    boundary_flag: bool

    @property
    def feasible(self) -> np.ndarray:
        return np.isfinite(self.q_plus)

    @property
    def grid(self) -> list[tuple[float, Optional[float]]]:
        return [
            (float(e), float(q) if math.isfinite(q) else None)
            for e, q in zip(self.epsilons, self.q_plus)
        ]


def _gain_factor(meas: MeasurementModel) -> np.ndarray:
    # H^T (J S J^T)^-1, shape (2, 1)
    return np.linalg.solve(meas.noise_intensity, meas.H).T


def design_kalman(proc: ProcessModel, meas: MeasurementModel) -> FilterDesign:
    """Steady-state Kalman filter for ``proc`` observed through ``meas``.

    Solves ``A P + P A^T + G R G^T - P H^T (J S J^T)^-1 H P = 0`` and sets
    ``K = P H^T (J S J^T)^-1``, ``L = A - K H``, ``F = K H``, ``N = K J``.
    Works for any number of measurement-noise channels.
    """
    prob = CareProblem(A=proc.A, Q_const=proc.drive_intensity, M_quad=meas.information)
    sol = solve_care(prob)
    P = sol.X
    K = P @ _gain_factor(meas)
    F = K @ meas.H
    L = proc.A - F
    if not is_hurwitz(L):
        raise DesignFailureError("Kalman filter matrix A - K H is not Hurwitz")
    return FilterDesign(L=L, F=F, N=K @ meas.J, design_cov=P, kind=FilterKind.KALMAN, gain=K)


def _robust_problem(proc, meas, unc, epsilon):
    E1 = unc.E1
    M = meas.information - epsilon * (E1.T @ E1)
    Q = (unc.D1 @ unc.D1.T) / epsilon + proc.drive_intensity
    return CareProblem(A=proc.A, Q_const=Q, M_quad=M)


def robust_riccati(
    proc: ProcessModel, meas: MeasurementModel, unc: UncertaintyModel, epsilon: float
) -> CareSolution:
    """Stabilizing solution ``Q~`` of the guaranteed-cost Riccati equation.

    ::

        A Q + Q A^T + Q (eps E1^T E1 - H^T (J S J^T)^-1 H) Q
            + D1 D1^T / eps + G R G^T = 0

    Raises
    ------
    InvalidParameterError
        If ``epsilon <= 0``.
    InfeasibleEpsilonError
        If no stabilizing, positive semidefinite solution exists.
    """
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise InvalidParameterError(f"epsilon must be > 0, got {epsilon}")
    try:
        sol = solve_care(_robust_problem(proc, meas, unc, epsilon))
    except SolverError as exc:
        raise InfeasibleEpsilonError(epsilon, str(exc)) from exc
    ev = np.linalg.eigvalsh(sol.X)
    if ev.min() < -1e-10 * max(abs(ev.max()), np.finfo(float).tiny):
        raise InfeasibleEpsilonError(epsilon, "solution is not positive semidefinite")
    return sol


def q_plus(proc, meas, unc, epsilon) -> float:
    """``Q~(eps)[0, 0]``, or ``inf`` when ``eps`` is infeasible."""
    try:
        return float(robust_riccati(proc, meas, unc, epsilon).X[0, 0])
    except InfeasibleEpsilonError:
        return math.inf


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_log(f, lo, hi, tol):
    """Golden-section search for the minimum of ``f(exp(t))`` on ``[lo, hi]`` (log units)."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    while (b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(math.exp(d))
    return a, b


def optimize_epsilon(
    proc: ProcessModel,
    meas: MeasurementModel,
    unc: UncertaintyModel,
    scan_lo: float = 1e-2,
    scan_hi: float = 1e6,
    n_points: int = 200,
    rel_tol: float = 1e-4,
) -> EpsilonScanResult:
    """Find the epsilon minimizing the robust bound ``Q~(eps)[0, 0]``.

    A log-spaced coarse scan locates the best feasible grid point, then a
    golden-section search on ``log(eps)`` over the neighbouring grid cells
    shrinks the bracket to ``rel_tol`` relative width.
    """
    if not (0 < scan_lo < scan_hi) or not math.isfinite(scan_hi):
        raise InvalidParameterError(
            f"need 0 < scan_lo < scan_hi, got [{scan_lo}, {scan_hi}]"
        )
    if n_points < 2:
        raise InvalidParameterError("n_points must be at least 2")

    eps = np.logspace(math.log10(scan_lo), math.log10(scan_hi), n_points)
    eps[0], eps[-1] = scan_lo, scan_hi
    qp = np.array([q_plus(proc, meas, unc, e) for e in eps])
    if not np.any(np.isfinite(qp)):
        raise NoFeasibleEpsilonError(
            f"no feasible epsilon in [{scan_lo:g}, {scan_hi:g}]"
        )
    i = int(np.argmin(qp))
    lo = math.log(eps[max(i - 1, 0)])
    hi = math.log(eps[min(i + 1, n_points - 1)])

    f = lambda e: q_plus(proc, meas, unc, e)
    a, b = _golden_log(f, lo, hi, math.log1p(rel_tol))
    mid = 0.5 * (a + b)
    cands = {"a": math.exp(a), "mid": math.exp(mid), "b": math.exp(b)}
    vals = {k: f(v) for k, v in cands.items()}
    finite = [v for v in vals.values() if math.isfinite(v)]
    if finite and (max(finite) - min(finite)) <= 1e-9 * min(finite):
        eps_opt, q_opt = cands["mid"], vals["mid"]
    else:
        k = min(vals, key=vals.get)
        eps_opt, q_opt = cands[k], vals[k]
    # the coarse minimum may still beat an infeasible-riddled bracket
    if not q_opt <= qp[i]:
        eps_opt, q_opt = float(eps[i]), float(qp[i])

    at_lo = (i == 0) and eps_opt <= scan_lo * (1.0 + rel_tol)
    at_hi = (i == n_points - 1) and eps_opt >= scan_hi / (1.0 + rel_tol)
    return EpsilonScanResult(
        epsilons=eps,
        q_plus=np.where(np.isfinite(qp), qp, np.nan),
        epsilon_opt=float(eps_opt),
        q_plus_opt=float(q_opt),
        boundary_flag=bool(at_lo or at_hi),
    )


def design_robust(
    proc: ProcessModel, meas: MeasurementModel, unc: UncertaintyModel, epsilon: float
) -> FilterDesign:
    """Guaranteed-cost robust filter at a given ``epsilon``.

    ``L = A + eps Q~ E1^T E1 - Q~ H^T (J S J^T)^-1 H``, ``F`` and ``N`` inject
    the state and measurement noise through the gain ``Q~ H^T (J S J^T)^-1``.
    """
    Qt = robust_riccati(proc, meas, unc, epsilon).X
    gain = Qt @ _gain_factor(meas)
    F = gain @ meas.H
    L = (proc.A - F) + epsilon * (Qt @ unc.E1.T @ unc.E1)
    if not is_hurwitz(L):
        raise DesignFailureError(f"robust filter matrix is not Hurwitz at epsilon={epsilon:g}")
    return FilterDesign(
        L=L,
        F=F,
        N=gain @ meas.J,
        design_cov=Qt,
        kind=FilterKind.ROBUST,
        epsilon=float(epsilon),
        gain=gain,
    )
