"""
Dense solvers for the continuous-time algebraic Riccati equation (CARE) and
the Lyapunov equation, tuned for small, badly scaled problems.

The CARE is posed in filter form::

    A X + X A^T - X M X + Q = 0

where ``M`` may be indefinite (the guaranteed-cost filter subtracts
``eps * E1^T E1`` from the measurement information). Problem data in this
package span more than twenty orders of magnitude, so both solvers balance
their input with a power-of-two diagonal similarity before the Schur step
and certify the residual in the original coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidInputError, NoStabilizingSolutionError, SolverError, UnstableSystemError

__all__ = [
    "CareProblem",
    "CareSolution",
    "solve_care",
    "care_residual",
    "solve_lyapunov",
    "lyapunov_residual",
    "is_hurwitz",
    "RESIDUAL_TOL",
]

RESIDUAL_TOL = 1e-8
_SYM_TOL = 1e-12
_IMAG_AXIS_TOL = 1e-9


def _rel_asym(X):
    scale = np.linalg.norm(X)
    return 0.0 if scale == 0 else np.linalg.norm(X - X.T) / scale


def _square(name, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return X


@dataclass(frozen=True)
class CareProblem:
    """Data of ``A X + X A^T - X M_quad X + Q_const = 0``."""

    A: np.ndarray
    Q_const: np.ndarray
    M_quad: np.ndarray

    def __post_init__(self):
        A = _square("A", self.A)
        Q = _square("Q_const", self.Q_const)
        M = _square("M_quad", self.M_quad)
        if not (A.shape == Q.shape == M.shape):
            raise InvalidInputError(
                f"dimension mismatch: A {A.shape}, Q_const {Q.shape}, M_quad {M.shape}"
            )
        for name, X in (("Q_const", Q), ("M_quad", M)):
            if _rel_asym(X) > _SYM_TOL:
                raise InvalidInputError(f"{name} is not symmetric")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q_const", (Q + Q.T) / 2)
        object.__setattr__(self, "M_quad", (M + M.T) / 2)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class CareSolution:
    X: np.ndarray
    closed_loop: np.ndarray
    residual_rel: float
    stabilizing: bool


def care_residual(prob: CareProblem, X) -> np.ndarray:
    A, M, Q = prob.A, prob.M_quad, prob.Q_const
    return A @ X + X @ A.T - X @ M @ X + Q


def _care_rel(prob, X):
    return np.linalg.norm(care_residual(prob, X)) / max(np.linalg.norm(X), 1.0)


def is_hurwitz(A) -> bool:
    """True iff every eigenvalue of ``A`` has a strictly negative real part.

    "Strictly" means below ``-1e-12 * max(1, spectral radius)`` so that
    numerically imaginary eigenvalues count as unstable.
    """
    A = _square("A", A)
    ev = np.linalg.eigvals(A)
    rho = np.max(np.abs(ev)) if ev.size else 0.0
    return bool(np.all(ev.real < -1e-12 * max(1.0, rho)))


def _hamiltonian_solve(prob: CareProblem) -> np.ndarray:
    n = prob.n
    A, M, Q = prob.A, prob.M_quad, prob.Q_const
    # Filter-form CARE is the control form with A replaced by A^T.
    ham = np.block([[A.T, -M], [-Q, -A]])
    ev = np.linalg.eigvals(ham)
    rho = np.max(np.abs(ev))
    if rho == 0 or np.any(np.abs(ev.real) <= _IMAG_AXIS_TOL * rho):
        raise NoStabilizingSolutionError(
            "Hamiltonian has eigenvalues on the imaginary axis"
        )
    hb, (scale, _) = sla.matrix_balance(ham, permute=False, separate=True)
    _, Z, sdim = sla.schur(hb, output="real", sort="lhp")
    if sdim != n:
        raise NoStabilizingSolutionError(
            f"stable invariant subspace has dimension {sdim}, expected {n}"
        )
    # stable basis U = diag(scale) Z; judge conditioning on the balanced Z1 so
    # that pure diagonal scaling of the problem is not mistaken for rank loss
    Z1, Z2 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(Z1) > 1e12:
        raise NoStabilizingSolutionError("stable subspace is not a graph subspace")
    # X = U2 U1^-1 = S2 (Z2 Z1^-1) S1^-1
    Y = np.linalg.solve(Z1.T, Z2.T).T
    X = scale[n:, None] * Y / scale[None, :n]
    return (X + X.T) / 2


def solve_care(prob: CareProblem) -> CareSolution:
    """Stabilizing solution of the filter-form CARE.

    Ordered real Schur decomposition of the balanced Hamiltonian, followed by
    one Newton correction (kept only when it lowers the residual).

    Raises
    ------
    NoStabilizingSolutionError
        If the Hamiltonian has eigenvalues on the imaginary axis or the
        candidate solution does not stabilize ``A - X M``.
    SolverError
        If the certified residual exceeds ``RESIDUAL_TOL``.
    """
    X = _hamiltonian_solve(prob)
    res = _care_rel(prob, X)

    closed = prob.A - X @ prob.M_quad
    if is_hurwitz(closed):
        R = care_residual(prob, X)
        try:
            D = solve_lyapunov(closed, (R + R.T) / 2, check=False)
        except SolverError:
            D = None
        if D is not None:
            X_new = X + D
            X_new = (X_new + X_new.T) / 2
            res_new = _care_rel(prob, X_new)
            if res_new < res:
                X, res = X_new, res_new
                closed = prob.A - X @ prob.M_quad

    stabilizing = is_hurwitz(closed)
    if not stabilizing:
        raise NoStabilizingSolutionError("closed loop A - X M is not Hurwitz")
    if not res <= RESIDUAL_TOL:
        raise SolverError(f"CARE residual {res:.3g} exceeds {RESIDUAL_TOL:g}")
    X.flags.writeable = False
    return CareSolution(X=X, closed_loop=closed, residual_rel=float(res), stabilizing=stabilizing)


def lyapunov_residual(A, P, W) -> float:
    """``||A P + P A^T + W||_F / max(||P||_F, 1)``."""
    R = A @ P + P @ A.T + W
    return float(np.linalg.norm(R) / max(np.linalg.norm(P), 1.0))


def solve_lyapunov(A, W, check=True) -> np.ndarray:
    """Solve ``A P + P A^T + W = 0`` for symmetric ``P``.

    Bartels-Stewart on the balanced pair ``(T^-1 A T, T^-1 W T^-T)``.

    Parameters
    ----------
    A : (n, n) array_like
        Hurwitz system matrix.
    W : (n, n) array_like
        Symmetric forcing term.
    check : bool
        Verify stability and certify the residual. Internal callers that
        feed a residual (not a PSD matrix) turn this off.
    """
    A = _square("A", A)
    W = _square("W", W)
    if A.shape != W.shape:
        raise InvalidInputError(f"dimension mismatch: A {A.shape}, W {W.shape}")
    if _rel_asym(W) > _SYM_TOL:
        raise InvalidInputError("W is not symmetric")
    if check and not is_hurwitz(A):
        raise UnstableSystemError("Lyapunov equation requires a Hurwitz matrix")
    W = (W + W.T) / 2

    Ab, (t, _) = sla.matrix_balance(A, permute=False, separate=True)
    Wb = W / t[:, None] / t[None, :]
    Pb = sla.solve_continuous_lyapunov(Ab, -Wb)
    P = t[:, None] * Pb * t[None, :]
    P = (P + P.T) / 2
    if not np.all(np.isfinite(P)):
        raise SolverError("Lyapunov solve produced non-finite entries")
    if check:
        res = lyapunov_residual(A, P, W)
        if res > RESIDUAL_TOL:
            raise SolverError(f"Lyapunov residual {res:.3g} exceeds {RESIDUAL_TOL:g}")
    return P
