"""
Resonant phase-noise plant, homodyne measurement models and structured
parameter uncertainty.

The phase ``phi`` is the output of a lightly damped second-order system
driven by unit-intensity white noise ``v``::

    G(s) = kappa / (s**2 + 2*zeta*omega_r*s + omega_r**2)

realized with state ``x = [phi, dphi/dt]``. Uncertainty enters only the
second row of the system matrix through ``A + D1 @ Delta @ E1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolationError, InvalidParameterError

__all__ = [
    "ResonantParams",
    "ProcessModel",
    "MeasurementModel",
    "UncertaintyModel",
    "Delta",
    "NOMINAL_PARAMS",
    "NOMINAL_ALPHA",
    "build_process_model",
    "frequency_response",
    "default_bode_grid",
    "build_homodyne_measurement",
    "build_dual_homodyne_measurement",
    "build_uncertainty",
    "realize_plant",
]

# Tolerance on ||Delta|| <= 1 so that grid points such as (-1, 0) built from
# linspace arithmetic are accepted.
_DELTA_NORM_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ResonantParams:
    """Gain, damping factor and resonant frequency (rad/s) of the PZT."""

    kappa: float
    zeta: float
    omega_r: float

    def __post_init__(self):
        for name in ("kappa", "zeta", "omega_r"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.omega_r <= 0:
            raise InvalidParameterError(f"omega_r must be > 0, got {self.omega_r}")
        if self.zeta <= 0:
            raise InvalidParameterError(f"zeta must be > 0, got {self.zeta}")

    @property
    def degenerate(self) -> bool:
        """True when the noise drive is switched off (``kappa == 0``)."""
        return self.kappa == 0


# 1 kHz resonance; the reference covariances correspond to 2*pi*1000 rad/s
# rather than the rounded 6.283e3.
NOMINAL_PARAMS = ResonantParams(kappa=1.0, zeta=0.01, omega_r=2.0 * math.pi * 1.0e3)
NOMINAL_ALPHA = 6.0e8


@dataclass(frozen=True)
class ProcessModel:
    """``dx/dt = A x + G v`` with ``E[v(t) v(s)] = R delta(t - s)``."""

    A: np.ndarray
    G: np.ndarray
    R: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(self.A))
        object.__setattr__(self, "G", _frozen(self.G))
        object.__setattr__(self, "R", _frozen(np.atleast_2d(self.R)))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def drive_intensity(self) -> np.ndarray:
        """``G R G^T``."""
        return self.G @ self.R @ self.G.T


@dataclass(frozen=True)
class MeasurementModel:
    """``theta = H x + J w`` with ``E[w(t) w(s)^T] = S delta(t - s)``.

    ``m`` (the number of columns of ``J``) is 1 for single homodyne
    detection and 2 for the dual-homodyne (heterodyne-equivalent) scheme.
    """

    H: np.ndarray
    J: np.ndarray
    S: np.ndarray
    alpha_mag: float

    def __post_init__(self):
        object.__setattr__(self, "H", _frozen(self.H))
        object.__setattr__(self, "J", _frozen(self.J))
        object.__setattr__(self, "S", _frozen(self.S))

    @property
    def m(self) -> int:
        return self.J.shape[1]

    @property
    def photon_flux(self) -> float:
        return self.alpha_mag ** 2

    @property
    def noise_intensity(self) -> np.ndarray:
        """``J S J^T`` (1x1)."""
        return self.J @ self.S @ self.J.T

    @property
    def information(self) -> np.ndarray:
        """``H^T (J S J^T)^-1 H``, the quadratic coefficient of the Kalman CARE."""
        return self.H.T @ np.linalg.solve(self.noise_intensity, self.H)


@dataclass(frozen=True)
class UncertaintyModel:
    """Structured uncertainty ``D1 Delta E1`` on the plant matrix."""

    D1: np.ndarray
    E1: np.ndarray
    mu1: float
    mu2: float

    def __post_init__(self):
        object.__setattr__(self, "D1", _frozen(self.D1))
        object.__setattr__(self, "E1", _frozen(self.E1))


@dataclass(frozen=True)
class Delta:
    """Realized uncertainty ``[delta1, delta2]`` with Euclidean norm at most 1."""

    delta1: float = 0.0
    delta2: float = 0.0

    def __post_init__(self):
        if math.hypot(self.delta1, self.delta2) > 1.0 + _DELTA_NORM_TOL:
            raise ConstraintViolationError(
                f"||Delta|| = {math.hypot(self.delta1, self.delta2):.4g} > 1 "
                f"for Delta = ({self.delta1}, {self.delta2})"
            )

    def as_row(self) -> np.ndarray:
        return np.array([[self.delta1, self.delta2]])


def build_process_model(params: ResonantParams) -> ProcessModel:
    """Companion-form state-space realization of the resonant noise process.

    A ``kappa == 0`` plant is returned with ``degenerate=True``; it has no
    noise drive, so every downstream covariance collapses to zero.
    """
    w = params.omega_r
    A = [[0.0, 1.0], [-w * w, -2.0 * params.zeta * w]]
    G = [[0.0], [params.kappa]]
    return ProcessModel(A=A, G=G, R=[[1.0]], degenerate=params.degenerate)


def frequency_response(params: ResonantParams, omegas) -> list[tuple[float, float]]:
    """Magnitude (dB) and phase (degrees) of ``G(j omega)``.

    The phase is unwrapped along the grid so that it runs continuously from
    0 at DC towards -180 degrees above the resonance.
    """
    w = np.asarray(omegas, dtype=float)
    if w.ndim != 1:
        raise InvalidParameterError("omegas must be a one-dimensional sequence")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidParameterError("omegas must be finite and non-negative")
    if w.size == 0:
        return []
    s = 1j * w
    g = params.kappa / (s * s + 2.0 * params.zeta * params.omega_r * s + params.omega_r ** 2)
    with np.errstate(divide="ignore"):
        mag_db = 20.0 * np.log10(np.abs(g))
    # unwrap across the whole grid, anchored at the first point's principal value
    phase = np.degrees(np.unwrap(np.angle(g)))
    return [(float(m), float(p)) for m, p in zip(mag_db, phase)]


def default_bode_grid(params: ResonantParams, n_points: int = 400) -> np.ndarray:
    """Log-spaced grid over ``[omega_r / 100, 100 omega_r]``."""
    return np.logspace(np.log10(params.omega_r / 100.0), np.log10(params.omega_r * 100.0), n_points)


def build_homodyne_measurement(alpha_mag: float) -> MeasurementModel:
    """Linearized adaptive-homodyne measurement, ``J = [1 / (2|alpha|)]``."""
    _check_alpha(alpha_mag)
    return MeasurementModel(
        H=[[1.0, 0.0]], J=[[1.0 / (2.0 * alpha_mag)]], S=np.eye(1), alpha_mag=float(alpha_mag)
    )


def build_dual_homodyne_measurement(alpha_mag: float) -> MeasurementModel:
    """First-order dual-homodyne measurement.

    Detector noise and vacuum-port noise each enter with weight
    ``1 / (2|alpha|)``, doubling the noise intensity relative to homodyne.
    """
    _check_alpha(alpha_mag)
    j = 1.0 / (2.0 * alpha_mag)
    return MeasurementModel(H=[[1.0, 0.0]], J=[[j, j]], S=np.eye(2), alpha_mag=float(alpha_mag))


def _check_alpha(alpha_mag):
    if not (math.isfinite(alpha_mag) and alpha_mag > 0):
        raise InvalidParameterError(f"alpha_mag must be > 0, got {alpha_mag}")


def build_uncertainty(params: ResonantParams, mu1: float, mu2: float) -> UncertaintyModel:
    """Uncertainty in ``omega_r**2`` (level ``mu1``) and in the damping term (``mu2``).

    Levels must lie in ``[0, 1]``; ``mu = 1`` is accepted as the boundary at
    which ``delta = -1`` removes the corresponding term entirely.
    """
    for name, mu in (("mu1", mu1), ("mu2", mu2)):
        if not (0.0 <= mu <= 1.0):
            raise InvalidParameterError(f"{name} must lie in [0, 1], got {mu}")
    w = params.omega_r
    E1 = np.diag([-mu1 * w * w, -2.0 * mu2 * params.zeta * w])
    return UncertaintyModel(D1=[[0.0], [1.0]], E1=E1, mu1=float(mu1), mu2=float(mu2))


def realize_plant(model: ProcessModel, unc: UncertaintyModel, d: Delta) -> ProcessModel:
    """Return the plant with system matrix ``A + D1 Delta E1``."""
    if not isinstance(d, Delta):
        d = Delta(*d)
    A = model.A + unc.D1 @ d.as_row() @ unc.E1
    return ProcessModel(A=A, G=model.G, R=model.R, degenerate=model.degenerate)
