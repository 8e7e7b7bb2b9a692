"""
Monte-Carlo check of steady-state error variances.

Integrates the augmented plant/filter system with Euler-Maruyama::

    xbar[k+1] = xbar[k] + Abar xbar[k] dt + Bbar sqrt(dt) xi[k]

with ``xi[k]`` i.i.d. standard normal. Normals come from a PCG64 bit
generator seeded by ``SimConfig.seed`` (ziggurat sampling, drawn inside
the compiled loop in step order, channel order within a step), so the seed
fixes the whole increment stream.

The phase error ``e1 = xbar[0] - xbar[2]`` is squared and time-averaged
over ``n_batches`` equal batches after a settling period.

When the filter mismatches the plant, part of ``e1`` is a slowly decaying,
narrow-band copy of the plant state, and the plain time average converges
slowly. The plant block alone has closed-form stationary moments, so the
batch means of ``x1**2``, ``x2**2`` and ``x1*x2`` serve as control variates:
``sigma2_hat`` is the intercept of the least-squares fit of the ``e1**2``
batch means on the centred control batch means. The plain average is
reported alongside as ``sigma2_raw``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .analysis import AugmentedSystem, augment
from .errors import InvalidConfigError, InvalidInputError, UnstableLoopError
from .filters import FilterDesign
from .model import ProcessModel
from .solvers import is_hurwitz

__all__ = ["SimConfig", "SimResult", "simulate", "simulate_sweep_point", "plant_moments"]

_MAX_DT_RHO = 0.1


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    ``substeps`` > 1 builds each Wiener increment from that many standard
    normals (``sum / sqrt(substeps)``), so a run at ``dt`` with
    ``substeps=2`` follows the same Brownian path as a run at ``dt / 2``.
    """

    dt: float = 1e-8
    t_settle: float = 0.1
    t_measure: float = 1.0
    seed: int = 1
    scheme: str = "euler_maruyama"
    n_batches: int = 40
    control_variate: bool = True
    substeps: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidConfigError(f"dt must be > 0, got {self.dt}")
        if not (math.isfinite(self.t_settle) and self.t_settle > 0):
            raise InvalidConfigError(f"t_settle must be > 0, got {self.t_settle}")
        if not (math.isfinite(self.t_measure) and self.t_measure > 0):
            raise InvalidConfigError(f"t_measure must be > 0, got {self.t_measure}")
        if self.scheme != "euler_maruyama":
            raise InvalidConfigError(f"unknown scheme {self.scheme!r}")
        if self.n_batches < 20:
            raise InvalidConfigError("n_batches must be at least 20")
        if not (0 <= self.seed < 2 ** 64):
            raise InvalidConfigError("seed must be an unsigned 64-bit integer")
        if self.substeps < 1:
            raise InvalidConfigError("substeps must be >= 1")

    @property
    def settle_steps(self) -> int:
        return int(round(self.t_settle / self.dt))

    @property
    def per_batch(self) -> int:
        return int(round(self.t_measure / self.dt)) // self.n_batches

    def check_stability(self, A_bar) -> None:
        """Reject step sizes with ``dt * spectral_radius(A_bar) >= 0.1``."""
        rho = float(np.max(np.abs(np.linalg.eigvals(A_bar))))
        if self.dt * rho >= _MAX_DT_RHO:
            raise InvalidConfigError(
                f"dt * spectral_radius = {self.dt * rho:.3g} >= {_MAX_DT_RHO}; reduce dt"
            )


@dataclass(frozen=True)
class SimResult:
    sigma2_hat: float
    stderr: float
    n_samples: int
    seed: int
    sigma2_raw: float
    stderr_raw: float
    control_variate: bool


@numba.njit
def _em_step(P, B, x0, x1, x2, x3, rng, z, substeps, scale):
    y0 = P[0, 0] * x0 + P[0, 1] * x1 + P[0, 2] * x2 + P[0, 3] * x3
    y1 = P[1, 0] * x0 + P[1, 1] * x1 + P[1, 2] * x2 + P[1, 3] * x3
    y2 = P[2, 0] * x0 + P[2, 1] * x1 + P[2, 2] * x2 + P[2, 3] * x3
    y3 = P[3, 0] * x0 + P[3, 1] * x1 + P[3, 2] * x2 + P[3, 3] * x3
    for j in range(B.shape[1]):
        w = rng.standard_normal()
        y0 += B[0, j] * w
        y1 += B[1, j] * w
        y2 += B[2, j] * w
        y3 += B[3, j] * w
    return y0, y1, y2, y3


@numba.njit
def _em_substep(P, B, x0, x1, x2, x3, rng, z, substeps, scale):
    # increments accumulated sub-step-major to match the stream of a dt/substeps run
    m = B.shape[1]
    for j in range(m):
        z[j] = 0.0
    for _ in range(substeps):
        for j in range(m):
            z[j] += rng.standard_normal()
    y0 = P[0, 0] * x0 + P[0, 1] * x1 + P[0, 2] * x2 + P[0, 3] * x3
    y1 = P[1, 0] * x0 + P[1, 1] * x1 + P[1, 2] * x2 + P[1, 3] * x3
    y2 = P[2, 0] * x0 + P[2, 1] * x1 + P[2, 2] * x2 + P[2, 3] * x3
    y3 = P[3, 0] * x0 + P[3, 1] * x1 + P[3, 2] * x2 + P[3, 3] * x3
    for j in range(m):
        w = z[j] * scale
        y0 += B[0, j] * w
        y1 += B[1, j] * w
        y2 += B[2, j] * w
        y3 += B[3, j] * w
    return y0, y1, y2, y3


def _make_runner(step):
    # closing over `step` lets numba inline it; passing it as an argument does not
    @numba.njit
    def run(x, P, B, rng, settle, per_batch, substeps, sums):
        z = np.empty(B.shape[1])
        scale = 1.0 / math.sqrt(substeps)
        x0, x1, x2, x3 = x[0], x[1], x[2], x[3]
        for _ in range(settle):
            x0, x1, x2, x3 = step(P, B, x0, x1, x2, x3, rng, z, substeps, scale)
        for b in range(sums.shape[0]):
            a_e = 0.0
            a_11 = 0.0
            a_22 = 0.0
            a_12 = 0.0
            for _ in range(per_batch):
                x0, x1, x2, x3 = step(P, B, x0, x1, x2, x3, rng, z, substeps, scale)
                e = x0 - x2
                a_e += e * e
                a_11 += x0 * x0
                a_22 += x1 * x1
                a_12 += x0 * x1
            sums[b, 0] = a_e
            sums[b, 1] = a_11
            sums[b, 2] = a_22
            sums[b, 3] = a_12
        x[0], x[1], x[2], x[3] = x0, x1, x2, x3

    return run


_run_plain = _make_runner(_em_step)
_run_substeps = _make_runner(_em_substep)


def plant_moments(A_bar, B_bar) -> Optional[np.ndarray]:
    """Stationary ``(E x1^2, E x2^2, E x1 x2)`` of the plant block, or None.

    Closed form for the companion plant ``[[0, 1], [-a, -b]]`` driven only
    in its second state with intensity ``q``: ``q / (2ab)``, ``q / (2b)``, 0.
    """
    A = np.asarray(A_bar)[:2, :2]
    Bp = np.asarray(B_bar)[:2]
    if A[0, 0] != 0.0 or A[0, 1] != 1.0 or np.any(Bp[0] != 0.0):
        return None
    a, b = -A[1, 0], -A[1, 1]
    q = float(Bp[1] @ Bp[1])
    if not (a > 0 and b > 0 and q > 0):
        return None
    return np.array([q / (2 * a * b), q / (2 * b), 0.0])


def _control_variate(y, controls, means):
    nb = y.size
    X = np.column_stack([np.ones(nb), controls - means])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = nb - X.shape[1]
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.pinv(X.T @ X)
    return float(coef[0]), math.sqrt(max(cov[0, 0], 0.0))


def simulate(aug: AugmentedSystem, cfg: SimConfig, x0=None) -> SimResult:
    """Empirical steady-state variance of the phase error ``e1 = x1 - xhat1``.

    Parameters
    ----------
    aug : AugmentedSystem
        Closed loop to integrate (two plant states, two filter states).
    cfg : SimConfig
        Step size, durations, batching, seed.
    x0 : array_like, optional
        Initial augmented state; zero by default.

    Raises
    ------
    UnstableLoopError
        If ``A_bar`` is not Hurwitz.
    InvalidConfigError
        If ``dt * spectral_radius(A_bar) >= 0.1`` or the batches are empty.
    """
    A_bar = np.asarray(aug.A_bar, dtype=float)
    B_bar = np.asarray(aug.B_bar, dtype=float)
    if A_bar.shape != (4, 4) or B_bar.ndim != 2 or B_bar.shape[0] != 4:
        raise InvalidInputError(
            f"expected a 4-state augmented loop, got A_bar {A_bar.shape}, B_bar {B_bar.shape}"
        )
    if not is_hurwitz(A_bar):
        raise UnstableLoopError("closed loop is not asymptotically stable")
    cfg.check_stability(A_bar)
    per_batch = cfg.per_batch
    if per_batch < 2:
        raise InvalidConfigError("t_measure too short for the requested number of batches")

    Phi = np.ascontiguousarray(np.eye(4) + A_bar * cfg.dt)
    Bs = np.ascontiguousarray(B_bar * math.sqrt(cfg.dt))
    x = np.zeros(4) if x0 is None else np.array(x0, dtype=float).reshape(4)
    sums = np.zeros((cfg.n_batches, 4))
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    run = _run_plain if cfg.substeps == 1 else _run_substeps
    run(x, Phi, Bs, rng, cfg.settle_steps, per_batch, cfg.substeps, sums)

    means = sums / per_batch
    y = means[:, 0]
    raw = float(y.mean())
    raw_se = float(y.std(ddof=1) / math.sqrt(cfg.n_batches))

    moments = plant_moments(A_bar, B_bar) if cfg.control_variate else None
    if moments is not None:
        est, se = _control_variate(y, means[:, 1:], moments)
    else:
        est, se = raw, raw_se
    return SimResult(
        sigma2_hat=est,
        stderr=se,
        n_samples=per_batch * cfg.n_batches,
        seed=cfg.seed,
        sigma2_raw=raw,
        stderr_raw=raw_se,
        control_variate=moments is not None,
    )


def simulate_sweep_point(plant: ProcessModel, filt: FilterDesign, cfg: SimConfig) -> SimResult:
    """``simulate(augment(plant, filt), cfg)``."""
    return simulate(augment(plant, filt), cfg)
