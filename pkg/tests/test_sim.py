import math
from dataclasses import replace

import numpy as np
import pytest

from oracles import lyapunov_kron, rel_err
from rpf import (
    NOMINAL_PARAMS,
    AugmentedSystem,
    Delta,
    SimConfig,
    augment,
    build_uncertainty,
    closed_loop_error,
    design_kalman,
    design_robust,
    plant_moments,
    realize_plant,
    simulate,
    simulate_sweep_point,
)
from rpf.errors import InvalidConfigError, InvalidInputError, UnstableLoopError

SHORT = SimConfig(dt=1e-8, t_settle=0.01, t_measure=0.02, seed=7, n_batches=20)


@pytest.fixture(scope="module")
def kalman_loop(proc, meas):
    return augment(proc, design_kalman(proc, meas))


def test_same_seed_bit_identical(kalman_loop):
    assert simulate(kalman_loop, SHORT) == simulate(kalman_loop, SHORT)


def test_different_seed_differs(kalman_loop):
    a = simulate(kalman_loop, SHORT)
    b = simulate(kalman_loop, replace(SHORT, seed=8))
    assert a.sigma2_hat != b.sigma2_hat


def test_result_fields(kalman_loop):
    r = simulate(kalman_loop, SHORT)
    assert r.sigma2_hat >= 0 and r.stderr > 0 and r.stderr_raw > 0
    assert r.seed == 7
    assert r.n_samples == SHORT.per_batch * 20 == 2_000_000
    assert r.control_variate


def reference_em(aug, cfg):
    """Plain-Python Euler-Maruyama with the documented normal stream."""
    Phi = np.eye(4) + aug.A_bar * cfg.dt
    B = aug.B_bar * math.sqrt(cfg.dt)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    x = [0.0] * 4
    acc = []

    def step(x):
        y = [Phi[i, 0] * x[0] + Phi[i, 1] * x[1] + Phi[i, 2] * x[2] + Phi[i, 3] * x[3] for i in range(4)]
        for j in range(B.shape[1]):
            w = rng.standard_normal()
            for i in range(4):
                y[i] += B[i, j] * w
        return y

    for _ in range(cfg.settle_steps):
        x = step(x)
    for _ in range(cfg.n_batches):
        s = 0.0
        for _ in range(cfg.per_batch):
            x = step(x)
            s += (x[0] - x[2]) ** 2
        acc.append(s / cfg.per_batch)
    return float(np.mean(acc))


def test_kernel_matches_reference_integrator(kalman_loop):
    cfg = SimConfig(dt=1e-8, t_settle=5e-8, t_measure=2e-6, seed=3, n_batches=20, control_variate=False)
    r = simulate(kalman_loop, cfg)
    assert not r.control_variate
    assert r.sigma2_hat == pytest.approx(reference_em(kalman_loop, cfg), rel=1e-12)


def test_noise_free_loop_decays(kalman_loop):
    quiet = AugmentedSystem(kalman_loop.A_bar, np.zeros_like(kalman_loop.B_bar), kalman_loop.error_selector)
    r = simulate(quiet, SHORT, x0=[1e-7, 1e-4, 0.0, 0.0])
    noisy = simulate(kalman_loop, SHORT)
    assert r.sigma2_hat < 1e-12 * noisy.sigma2_hat
    assert not r.control_variate


def test_doubling_noise_quadruples_variance(kalman_loop):
    loud = AugmentedSystem(kalman_loop.A_bar, 2 * kalman_loop.B_bar, kalman_loop.error_selector)
    a = simulate(kalman_loop, SHORT)
    b = simulate(loud, SHORT)
    assert b.sigma2_hat == pytest.approx(4 * a.sigma2_hat, rel=1e-9)
    assert b.sigma2_raw == pytest.approx(4 * a.sigma2_raw, rel=1e-12)


def test_halving_dt_within_two_stderr(kalman_loop):
    base = SimConfig(dt=2e-8, t_settle=0.1, t_measure=0.05, seed=11, substeps=2)
    fine = SimConfig(dt=1e-8, t_settle=0.1, t_measure=0.05, seed=11)
    a, b = simulate(kalman_loop, base), simulate(kalman_loop, fine)
    assert abs(a.sigma2_hat - b.sigma2_hat) < 2 * max(a.stderr, b.stderr)


def test_nominal_kalman_within_five_percent(kalman_loop):
    r = simulate(kalman_loop, SimConfig(dt=1e-8, t_settle=0.1, t_measure=0.05, seed=1))
    assert rel_err(r.sigma2_hat, 3.33786e-14) < 0.05


def test_sweep_point_composition(proc, meas, unc05):
    d = Delta(-1.0, 0.0)
    plant = realize_plant(proc, unc05, d)
    filt = design_robust(proc, meas, unc05, 35.0)
    cfg = SimConfig(dt=1e-8, t_settle=0.1, t_measure=0.05, seed=5)
    r = simulate_sweep_point(plant, filt, cfg)
    assert r == simulate(augment(plant, filt), cfg)
    lyap = closed_loop_error(augment(plant, filt), d).sigma2
    assert abs(r.sigma2_hat - lyap) <= 3 * r.stderr


def test_unstable_boundary_matches_gap(proc, meas):
    unc = build_uncertainty(NOMINAL_PARAMS, 0.0, 1.0)
    aug = augment(realize_plant(proc, unc, Delta(0.0, -1.0)), design_kalman(proc, meas))
    with pytest.raises(UnstableLoopError):
        simulate(aug, SHORT)


def test_dt_guard(kalman_loop):
    with pytest.raises(InvalidConfigError):
        simulate(kalman_loop, SimConfig(dt=1e-5, t_settle=0.01, t_measure=0.02))
    with pytest.raises(InvalidConfigError):
        SimConfig(dt=1e-5).check_stability(kalman_loop.A_bar)
    SimConfig(dt=1e-8).check_stability(kalman_loop.A_bar)


def test_too_short_measurement(kalman_loop):
    with pytest.raises(InvalidConfigError):
        simulate(kalman_loop, SimConfig(dt=1e-8, t_settle=1e-6, t_measure=2e-7, n_batches=20))


def test_non_augmented_input():
    with pytest.raises(InvalidInputError):
        simulate(AugmentedSystem(-np.eye(2), np.eye(2), np.eye(2)), SHORT)


@pytest.mark.parametrize(
    "kw",
    [dict(dt=0.0), dict(dt=-1e-8), dict(t_settle=0.0), dict(t_measure=-1.0), dict(scheme="rk4"),
     dict(n_batches=10), dict(seed=-1), dict(seed=2**64), dict(substeps=0), dict(dt=math.nan)],
)
def test_config_validation(kw):
    with pytest.raises(InvalidConfigError):
        SimConfig(**kw)


def test_plant_moments_match_lyapunov(proc, meas, unc05):
    plant = realize_plant(proc, unc05, Delta(-1.0, 0.0))
    aug = augment(plant, design_robust(proc, meas, unc05, 35.0))
    m = plant_moments(aug.A_bar, aug.B_bar)
    P = lyapunov_kron(plant.A, plant.drive_intensity)
    assert rel_err(m[0], P[0, 0]) < 1e-12
    assert rel_err(m[1], P[1, 1]) < 1e-12
    assert abs(P[0, 1]) < 1e-12 * math.sqrt(P[0, 0] * P[1, 1]) and m[2] == 0.0


def test_plant_moments_unavailable():
    A = -np.eye(4)
    assert plant_moments(A, np.ones((4, 2))) is None
