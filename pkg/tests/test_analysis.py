import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SWEEP_CONFIGS
from oracles import lyapunov_kron, rel_err
from rpf import (
    NOMINAL_ALPHA,
    NOMINAL_PARAMS,
    Delta,
    SweepAxis,
    augment,
    build_dual_homodyne_measurement,
    build_process_model,
    build_uncertainty,
    closed_loop_error,
    default_delta_grid,
    design_kalman,
    design_robust,
    evaluate,
    optimize_epsilon,
    realize_plant,
    sql_sigma2,
    sweep,
)
from rpf.errors import InvalidInputError, UnstableLoopError
from rpf.filters import FilterDesign, FilterKind

P11 = 3.33785970e-14


def test_augment_kalman_blocks(proc, meas):
    k = design_kalman(proc, meas)
    aug = augment(proc, k)
    np.testing.assert_array_equal(aug.A_bar[:2, :2], proc.A)
    np.testing.assert_array_equal(aug.A_bar[:2, 2:], 0.0)
    np.testing.assert_array_equal(aug.A_bar[2:, :2], k.F)
    np.testing.assert_array_equal(aug.A_bar[2:, 2:], proc.A - k.gain @ meas.H)
    assert aug.B_bar.shape == (4, 2)
    np.testing.assert_array_equal(aug.B_bar[:2, :1], proc.G)
    np.testing.assert_array_equal(aug.B_bar[:2, 1:], 0.0)
    np.testing.assert_array_equal(aug.B_bar[2:, :1], 0.0)
    np.testing.assert_array_equal(aug.B_bar[2:, 1:], k.N)
    np.testing.assert_array_equal(aug.error_selector, np.hstack([np.eye(2), -np.eye(2)]))


def test_augment_robust_blocks(proc, meas, unc05):
    r = design_robust(proc, meas, unc05, 35.0)
    plant = realize_plant(proc, unc05, Delta(-0.5, 0.0))
    aug = augment(plant, r)
    np.testing.assert_array_equal(aug.A_bar[:2, :2], plant.A)
    E = unc05.E1
    L = aug.A_bar[2:, 2:]
    np.testing.assert_allclose(L - (proc.A - r.F), 35.0 * r.design_cov @ E.T @ E, rtol=1e-9)


def test_augment_dimension_mismatch(proc, meas):
    k = design_kalman(proc, meas)
    bad = FilterDesign(L=np.eye(3), F=np.eye(3), N=np.ones((3, 1)), design_cov=np.eye(3), kind=FilterKind.KALMAN)
    with pytest.raises(InvalidInputError):
        augment(proc, bad)
    bad_n = FilterDesign(L=k.L, F=k.F, N=np.ones((3, 1)), design_cov=k.design_cov, kind=FilterKind.KALMAN)
    with pytest.raises(InvalidInputError):
        augment(proc, bad_n)


def test_nominal_kalman_consistency(proc, meas):
    k = design_kalman(proc, meas)
    ec = closed_loop_error(augment(proc, k))
    assert rel_err(ec.sigma2, P11) <= 1e-6
    assert rel_err(ec.sigma2, k.design_cov[0, 0]) <= 1e-6
    np.testing.assert_allclose(ec.Sigma, k.design_cov, rtol=1e-6)


def test_error_covariance_properties(proc, meas, unc05):
    r = design_robust(proc, meas, unc05, 35.0)
    aug = augment(realize_plant(proc, unc05, Delta(-1, 0)), r)
    ec = closed_loop_error(aug)
    S = ec.Sigma
    assert np.linalg.norm(S - S.T) / np.linalg.norm(S) <= 1e-12
    assert np.linalg.eigvalsh(S).min() >= -1e-10 * np.linalg.norm(S)
    assert ec.sigma2 > 0 and ec.sigma2 == S[0, 0]
    C = aug.error_selector
    P = ec.P_S
    np.testing.assert_array_equal(S, P[:2, :2] - P[:2, 2:] - P[:2, 2:].T + P[2:, 2:])
    np.testing.assert_allclose(S, C @ P @ C.T, rtol=1e-12, atol=1e-12 * np.abs(S).max())
    ref = lyapunov_kron(aug.A_bar, aug.B_bar @ aug.B_bar.T)
    assert rel_err(ec.sigma2, (C @ ref @ C.T)[0, 0]) <= 1e-9


def random_plants(n=10, seed=20240611):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        mu1, mu2 = rng.uniform(0, 0.9, size=2)
        ang, rad = rng.uniform(0, 2 * np.pi), np.sqrt(rng.uniform(0, 1))
        out.append((float(mu1), float(mu2), Delta(rad * np.cos(ang), rad * np.sin(ang))))
    return out


@pytest.mark.parametrize("mu1,mu2,d", random_plants())
def test_kalman_consistency_on_perturbed_plants(proc, meas, mu1, mu2, d):
    plant = realize_plant(proc, build_uncertainty(NOMINAL_PARAMS, mu1, mu2), d)
    k = design_kalman(plant, meas)
    assert rel_err(closed_loop_error(augment(plant, k), d).sigma2, k.design_cov[0, 0]) <= 1e-6


def test_nominal_robust_not_better_than_kalman(proc, meas, unc05):
    r = design_robust(proc, meas, unc05, 35.0)
    assert evaluate(proc, r) >= P11


def test_nominal_robust_within_bound_reference_config(proc, meas, unc05):
    r = design_robust(proc, meas, unc05, 35.0)
    assert evaluate(proc, r) <= 3.38608462e-14


@pytest.mark.parametrize("mu1,mu2,axis", SWEEP_CONFIGS)
def test_nominal_ordering(proc, meas, mu1, mu2, axis):
    unc = build_uncertainty(NOMINAL_PARAMS, mu1, mu2)
    eps = optimize_epsilon(proc, meas, unc).epsilon_opt
    r = design_robust(proc, meas, unc, eps)
    s_k = evaluate(proc, design_kalman(proc, meas))
    s_r = evaluate(proc, r)
    assert s_k <= s_r
    assert s_r <= r.design_cov[0, 0] * (1 + 1e-6), f"sigma2/Q+ = {s_r / r.design_cov[0, 0]:.4f}"


def test_unstable_loop_reports_delta(proc, meas):
    unc = build_uncertainty(NOMINAL_PARAMS, 0.0, 1.0)
    d = Delta(0.0, -1.0)
    aug = augment(realize_plant(proc, unc, d), design_kalman(proc, meas))
    with pytest.raises(UnstableLoopError) as info:
        closed_loop_error(aug, d)
    assert info.value.delta == d


# --- SQL ------------------------------------------------------------------------


def test_sql_above_kalman_at_nominal(proc, meas):
    unc = build_uncertainty(NOMINAL_PARAMS, 0.0, 0.0)
    s = sql_sigma2(NOMINAL_PARAMS, unc, Delta(), NOMINAL_ALPHA)
    assert s > P11
    # structural: doubled noise intensity
    d = build_dual_homodyne_measurement(NOMINAL_ALPHA).noise_intensity[0, 0]
    assert d == 2 * meas.noise_intensity[0, 0]


@settings(max_examples=15, deadline=None)
@given(mu1=st.floats(0, 0.9), mu2=st.floats(0, 0.9), a=st.floats(0, 2 * np.pi), r=st.floats(0, 1))
def test_sql_lyapunov_consistency(mu1, mu2, a, r):
    unc = build_uncertainty(NOMINAL_PARAMS, mu1, mu2)
    d = Delta(r * np.cos(a), r * np.sin(a))
    s = sql_sigma2(NOMINAL_PARAMS, unc, d, NOMINAL_ALPHA)
    plant = realize_plant(build_process_model(NOMINAL_PARAMS), unc, d)
    k = design_kalman(plant, build_dual_homodyne_measurement(NOMINAL_ALPHA))
    aug = augment(plant, k)
    assert aug.B_bar.shape == (4, 3)
    C = aug.error_selector
    ref = (C @ lyapunov_kron(aug.A_bar, aug.B_bar @ aug.B_bar.T) @ C.T)[0, 0]
    assert rel_err(s, ref) <= 1e-6


def test_sql_softened_resonance():
    unc = build_uncertainty(NOMINAL_PARAMS, 0.8, 0.0)
    s = sql_sigma2(NOMINAL_PARAMS, unc, Delta(-1.0, 0.0), NOMINAL_ALPHA)
    assert np.isfinite(s) and s > 0


# --- sweeps ---------------------------------------------------------------------


def test_sweep_reference_config(unc05):
    res = sweep(NOMINAL_PARAMS, NOMINAL_ALPHA, unc05, "delta1", default_delta_grid(), include_sql=True)
    assert res.axis is SweepAxis.DELTA1 and len(res.points) == 41
    assert np.all(np.diff(res.deltas) > 0)
    mid = res.points[20]
    assert mid.delta == 0.0
    assert rel_err(mid.sigma2_kalman, P11) <= 1e-6
    first = res.points[0]
    assert first.sigma2_robust < first.sigma2_kalman
    for p in res.points:
        assert not p.is_gap
        assert p.sigma2_robust > 0 and p.sigma2_kalman > 0 and p.sigma2_sql > 0
    assert 30 <= res.epsilon_opt <= 40


def test_sweep_delta2_without_sql():
    unc = build_uncertainty(NOMINAL_PARAMS, 0.0, 0.9)
    res = sweep(NOMINAL_PARAMS, NOMINAL_ALPHA, unc, SweepAxis.DELTA2, default_delta_grid())
    assert all(p.sigma2_sql is None for p in res.points)
    assert np.all(np.isnan(res.column("sigma2_sql")))
    assert res.points[0].sigma2_robust < res.points[0].sigma2_kalman


def test_sweep_records_gap():
    unc = build_uncertainty(NOMINAL_PARAMS, 0.0, 1.0)
    res = sweep(NOMINAL_PARAMS, NOMINAL_ALPHA, unc, "delta2", default_delta_grid(), include_sql=True)
    assert res.points[0].is_gap and res.points[0].sigma2_sql is None
    assert np.isnan(res.column("sigma2_kalman")[0])
    assert not any(p.is_gap for p in res.points[1:])


def test_sweep_fixed_epsilon(unc05):
    res = sweep(NOMINAL_PARAMS, NOMINAL_ALPHA, unc05, "delta1", [-1.0, 0.0, 1.0], epsilon=35.0)
    assert res.epsilon_opt == 35.0
    assert rel_err(res.q_bound, 3.38608462e-14) <= 1e-6


@pytest.mark.parametrize("grid", [[], [0.0, 0.0], [0.5, -0.5], [-1.5, 0.0], [0.0, 1.01], [[0.0]]])
def test_sweep_grid_validation(unc05, grid):
    with pytest.raises(InvalidInputError):
        sweep(NOMINAL_PARAMS, NOMINAL_ALPHA, unc05, "delta1", grid, epsilon=35.0)


def test_sweep_deterministic(unc05):
    a = sweep(NOMINAL_PARAMS, NOMINAL_ALPHA, unc05, "delta1", default_delta_grid(11))
    b = sweep(NOMINAL_PARAMS, NOMINAL_ALPHA, unc05, "delta1", default_delta_grid(11))
    assert a == b
