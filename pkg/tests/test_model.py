import numpy as np
import pytest

from bwlab import (BwParams, HysteresisCurve, HystereticState,
                   IntegrationError, evaluate_auxiliary, resisting_force,
                   simulate_batch, simulate_quasi_static, state_rates,
                   step_quasi_static, table_history)

from oracles import euler_quasi_static


def test_force_composition():
    p = BwParams(T=1.0, F_y=0.3, alpha=0.1, beta=0.5, n=2.0, variant="BW")
    f = resisting_force(p, u=0.02, z=0.7)
    expected = 0.1 * p.k0 * 0.02 + 0.9 * p.f_y_si * 0.7
    assert f == pytest.approx(expected, rel=1e-12)


def test_auxiliary_neutral_state(specimen_bw):
    aux = evaluate_auxiliary(specimen_bw, z=0.0, eps_n=0.0)
    assert aux.nu == 1.0
    assert aux.eta == 1.0
    # beta + gamma = 1 and nu = 1 pin the z saturation level at 1
    assert aux.z_u == pytest.approx(1.0)
    assert aux.h == 1.0  # zeta0 = 0 disables pinching entirely


def test_auxiliary_with_degradation_and_pinching(specimen_mbwbn):
    p = specimen_mbwbn
    eps = 0.8
    aux = evaluate_auxiliary(p, z=0.4, eps_n=eps, velocity_sign=1.0)
    assert aux.nu == pytest.approx(1.0 + p.delta_nu * eps)
    assert aux.eta == pytest.approx(1.0 + p.delta_eta * eps)
    assert aux.z_u == pytest.approx((1.0 / aux.nu) ** (1.0 / p.n))
    zeta1 = p.zeta0 * (1.0 - np.exp(-p.p * eps))
    zeta2 = (p.psi + p.delta_psi * eps) * (p.lam + zeta1)
    assert aux.zeta1 == pytest.approx(zeta1)
    assert aux.zeta2 == pytest.approx(zeta2)
    assert aux.h == pytest.approx(
        1.0 - zeta1 * np.exp(-((0.4 - p.q * aux.z_u) / zeta2) ** 2))
    assert 0.0 < aux.h < 1.0


def test_state_rates_zero_velocity(specimen_mbwbn):
    dz, deps = state_rates(specimen_mbwbn, z=0.3, eps_n=0.1, u_dot=0.0)
    assert dz == 0.0 and deps == 0.0


def test_state_rates_scale_linearly_with_velocity(specimen_bw):
    dz1, de1 = state_rates(specimen_bw, z=0.2, eps_n=0.0, u_dot=1.0)
    dz2, de2 = state_rates(specimen_bw, z=0.2, eps_n=0.0, u_dot=2.5)
    assert dz2 == pytest.approx(2.5 * dz1)
    assert de2 == pytest.approx(2.5 * de1)


def test_step_quasi_static_matches_full_run(specimen_mbwbn):
    disp = table_history(3, u_y=specimen_mbwbn.u_y).discretize()
    curve = simulate_quasi_static(specimen_mbwbn, disp)
    state = HystereticState.rest()
    for j in range(1, 20):
        state = step_quasi_static(specimen_mbwbn, state,
                                  float(disp[j] - disp[j - 1]))
        assert state.f_s == curve.f[j]
        assert state.u == pytest.approx(disp[j])


def test_scalar_and_batch_paths_agree_bitwise(specimen_bw, specimen_mbwbn):
    # same arithmetic order in both implementations, so exact equality
    for spec in (specimen_bw, specimen_mbwbn):
        disp = table_history(3, u_y=spec.u_y).discretize()
        scalar = simulate_quasi_static(spec, disp)
        f, z, eps, fail = simulate_batch([spec], disp)
        assert fail[0] < 0
        assert np.array_equal(scalar.f, f[0])


def test_batch_against_euler_oracle(specimen_mbwbn):
    disp = table_history(3, u_y=specimen_mbwbn.u_y).discretize()
    f, _, _, fail = simulate_batch([specimen_mbwbn], disp)
    assert fail[0] < 0
    f_ref = euler_quasi_static(specimen_mbwbn.to_vector(), disp, 20000)
    scale = np.max(np.abs(f_ref))
    assert np.max(np.abs(f[0] - f_ref)) / scale < 1e-4


def test_batch_broadcast_and_per_row_series(specimen_bw, specimen_mbwbn):
    sets = [specimen_bw, specimen_mbwbn]
    shared = table_history(1, u_y=0.02).discretize()
    f1, _, _, fail1 = simulate_batch(sets, shared)
    assert f1.shape == (2, shared.size)
    assert np.all(fail1 < 0)
    per_row = np.vstack([shared, 0.5 * shared])
    f2, _, _, fail2 = simulate_batch(sets, per_row)
    assert np.array_equal(f2[0], f1[0])
    assert not np.array_equal(f2[1], f1[1])


def test_batch_elastic_limit_is_linear():
    # alpha = 1 is outside the admissible sampling box but the engine
    # accepts raw rows; the hysteretic branch must vanish identically
    theta = np.array([[1.0, 0.3, 1.0, 0.5, 2.0,
                       0.0, 0.0, 0.0, 0.0, 0.01, 0.1, 0.0, 0.01]])
    disp = table_history(2, u_y=0.05).discretize()
    f, _, _, fail = simulate_batch(theta, disp)
    assert fail[0] < 0
    k0 = (2.0 * np.pi / 1.0) ** 2
    assert np.allclose(f[0], k0 * disp, rtol=0, atol=1e-12)


def test_batch_flags_divergent_rows(specimen_bw):
    # T = 0 gives a zero yield displacement and an immediate blow-up;
    # the clean row must still come back intact
    bad = np.array([0.0, 0.3, 0.1, 0.5, 2.0,
                    0.0, 0.0, 0.0, 0.0, 0.01, 0.1, 0.0, 0.01])
    theta = np.vstack([bad, specimen_bw.to_vector()])
    disp = table_history(1, u_y=specimen_bw.u_y).discretize()
    f, _, _, fail = simulate_batch(theta, disp)
    assert fail[0] >= 0
    assert fail[1] < 0
    # failed rows hold zeros from the first bad step on
    assert np.all(f[0, fail[0]:] == 0.0)
    assert np.isfinite(f[1]).all()
    assert np.any(f[1] != 0.0)


def test_simulate_input_validation(specimen_bw):
    with pytest.raises(ValueError, match="start at 0"):
        simulate_quasi_static(specimen_bw, [0.01, 0.02])
    with pytest.raises(ValueError, match="non-finite"):
        simulate_quasi_static(specimen_bw, [0.0, np.nan])
    with pytest.raises(ValueError, match="1-d"):
        simulate_quasi_static(specimen_bw, [[0.0, 0.01]])
    with pytest.raises(ValueError, match="start at 0"):
        simulate_batch([specimen_bw], np.array([0.01, 0.02]))
    with pytest.raises(ValueError, match="substeps"):
        simulate_quasi_static(specimen_bw, [0.0, 0.01], substeps=0)


def test_integration_error_reports_step():
    err = IntegrationError("response blew up", step_index=7)
    assert "step 7" in str(err)
    assert err.step_index == 7


def test_curve_csv_round_trip(tmp_path, specimen_bw):
    disp = table_history(1, u_y=specimen_bw.u_y).discretize()
    curve = simulate_quasi_static(specimen_bw, disp)
    path = tmp_path / "curve.csv"
    curve.to_csv(path)
    back = HysteresisCurve.from_csv(path)
    assert len(back) == len(curve)
    assert np.allclose(back.u, curve.u, rtol=1e-8)
    assert np.allclose(back.f, curve.f, rtol=1e-8)


def test_curve_validation():
    with pytest.raises(ValueError):
        HysteresisCurve(u=np.array([0.0, 1.0]), f=np.array([0.0]))
    with pytest.raises(ValueError):
        HysteresisCurve(u=np.array([0.0, np.inf]), f=np.array([0.0, 1.0]))
