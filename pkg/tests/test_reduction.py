import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sigmak import reduction as R
from sigmak.conformal import axisym_spectra
from sigmak.errors import ConeExit, DomainError, NoConvergence, StepUnderflow
from sigmak.kfunc import SphereFunction
from sigmak.sphere import SphereAxisymField, sphere_area, sphere_rule, theta_grid

AXI = "3/2 + 0.1*(2*x5**2 - 1) + 0.05*x5"
N4 = 4


@pytest.fixture(scope="module")
def K():
    return SphereFunction(AXI, N4)


def test_round_curvature_and_linearization_constants():
    assert R.round_curvature(4, 2) == 1.5
    assert R.d_nk(4, 2) == 1.5
    # the coefficient as printed with C(n, k) gives 3, i.e. an l = 2 eigenvalue of 18
    assert R.d_nk_printed(4, 2) == 3.0
    assert R.d_nk_printed(5, 3) / R.d_nk(5, 3) == pytest.approx(5 / 3)


def test_residual_of_round_metric(K):
    one = SphereAxisymField.constant(1.0, N4, 64)
    assert np.max(np.abs(R.residual(one, K, 0.0, 2))) < 1e-13
    assert np.allclose(R.residual(one, K, 1.0, 2), 1.5 - K.theta_values(one.theta), atol=1e-13)


@pytest.mark.parametrize("n,k", [(4, 2), (4, 3), (5, 3), (6, 4)])
def test_linearization_at_round_metric_acts_on_harmonics(n, k):
    N = 256
    one = SphereAxisymField.constant(1.0, n, N)
    J = R.linearize(one, SphereFunction(f"{R.round_curvature(n, k)} + 0*x{n + 1}", n), 0.0, k)
    t = theta_grid(N)
    for ell in range(4):
        Y = R.axisym_harmonic(n, ell, t)
        lam = R.d_nk(n, k) * (ell * (ell + n - 1) - n)
        assert np.max(np.abs(J @ Y - lam * Y)) <= 2e-5 * max(1.0, abs(lam)) * np.max(np.abs(Y))


def test_linearization_eigenvalue_on_second_harmonic_is_nine():
    N = 256
    one = SphereAxisymField.constant(1.0, 4, N)
    J = R.linearize(one, SphereFunction("3/2 + 0*x5", 4), 0.0, 2)
    Y = R.axisym_harmonic(4, 2, theta_grid(N))
    assert (Y @ J @ Y) / (Y @ Y) == pytest.approx(9.0, abs=1e-5)


def test_jacobian_columns_match_finite_differences():
    n, k, N = 4, 2, 64
    v = SphereAxisymField.from_function(lambda t: 1 + 0.1 * np.cos(t) + 0.05 * np.cos(2 * t) ** 2, n, N)
    J = R.linearize(v, SphereFunction("x5", n), 0.0, k)
    cols = [0, 1, 17, 32, 63, 64]
    fd = R.fd_jacobian_columns(v, k, cols)
    for i, j in enumerate(cols):
        scale = np.max(np.abs(J[:, j]))
        assert np.max(np.abs(fd[:, i] - J[:, j])) <= 1e-6 * scale


def test_cone_exit_reports_nodes():
    t = theta_grid(64)
    bad = SphereAxisymField(1 + 0.6 * np.cos(6 * t), 4)
    with pytest.raises(ConeExit) as err:
        R.sigma_axisym(bad.values, 4, 2)
    assert err.value.details["nodes"]


field_coeffs = st.lists(st.floats(-0.5, 0.5), min_size=4, max_size=4)


def axi_field(c, n=4, N=64):
    t = theta_grid(N)
    return 1 + sum(a * np.cos(t) ** (j + 1) for j, a in enumerate(c))


@given(field_coeffs, st.sampled_from([3, 4, 5]))
def test_projection_properties(c, n):
    N = 64
    f = axi_field(c, n, N)
    g = R.project_Pi(f, n)
    w = SphereAxisymField(np.ones(N + 1), n).weights()
    ct = np.cos(theta_grid(N))
    assert abs(w @ (ct * g)) <= 1e-12 * max(1.0, np.abs(f).max())
    assert np.allclose(R.project_Pi(g, n), g, atol=1e-12)
    assert np.allclose(R.project_Pi(f + 3 * ct, n), g, atol=1e-12)


def test_projection_examples_and_point_form():
    n = 3
    assert np.allclose(R.project_Pi(np.cos(theta_grid(32)), n), 0, atol=1e-13)
    assert np.allclose(R.project_Pi(SphereAxisymField.constant(2.0, n, 32)), 2.0)
    pts, w = sphere_rule(n, 8)
    f = 1 + pts[:, 0] + pts[:, 3] ** 2 + 0.5 * pts[:, 1]
    assert np.allclose(R.project_Pi(f, points=pts, weights=w), 1 + pts[:, 3] ** 2, atol=1e-12)
    with pytest.raises(DomainError):
        R.project_Pi(np.ones(33))


def test_center_of_mass_and_axis_parameter():
    one = SphereAxisymField.constant(1.0, 4, 64)
    assert np.allclose(R.center_of_mass(one), 0, atol=1e-13)
    tilt = SphereAxisymField.from_function(lambda t: 1 + 0.2 * np.cos(t), 4, 64)
    assert R.center_of_mass(tilt)[-1] > 0
    assert R.axis_parameter(np.array([0, 0, 0, 0, 0.3]), 4) == 0.3
    with pytest.raises(DomainError):
        R.axis_parameter(np.array([0.1, 0, 0, 0, 0.3]), 4)
    with pytest.raises(DomainError):
        R.axis_parameter(1.0, 4)
    with pytest.raises(DomainError):
        R.axis_parameter(np.zeros(3), 4)


def test_parametrization_keeps_the_round_metric_round():
    one = SphereAxisymField.constant(1.0, 4, 256)
    assert R.pi_parametrize(one, 0.0) is one
    v = R.pi_parametrize(one, 0.4)
    assert np.allclose(axisym_spectra(v), 0.5, atol=1e-6)
    w = R.pi_parametrize(one, -0.4)
    a, b = R.center_of_mass(v)[-1], R.center_of_mass(w)[-1]
    assert abs(a) > 1e-3 and b == pytest.approx(-a, rel=1e-10)


def test_reduced_problem_for_round_K_is_trivial():
    K = SphereFunction("3/2 + 0*x5", 4)
    sol = R.solve_reduced(K, 0.3, 0.1, 2, config=R.ReducedConfig(N=64))
    assert np.max(np.abs(sol.w.values - 1)) < 1e-12 and abs(sol.Lambda[-1]) < 1e-12


def test_reduced_solution_consistency(K):
    sol = R.solve_reduced(K, 0.3, 0.05, 2)
    assert sol.residual_norm <= 1e-9 and sol.com_norm < 1e-10
    lam = sol.Lambda[-1] / 0.05
    assert R.kw_linear_system(K, 0.3, sol.w) == pytest.approx(lam, rel=1e-6)
    assert R.lambda_from_projection(sol, K)[-1] == pytest.approx(sol.Lambda[-1], rel=1e-5)
    printed = R.kw_linear_system(K, 0.3, sol.w, form="printed")
    assert abs(printed - lam) / abs(lam) > 0.01
    d = sol.to_dict()
    assert d["center_of_mass_norm"] == sol.com_norm and d["iterations"] == sol.iterations


def test_printed_and_pullback_forms_agree_at_the_origin(K):
    sol = R.solve_reduced(K, 0.0, 0.05, 2)
    a = R.kw_linear_system(K, 0.0, sol.w)
    b = R.kw_linear_system(K, 0.0, sol.w, form="printed")
    assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(DomainError):
        R.kw_linear_system(K, 0.0, sol.w, form="other")


def test_reduced_map_is_reflection_equivariant(K):
    a = R.solve_reduced(K, 0.25, 0.05, 2, config=R.ReducedConfig(N=128))
    b = R.solve_reduced(K.reflected(), -0.25, 0.05, 2, config=R.ReducedConfig(N=128))
    assert b.Lambda[-1] == pytest.approx(-a.Lambda[-1], rel=1e-9)
    assert np.allclose(b.w.values, a.w.values[::-1], atol=1e-10)


def test_w_minus_one_scales_linearly_in_mu(K):
    mus = np.array([0.02, 0.05, 0.1])
    dev = [np.max(np.abs(R.solve_reduced(K, 0.3, m, 2, config=R.ReducedConfig(N=128)).w.values - 1)) for m in mus]
    slope = np.polyfit(np.log(mus), np.log(dev), 1)[0]
    assert 0.9 < slope < 1.1


def test_reduced_problem_argument_checks(K):
    with pytest.raises(DomainError):
        R.solve_reduced(K, 0.3, 0.5, 2)
    with pytest.raises(DomainError):
        R.solve_reduced(K, 0.3, -0.1, 2)
    with pytest.raises(DomainError):
        R.solve_reduced(K, 0.3, 0.1, 7)
    with pytest.raises(NoConvergence):
        R.solve_reduced(K, 0.3, 0.1, 2, config=R.ReducedConfig(N=64, max_iter=1))


def test_lambda_scan_changes_sign(K):
    scan = R.lambda_scan(K, [-0.6, 0.0, 0.6], 0.05, 2, R.ReducedConfig(N=64))
    assert scan[0][1] * scan[-1][1] < 0


def test_homotopy_for_round_K_is_one_state():
    K = SphereFunction("3/2 + 0*x5", 4)
    res = R.solve_homotopy(K, R.HomotopyConfig(N=64))
    assert len(res.states) == 1 and np.all(res.v.values == 1.0)
    assert res.report(K)["kazdan_warner_norm"] == 0.0


def test_homotopy_solves_the_axisymmetric_problem(K):
    cfg = R.HomotopyConfig(k=2, N=128, tol=1e-8)
    res = R.solve_homotopy(K, cfg)
    rep = res.report(K)
    assert res.final.mu == 1.0 and rep["final_residual"] <= 1e-8
    assert rep["min_cone_margin"] > 0
    assert [s["mu"] for s in rep["mu_trace"]] == sorted(s["mu"] for s in rep["mu_trace"])
    F = R.residual(res.v, K, 1.0, 2)
    assert np.max(np.abs(F)) <= 1e-8


def test_homotopy_step_underflow(K, monkeypatch):
    real = R.newton_solve

    def failing_after_start(v, K_, mu, *args):
        if mu > R.HomotopyConfig().mu0:
            raise NoConvergence("forced", mu=mu)
        return real(v, K_, mu, *args)

    monkeypatch.setattr(R, "newton_solve", failing_after_start)
    with pytest.raises(StepUnderflow):
        R.solve_homotopy(K, R.HomotopyConfig(N=64, dmu_min=0.01))


def test_homotopy_argument_checks():
    with pytest.raises(DomainError):
        R.solve_homotopy(SphereFunction("1 + 0.1*x6", 5), R.HomotopyConfig(k=2, N=64))
    with pytest.raises(DomainError):
        R.solve_homotopy(SphereFunction("x5", 4), R.HomotopyConfig(N=64))
