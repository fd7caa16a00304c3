from math import gamma, pi

import numpy as np
import pytest
from scipy.integrate import quad
from hypothesis import given
from hypothesis import strategies as st

from sigmak import grid
from sigmak import identities as I
from sigmak.errors import ConeError, DivergentTail, DomainError, PreconditionError
from sigmak.kfunc import SphereFunction
from sigmak.sphere import SphereAxisymField, sphere_area

PTS3 = np.array([[0.1, -0.2, 0.25]])


def test_rising_factorial():
    assert I.rising(2.0, 0) == 1.0
    assert I.rising(2.0, 3) == 24.0
    assert I.rising(0.5, 2) == 0.75


def test_zeroth_newton_tensor_identity_is_exact():
    psi = I.random_polynomial(3, 4, seed=1)
    assert I.check_divergence(psi, 0, PTS3, 0.1, 1).residual < 1e-10


@pytest.mark.parametrize("fam", ["poly", "bubble"])
def test_divergence_identity_converges_at_fourth_order(fam):
    psi = I.random_polynomial(3, 4, seed=2) if fam == "poly" else I.bubble_log_psi(3, lam=1.3, y0=[0.1, 0, 0])
    rep = I.check_divergence(psi, 1, PTS3, 0.1, 2)
    assert min(rep.orders) > 3.5
    assert rep.to_dict()["order"] == rep.order


def test_weighted_and_summed_identities_converge():
    psi = I.random_polynomial(4, 3, seed=3)
    pts = np.array([[0.2, 0.1, -0.1, 0.3]])
    for rep in (I.check_weighted_divergence(psi, 1, 2.0, -0.5, pts, 0.1, 2),
                I.check_summed_identity(psi, 2, 0.7, 2.5, 3.5, pts, 0.1, 2)):
        assert min(rep.orders) > 3.5


def test_summed_identity_with_one_term_is_the_weighted_zeroth_identity():
    psi = I.random_polynomial(3, 4, seed=0)
    field = grid.EuclideanField.centered(psi, PTS3[0], 0.05, 4)
    a = I.summed_residual(field, 1, 0.3, 2.0, 2.5)
    b = I.weighted_residual(field, 0, 0.0, 0.3)
    assert np.max(np.abs(a)) < 1e-3 and np.max(np.abs(b)) < 1e-3


def test_grid_fields_are_checked_directly():
    psi = I.random_polynomial(3, 4, seed=0)
    field = grid.EuclideanField.centered(psi, PTS3[0], 0.05, 4)
    rep = I.check_divergence(field, 2)
    assert rep.residual < 1e-3 and rep.orders == []
    with pytest.raises(PreconditionError):
        I.check_divergence(psi, 1)


def test_identity_argument_checks():
    field = grid.EuclideanField.centered(I.random_polynomial(3, 2), np.zeros(3), 0.1, 4)
    with pytest.raises(DomainError):
        I.divergence_residual(field, 4)
    with pytest.raises(DomainError):
        I.weighted_residual(field, 3, 0.0, 0.0)
    with pytest.raises(DomainError):
        I.weighted_residual(field, 1, -1.0, 0.0)
    with pytest.raises(DomainError):
        I.summed_coefficients(3, 2, 0.0, 0.0, 1.0)


@given(st.integers(3, 8).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))),
       st.floats(0.01, 1.0), st.floats(-3, 3))
def test_specialized_coefficients_match_general_formula(nk, delta, q):
    n, k = nk
    c, a, b = I.summed_coefficients(n, k, q, n - k + 1.0, k + 1.0 + delta)
    c2, a2, beta = I.specialized_coefficients(n, k, delta, q)
    assert np.allclose(c, c2, rtol=1e-12)
    assert np.allclose(a, a2, rtol=1e-10, atol=1e-12)
    assert np.allclose(b, delta * beta, rtol=1e-10, atol=1e-14)
    assert np.all(beta > 0) and np.all(c > 0)


def test_specialization_report():
    rep = I.specialization_report(4, 2)
    assert rep["all_positive"] and rep["c"][0] == 1.0


def test_cacciopoli_pointwise_inequality_holds_up_to_truncation():
    psi = I.bubble_log_psi(3)
    up = I.cacciopoli_sides(psi, 3, 2, 3.0, 0.5, 1.0, h=0.05, sign=1)
    assert up["coefficients_admissible"] and up["slack"] > 0
    coarse = I.cacciopoli_sides(psi, 3, 2, -6.0, 0.5, 1.0, h=0.1, sign=-1)["slack"]
    fine = I.cacciopoli_sides(psi, 3, 2, -6.0, 0.5, 1.0, h=0.05, sign=-1)
    assert fine["coefficients_admissible"]
    # equality holds at the centre, so the slack is -O(h^4) there
    assert fine["slack"] > -5e-3 and abs(coarse / fine["slack"]) > 10
    assert fine["lhs"] > 0 and fine["rhs_sigma"] > 0 and fine["scale"] == pytest.approx(2.0**4)


def test_cacciopoli_rejects_fields_outside_the_cone():
    with pytest.raises(ConeError):
        I.cacciopoli_sides(lambda y: -np.sum(y * y, -1), 3, 2, 0.0, 0.2, 0.4, h=0.1)
    with pytest.raises(DomainError):
        I.cacciopoli_sides(I.bubble_log_psi(3), 3, 2, 0.0, 0.5, 0.4)


def test_smooth_cutoff():
    r = np.array([0.0, 0.5, 0.75, 1.0, 2.0])
    assert np.allclose(I.smooth_cutoff(r, 0.5, 1.0), [1, 1, 0.5, 0, 0])


def test_bubble_mass_is_sphere_volume_over_2_to_the_n():
    for n in (3, 4, 5, 6):
        assert I.bubble_mass(n) == pytest.approx(sphere_area(n) / 2**n, rel=1e-14)


def test_bubble_sigma_constant():
    assert I.bubble_sigma(4, 2) == 24.0


def test_kazdan_warner_and_pohozaev_vanish_for_radial_K_on_centred_bubble():
    n = 3
    u = lambda y: I.bubble(y, None, 1.0, n)
    K = lambda y: 1.0 / (1.0 + np.sum(y * y, -1))
    kw = I.kazdan_warner(u, K, n, radius=60.0)
    assert np.max(np.abs(kw)) < 1e-10
    assert I.pohozaev(u, lambda y: np.ones(y.shape[:-1]), n) == 0.0


def test_kazdan_warner_detects_a_non_solution():
    n = 3
    u = lambda y: I.bubble(y, [0.5, 0, 0], 1.0, n)
    kw = I.kazdan_warner(u, lambda y: y[..., 0], n, radius=60.0)
    assert kw[0] == pytest.approx(I.bubble_mass(n), rel=1e-3)


def test_kazdan_warner_tail_check():
    slow = lambda y: (1 + np.sum(y * y, -1)) ** (-0.25)
    with pytest.raises(DivergentTail):
        I.kazdan_warner(slow, lambda y: y[..., 0], 3, radius=20.0)
    with pytest.raises(PreconditionError):
        I.kazdan_warner(slow, lambda y: y[..., 0])


def test_kazdan_warner_on_grid_fields():
    n = 3
    u = grid.EuclideanField.centered(lambda y: I.bubble(y, None, 1.0, n), np.zeros(n), 0.25, 12)
    kw = I.kazdan_warner(u, lambda y: np.sum(y * y, -1))
    assert np.max(np.abs(kw)) < 1e-10


def test_sphere_kazdan_warner_of_height_function():
    n = 4
    v = SphereAxisymField.constant(1.0, n, 64)
    kw = I.kazdan_warner(v, SphereFunction("x5", n))
    assert np.allclose(kw[:-1], 0)
    assert kw[-1] == pytest.approx(n * sphere_area(n) / (n + 1), rel=1e-12)


def test_moments_of_centred_bubble():
    n = 4
    m = I.moments(lambda y: I.bubble(y, None, 1.0, n), 2.0, n)
    assert m.M > 0 and np.max(np.abs(m.mu_p)) < 1e-12
    assert np.allclose(m.mu_lp, m.mu_lp[0, 0] * np.eye(n), atol=1e-12)
    with pytest.raises(PreconditionError):
        I.moments(lambda y: I.bubble(y, None, 1.0, n), 2.0)
    field = grid.EuclideanField.centered(lambda y: I.bubble(y, None, 1.0, 3), np.zeros(3), 0.1, 10)
    mg = I.moments(field, 0.8)
    mq = I.moments(lambda y: I.bubble(y, None, 1.0, 3), 0.8, 3)
    assert mg.M == pytest.approx(mq.M, rel=5e-2)


def test_moment_limit_closed_forms():
    n = 5
    R = 40.0
    val = I.moment_limit(lambda z: np.sum(z * z, -1), 2, n, R)
    radial_part = quad(lambda r: r ** (n + 1) * (1 + r * r) ** (-n), 0, R, epsabs=1e-14, epsrel=1e-13)[0]
    assert val == pytest.approx(sphere_area(n - 1) * radial_part, rel=1e-9)
    # the full-space value B((n+2)/2, (n-2)/2)/2 is approached with an R^{2-n} tail
    beta = gamma((n + 2) / 2) * gamma((n - 2) / 2) / gamma(n) / 2
    assert val == pytest.approx(sphere_area(n - 1) * beta, rel=1e-4)
    assert I.moment_limit(lambda z: z[..., 0], 1, n, R) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        I.moment_limit(lambda z: z[..., 0], n, n, R)
    with pytest.raises(DomainError):
        I.moment_limit(lambda z: z[..., 0], 1, n, 0.0)


def test_conformal_hessian_is_concave_along_segments_and_one_homogeneous():
    rng = np.random.default_rng(0)
    f1 = lambda y: 1 + 0.5 * np.exp(-np.sum((y - 0.1) ** 2, -1))
    f2 = lambda y: 2 + np.sin(y[..., 0]) * np.cos(y[..., 1])
    w1 = grid.EuclideanField.centered(f1, np.zeros(3), 0.1, 3)
    w2 = grid.EuclideanField.centered(f2, np.zeros(3), 0.1, 3)
    assert I.check_convexity(w1, w2)["min_eigenvalue"] >= -1e-12
    c = rng.uniform(0.5, 3)
    assert np.allclose(I.conformal_hessian(w1.map(lambda v: c * v)), c * I.conformal_hessian(w1), atol=1e-12)
    with pytest.raises(PreconditionError):
        I.conformal_hessian(w1.map(lambda v: v - 10))
    with pytest.raises(PreconditionError):
        I.check_convexity(w1, grid.EuclideanField.centered(f2, np.ones(3), 0.1, 3))


def test_delta_energy_profile():
    n = 3
    u = lambda y: I.bubble(y, None, 1.0, n)
    big = I.delta_energy_profile(u, I.Ball((0.0,) * n, 200.0))
    assert big["energy"] == pytest.approx(I.bubble_mass(n), rel=1e-2)
    ann = I.delta_energy_profile(u, I.Annulus((0.0,) * n, 0.5, 1.0))
    ball = I.delta_energy_profile(u, I.Ball((0.0,) * n, 1.0))
    assert 0 < ann["energy"] < ball["energy"]
    # sup (1-|y|)^{1/2} u is 1 at the centre; the sup runs over quadrature nodes
    assert 0.99 < ball["T"] <= 1.0
    with pytest.raises(DomainError):
        I.delta_energy_profile(u, "ball")


def test_random_polynomial_is_seeded():
    y = np.random.default_rng(0).normal(size=(4, 3))
    assert np.array_equal(I.random_polynomial(3, 4, 7)(y), I.random_polynomial(3, 4, 7)(y))
    assert not np.array_equal(I.random_polynomial(3, 4, 7)(y), I.random_polynomial(3, 4, 8)(y))
