import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sigmak.errors import DomainError
from sigmak.kfunc import AxisymmetricProfile, SphereFunction, infer_dimension, parse_K


def test_dimension_inference_and_degree():
    K = SphereFunction("2 + 0.3*x1**2 + x4")
    assert K.n == 3 and K.degree == 2 and not K.axis_only
    assert infer_dimension("x7") == 6
    with pytest.raises(DomainError):
        infer_dimension("2")
    assert SphereFunction("2", 4).degree == 0


@pytest.mark.parametrize("bad", ["exp(x1)", "x1 + y", "x1 +* 2", "1/x2"])
def test_rejects_non_polynomials(bad):
    with pytest.raises(DomainError):
        SphereFunction(bad, 3)


def test_rejects_out_of_range_variables():
    with pytest.raises(DomainError):
        SphereFunction("x6", 3)
    with pytest.raises(DomainError):
        SphereFunction("x2", 1)
    with pytest.raises(DomainError):
        SphereFunction("x1", 3)(np.zeros(3))


def test_laplacian_of_first_and_second_harmonics():
    n = 4
    rng = np.random.default_rng(0)
    x = rng.normal(size=(10, n + 1))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    lin = SphereFunction("x2", n)
    assert np.allclose(lin.laplacian(x), -n * x[:, 1])
    quad = SphereFunction("x1*x3", n)
    assert np.allclose(quad.laplacian(x), -2 * (n + 1) * x[:, 0] * x[:, 2])


def unit(m):
    return st.lists(st.floats(-1, 1), min_size=m, max_size=m).map(np.array).filter(
        lambda v: np.linalg.norm(v) > 0.1).map(lambda v: v / np.linalg.norm(v))


@given(unit(4))
def test_intrinsic_gradient_is_tangent_and_matches_fd(x):
    K = SphereFunction("x1**2 - 0.5*x2*x3 + x4**3", 3)
    g = K.intrinsic_gradient(x)
    assert abs(g @ x) < 1e-12
    from sigmak.degree import tangent_frame

    E = tangent_frame(x)
    h = 1e-6
    for j in range(3):
        a = lambda s: (x + s * E[:, j]) / np.linalg.norm(x + s * E[:, j])
        fd = (K(a(h)) - K(a(-h))) / (2 * h)
        assert fd == pytest.approx(g @ E[:, j], abs=1e-7)


def test_axisymmetric_view():
    K = SphereFunction("1 + 0.5*x4**2 - x4", 3)
    t = np.linspace(0, np.pi, 9)
    c = np.cos(t)
    assert K.axis_only
    assert np.allclose(K.theta_values(t), 1 + 0.5 * c**2 - c)
    assert np.allclose(K.theta_derivative(t), -np.sin(t) * (c - 1))
    h = 1e-5
    fd2 = (K.theta_values(t[1:-1] + h) - 2 * K.theta_values(t[1:-1]) + K.theta_values(t[1:-1] - h)) / h**2
    assert np.allclose(K.theta_second(t[1:-1]), fd2, atol=1e-4)
    with pytest.raises(DomainError):
        SphereFunction("x1", 3).theta_values(t)


def test_affine_and_reflection():
    K = SphereFunction("x4 + x1**2", 3)
    x = np.array([0.6, 0.0, 0.0, 0.8])
    assert K.affine(2.0, 1.0)(x) == pytest.approx(2 * K(x) + 1)
    assert K.reflected()(x) == pytest.approx(K(x * [1, 1, 1, -1]))


def test_profile_from_csv_matches_polynomial(tmp_path):
    n = 4
    K = SphereFunction("1.5 + 0.2*x5**2 + 0.05*x5", n)
    th = np.linspace(0, np.pi, 401)
    path = tmp_path / "k.csv"
    path.write_text("theta,K\n" + "\n".join(f"{a:.17g},{b:.17g}" for a, b in zip(th, K.theta_values(th))))
    P = parse_K(str(path), n)
    assert isinstance(P, AxisymmetricProfile)
    t = np.linspace(0, np.pi, 37)
    assert np.allclose(P.theta_values(t), K.theta_values(t), atol=1e-9)
    assert np.allclose(P.theta_derivative(t), K.theta_derivative(t), atol=1e-6)
    x = np.stack([np.sin(t), 0 * t, 0 * t, 0 * t, np.cos(t)], axis=1)
    assert np.allclose(P(x), K(x), atol=1e-9)
    assert np.allclose(P.reflected().theta_values(t), K.reflected().theta_values(t), atol=1e-8)
    with pytest.raises(DomainError):
        parse_K(str(path))
    bad = tmp_path / "bad.csv"
    bad.write_text("theta,K\n0,abc\n")
    with pytest.raises(DomainError):
        parse_K(str(bad), n)


def test_profile_validation():
    with pytest.raises(DomainError):
        AxisymmetricProfile([0, 1, 2], [1, 1, 1], 3)
    with pytest.raises(DomainError):
        AxisymmetricProfile(np.linspace(0, 3, 5), np.ones(5), 3)


def test_parse_K_sources(tmp_path):
    js = tmp_path / "k.json"
    js.write_text(json.dumps({"expr": "2 + x4", "n": 3}))
    txt = tmp_path / "k.txt"
    txt.write_text("2 + x5\n")
    assert parse_K(str(js)).n == 3
    assert parse_K(str(txt)).n == 4
    K = SphereFunction("x4")
    assert parse_K(K) is K
    assert parse_K("1 + x3").n == 2
