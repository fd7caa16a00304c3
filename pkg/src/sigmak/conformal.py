"""Schouten tensors of conformally flat and conformally round metrics, and the
transformations relating them.

Conventions
-----------
* On R^n the metric is ``u^{4/(n-2)} |dy|^2``; ``A^u`` is its (1,1) Schouten
  tensor, so its eigenvalues are taken with respect to that metric.
* With ``psi = -(2/(n-2)) ln u`` one has ``A^u = e^{2 psi} F[psi]`` where
  ``F[psi] = Hess psi + dpsi ⊗ dpsi - |dpsi|^2 I / 2``.
* On S^n the metric is ``v^{4/(n-2)} g_0``. For axisymmetric v the Schouten
  tensor has one radial eigenvalue and one tangential eigenvalue of
  multiplicity n-1 (see :func:`axisym_eigenvalues`).
* Stereographic coordinates send y = 0 to the south pole. A radial u on R^n
  corresponds to the axisymmetric v(θ) = u(r) ((1+r^2)/2)^{(n-2)/2} with
  r = cot(θ/2), and both metrics have the same Schouten spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import map_coordinates

from . import grid
from .errors import DomainError, StencilError
from .sphere import SphereAxisymField, axis_dilation

POLE_TOL = 1e-12


# ---------------------------------------------------------------------------
# Euclidean Schouten tensor


def schouten_field(u: grid.EuclideanField) -> np.ndarray:
    """A^u at every interior node; shape ``interior + (n, n)``."""
    n = u.n
    if n < 3:
        raise DomainError("dimension must be at least 3")
    if np.any(u.values <= 0):
        raise DomainError("conformal factor must be positive")
    g = grid.gradient(u.values, u.h)
    H = grid.hessian(u.values, u.h)
    w = grid.trim(u.values, range(n))
    m = n - 2.0
    a1 = -(2.0 / m) * w ** (-(n + 2.0) / m)
    a2 = w ** (-2.0 * n / m) / m**2
    gg = g[..., :, None] * g[..., None, :]
    g2 = np.sum(g * g, axis=-1)
    eye = np.eye(n)
    return a1[..., None, None] * H + a2[..., None, None] * (2.0 * n * gg - 2.0 * g2[..., None, None] * eye)


def schouten_euclidean(u: grid.EuclideanField, point) -> np.ndarray:
    """A^u at one grid node (4th-order central differences)."""
    return schouten_field(u.block(point))[(0,) * u.n]


def f_field(psi: grid.EuclideanField) -> np.ndarray:
    """F[psi] at every interior node."""
    n = psi.n
    g = grid.gradient(psi.values, psi.h)
    H = grid.hessian(psi.values, psi.h)
    gg = g[..., :, None] * g[..., None, :]
    g2 = np.sum(g * g, axis=-1)
    return H + gg - 0.5 * g2[..., None, None] * np.eye(n)


def f_of_psi(psi: grid.EuclideanField, point) -> np.ndarray:
    return f_field(psi.block(point))[(0,) * psi.n]


def psi_from_u(u: grid.EuclideanField) -> grid.EuclideanField:
    n = u.n
    return u.map(lambda a: -(2.0 / (n - 2.0)) * np.log(a))


# ---------------------------------------------------------------------------
# sphere, axisymmetric


def axisym_eigenvalues(v, dtheta, n, with_partials=False):
    """Eigenvalues of A_{g_v} relative to g_v for axisymmetric v(θ).

    With P = v'/v, Q = v''/v and m = n - 2, the Hessian of v in g_0 has
    θθ-entry v'' and tangential entries cot θ · v', while dv ⊗ dv only has a
    θθ-entry, which gives

        λ_θ = v^{-4/m} [1/2 - (2/m) Q + (2(n-1)/m^2) P^2]
        λ_t = v^{-4/m} [1/2 - (2/m) cot θ · P - (2/m^2) P^2]   (n-1 times).

    At the poles cot θ · v' is replaced by its limit v''. With
    ``with_partials`` the derivatives of both eigenvalues with respect to
    (v, v', v'') are returned as well (used to assemble Newton Jacobians).
    """
    from .sphere import theta_derivatives

    v = np.asarray(v, float)
    if np.any(v <= 0):
        raise DomainError("conformal factor must be positive", nodes=np.nonzero(v <= 0)[0].tolist())
    N = v.size - 1
    theta = np.pi * np.arange(N + 1) / N
    vp, vpp = theta_derivatives(v, dtheta)
    m = n - 2.0
    a = v ** (-4.0 / m)
    P = vp / v
    Q = vpp / v
    pole = np.zeros(N + 1, bool)
    pole[[0, -1]] = True
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = np.cos(theta) / np.sin(theta)
        cotP = np.where(pole, Q, cot * P)
    lam_th = a * (0.5 - (2.0 / m) * Q + (2.0 * (n - 1) / m**2) * P * P)
    lam_t = a * (0.5 - (2.0 / m) * cotP - (2.0 / m**2) * P * P)
    if not with_partials:
        return lam_th, lam_t
    cot0 = np.where(pole, 0.0, cot)
    d_th = {
        "v": -(4.0 / m) * lam_th / v + a * ((2.0 / m) * Q - (4.0 * (n - 1) / m**2) * P * P) / v,
        "vp": a * (4.0 * (n - 1) / m**2) * P / v,
        "vpp": -a * (2.0 / m) / v,
    }
    d_t = {
        "v": -(4.0 / m) * lam_t / v + a * ((2.0 / m) * cotP + (4.0 / m**2) * P * P) / v,
        "vp": a * (-(2.0 / m) * cot0 - (4.0 / m**2) * P) / v,
        "vpp": np.where(pole, -a * (2.0 / m) / v, 0.0),
    }
    return lam_th, lam_t, d_th, d_t


def axisym_spectra(v: SphereAxisymField) -> np.ndarray:
    """Full spectra, shape ``(N+1, n)``: λ_θ followed by n-1 copies of λ_t."""
    lam_th, lam_t = axisym_eigenvalues(v.values, v.dtheta, v.n)
    return np.column_stack([lam_th] + [lam_t] * (v.n - 1))


def schouten_sphere_axisym(v: SphereAxisymField, index: int) -> np.ndarray:
    """Spectrum of A_{g_v} at colatitude node ``index`` (poles allowed)."""
    if not 0 <= index <= v.N:
        raise StencilError("theta index out of range", index=index)
    return axisym_spectra(v)[index]


# ---------------------------------------------------------------------------
# stereographic projection


def stereographic_to_sphere(y) -> np.ndarray:
    """x_i = 2y_i/(1+|y|^2), x_{n+1} = (|y|^2-1)/(|y|^2+1); y = 0 ↦ south pole."""
    y = np.asarray(y, float)
    r2 = np.sum(y * y, axis=-1, keepdims=True)
    return np.concatenate([2.0 * y / (1.0 + r2), (r2 - 1.0) / (r2 + 1.0)], axis=-1)


def sphere_to_stereographic(x) -> np.ndarray:
    """Inverse projection y_i = x_i / (1 - x_{n+1}); undefined at the north pole."""
    x = np.asarray(x, float)
    denom = 1.0 - x[..., -1:]
    if np.any(denom <= POLE_TOL):
        raise DomainError("inverse stereographic projection is undefined at the north pole")
    return x[..., :-1] / denom


# ---------------------------------------------------------------------------
# Kelvin transform


def kelvin_point(u, R: float):
    """Kelvin transform of a callable: R^{n-2}|x|^{2-n} u(R^2 x/|x|^2) (c = 1)."""
    if R <= 0:
        raise DomainError("R must be positive")

    def ut(x):
        x = np.asarray(x, float)
        r2 = np.sum(x * x, axis=-1)
        if np.any(r2 == 0):
            raise DomainError("Kelvin transform evaluated at the origin")
        n = x.shape[-1]
        return R ** (n - 2) * r2 ** (-(n - 2) / 2.0) * u(R * R * x / r2[..., None])

    return ut


def interpolator(u: grid.EuclideanField):
    """Cubic-spline interpolant of a grid field; raises outside the box."""
    coeffs = None

    def f(x):
        nonlocal coeffs
        from scipy.ndimage import spline_filter

        if coeffs is None:
            coeffs = spline_filter(u.values, order=3, mode="mirror")
        x = np.asarray(x, float)
        idx = (x - np.asarray(u.origin)) / np.asarray(u.h)
        upper = np.asarray(u.shape) - 1
        if np.any(idx < -1e-9) or np.any(idx > upper + 1e-9):
            raise DomainError("interpolation point outside the grid")
        flat = idx.reshape(-1, u.n).T
        out = map_coordinates(coeffs, flat, order=3, mode="mirror", prefilter=False)
        return out.reshape(x.shape[:-1])

    return f


def kelvin(u, R: float, target: grid.EuclideanField | None = None):
    """Kelvin transform with normalization c = 1.

    ``u`` may be a callable on points of shape ``(..., n)``, in which case a
    callable is returned, or an :class:`EuclideanField`, in which case
    ``target`` gives the output box and values are obtained by cubic
    interpolation of ``u`` at the inverted points.
    """
    if isinstance(u, grid.EuclideanField):
        if target is None:
            raise DomainError("a target grid is required for grid fields")
        f = kelvin_point(interpolator(u), R)
        return grid.EuclideanField(f(target.coords()), target.h, target.origin)
    return kelvin_point(u, R)


# ---------------------------------------------------------------------------
# Möbius maps


@dataclass(frozen=True)
class MobiusMap:
    """φ_{P,t}: stereographic projection from P followed by y ↦ t y."""

    P: tuple
    t: float

    def __post_init__(self):
        P = np.asarray(self.P, float)
        if abs(np.linalg.norm(P) - 1.0) > 1e-12:
            raise DomainError("pole must be a unit vector")
        if not self.t >= 1.0:
            raise DomainError("dilation must satisfy t >= 1")
        object.__setattr__(self, "P", tuple(float(p) for p in P))

    @classmethod
    def from_xi(cls, xi) -> "MobiusMap":
        xi = np.asarray(xi, float)
        r = np.linalg.norm(xi)
        if r >= 1.0:
            raise DomainError("need |xi| < 1")
        if r == 0.0:
            P = np.zeros(xi.size)
            P[-1] = 1.0
            return cls(tuple(P), 1.0)
        return cls(tuple(xi / r), 1.0 / (1.0 - r))

    def inverse(self) -> "MobiusMap":
        # φ_{P,t}^{-1} = φ_{P,1/t} = φ_{-P,t}
        return MobiusMap(tuple(-np.asarray(self.P)), self.t)

    def __call__(self, x):
        return mobius_apply(np.asarray(self.P), np.log(self.t), x)


def mobius_apply(P, log_t, x):
    """Image φ(x) and conformal factor ρ(x) (φ*g_0 = ρ^2 g_0) of the dilation."""
    x = np.asarray(x, float)
    t = np.exp(log_t)
    xp = x @ P
    perp = x - xp[..., None] * P
    den = (1.0 - xp) + t * t * (1.0 + xp)
    image = (2.0 * t / den)[..., None] * perp + ((t * t * (1.0 + xp) - (1.0 - xp)) / den)[..., None] * P
    image = image / np.linalg.norm(image, axis=-1, keepdims=True)
    rho = 2.0 * t / den
    return image, rho


def mobius_pullback(v, phi, n: int | None = None):
    """T_φ v = v∘φ · |det dφ|^{(n-2)/(2n)} = v∘φ · ρ^{(n-2)/2}.

    ``v`` is either a callable on points of S^n ⊂ R^{n+1} (a callable is
    returned) or a :class:`SphereAxisymField`, in which case the pole of
    ``phi`` must lie on the symmetry axis and values are cubic-interpolated.
    ``phi`` is a :class:`MobiusMap` or any callable returning (image, ρ).
    """
    if isinstance(v, SphereAxisymField):
        if not isinstance(phi, MobiusMap):
            raise DomainError("axisymmetric pullback needs a MobiusMap")
        P = np.asarray(phi.P)
        if np.linalg.norm(P[:-1]) > 1e-12:
            raise DomainError("pole must lie on the symmetry axis for axisymmetric fields")
        log_tau = np.sign(P[-1]) * np.log(phi.t)
        return axisym_pullback(v, log_tau)

    def pulled(x):
        x = np.asarray(x, float)
        image, rho = phi(x)
        dim = x.shape[-1] - 1 if n is None else n
        return v(image) * rho ** ((dim - 2) / 2.0)

    return pulled


def axisym_pullback(v: SphereAxisymField, log_tau: float) -> SphereAxisymField:
    """Pullback by the axis dilation with factor exp(log_tau) (pole = north)."""
    image, rho = axis_dilation(v.theta, log_tau)
    spline = v.spline()
    vals = spline(np.clip(image, 0.0, np.pi)) * rho ** ((v.n - 2) / 2.0)
    return SphereAxisymField(vals, v.n)


def axisym_pullback_function(f, n: int, theta, log_tau: float):
    """Same as :func:`axisym_pullback` for a callable f(θ), without interpolation."""
    image, rho = axis_dilation(theta, log_tau)
    return f(image) * rho ** ((n - 2) / 2.0)


# ---------------------------------------------------------------------------
# bubbles


def bubble(z, y0=None, lam: float = 1.0, n: int | None = None):
    """(lam / (1 + lam^2 |z - y0|^2))^{(n-2)/2}; n defaults to z.shape[-1]."""
    if lam <= 0:
        raise DomainError("bubble scale must be positive")
    z = np.asarray(z, float)
    n = z.shape[-1] if n is None else n
    y0 = np.zeros(z.shape[-1]) if y0 is None else np.asarray(y0, float)
    d2 = np.sum((z - y0) ** 2, axis=-1)
    return (lam / (1.0 + lam * lam * d2)) ** ((n - 2) / 2.0)


def sphere_bubble_axisym(n: int, theta, lam: float = 1.0):
    """Pullback to S^n of the centred bubble of scale lam; constant when lam = 1."""
    c = np.cos(np.asarray(theta, float))
    return (lam / ((1.0 - c) + lam * lam * (1.0 + c))) ** ((n - 2) / 2.0)
