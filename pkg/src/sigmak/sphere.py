"""Quadrature on spheres and axisymmetric fields on S^n.

An axisymmetric field depends only on the colatitude θ measured from the
north pole e_{n+1}, so ``x_{n+1} = cos θ``. Fields live on the uniform grid
θ_j = jπ/N, poles included, and derivatives use 4th-order central stencils
with even reflection across both poles.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gamma, pi

import numpy as np
from scipy.interpolate import CubicSpline
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from .errors import DomainError


def sphere_area(m: int) -> float:
    """|S^m| = 2π^{(m+1)/2} / Γ((m+1)/2)."""
    return 2.0 * pi ** ((m + 1) / 2) / gamma((m + 1) / 2)


@lru_cache(maxsize=64)
def _sphere_rule(m, degree):
    if m == 1:
        count = degree + 1
        phi = 2.0 * pi * np.arange(count) / count
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), np.full(count, 2.0 * pi / count)
    alpha = (m - 2) / 2.0
    u, wu = roots_jacobi(degree // 2 + 1, alpha, alpha)
    sub_pts, sub_w = _sphere_rule(m - 1, degree)
    s = np.sqrt(1.0 - u * u)
    pts = np.concatenate(
        [
            (s[:, None, None] * sub_pts[None, :, :]),
            np.broadcast_to(u[:, None, None], (u.size, sub_pts.shape[0], 1)),
        ],
        axis=-1,
    ).reshape(-1, m + 1)
    w = (wu[:, None] * sub_w[None, :]).reshape(-1)
    return pts, w


def sphere_rule(m: int, degree: int):
    """Product Gauss rule on S^m ⊂ R^{m+1}, exact for polynomials of ``degree``.

    Built recursively: Gauss–Jacobi nodes in the last coordinate times a rule
    on S^{m-1} for the remaining ones; S^1 uses equispaced angles.
    """
    if m < 1 or degree < 0:
        raise DomainError("need m >= 1 and degree >= 0")
    pts, w = _sphere_rule(int(m), int(degree))
    return pts.copy(), w.copy()


def integrate_sphere(f, m: int, degree: int = 20):
    pts, w = sphere_rule(m, degree)
    vals = np.asarray(f(pts))
    return np.tensordot(w, vals, axes=(0, 0))


# ---------------------------------------------------------------------------
# axisymmetric fields


def theta_grid(N: int) -> np.ndarray:
    if N < 8:
        raise DomainError("need at least 8 colatitude intervals")
    return np.pi * np.arange(N + 1) / N


def _reflect_pad(v):
    """Even reflection of two nodes across each pole."""
    return np.concatenate([v[2:0:-1], v, v[-2:-4:-1]])


def theta_derivatives(v, dtheta):
    """(v', v'') at every node, poles included, via even reflection."""
    p = _reflect_pad(np.asarray(v, float))
    d1 = (p[:-4] - 8.0 * p[1:-3] + 8.0 * p[3:-1] - p[4:]) / (12.0 * dtheta)
    d2 = (-p[:-4] + 16.0 * p[1:-3] - 30.0 * p[2:-2] + 16.0 * p[3:-1] - p[4:]) / (12.0 * dtheta**2)
    return d1, d2


@lru_cache(maxsize=16)
def _fd_matrices(N):
    eye = np.eye(N + 1)
    dth = np.pi / N
    cols = [theta_derivatives(eye[:, j], dth) for j in range(N + 1)]
    D1 = np.stack([c[0] for c in cols], axis=1)
    D2 = np.stack([c[1] for c in cols], axis=1)
    return D1, D2


def fd_matrices(N: int):
    """Dense matrices with ``D1 @ v = v'`` and ``D2 @ v = v''`` on the θ grid."""
    D1, D2 = _fd_matrices(int(N))
    return D1.copy(), D2.copy()


@lru_cache(maxsize=32)
def _axisym_weights(N, n):
    # moments ∫_0^π cos(mθ) sin^{n-1}θ dθ; the integrand is smooth on [0, π]
    x, w = leggauss(2 * N + 64)
    t = 0.5 * np.pi * (x + 1.0)
    m = np.arange(N + 1)
    mom = (0.5 * np.pi * w * np.sin(t) ** (n - 1)) @ np.cos(np.outer(t, m))
    mom[[0, -1]] *= 0.5
    j = np.arange(N + 1)
    wts = (2.0 / N) * np.cos(np.outer(j, m) * np.pi / N) @ mom
    wts[[0, -1]] *= 0.5
    return sphere_area(n - 1) * wts


def axisym_weights(N: int, n: int) -> np.ndarray:
    """Weights for ∫_{S^n} f dv of an axisymmetric f sampled on the θ grid.

    f(θ) is an even 2π-periodic function, so it is interpolated by a cosine
    series (DCT-I) whose terms are integrated exactly against sin^{n-1}θ.
    Unlike the trapezoid rule this stays spectrally accurate when n-1 is
    odd, where sin^{n-1}θ has a kink in its periodic extension.
    """
    theta_grid(N)
    return _axisym_weights(int(N), int(n)).copy()


@dataclass(frozen=True)
class SphereAxisymField:
    """Positive values v(θ_j) on the uniform grid θ_j = jπ/N of S^n."""

    values: np.ndarray
    n: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise DomainError("axisymmetric field must be one-dimensional")
        if self.n < 3:
            raise DomainError("dimension n must be at least 3")
        theta_grid(vals.size - 1)
        if not np.all(np.isfinite(vals)):
            raise DomainError("field has non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def N(self) -> int:
        return self.values.size - 1

    @property
    def theta(self) -> np.ndarray:
        return theta_grid(self.N)

    @property
    def dtheta(self) -> float:
        return np.pi / self.N

    @classmethod
    def from_function(cls, f, n: int, N: int) -> "SphereAxisymField":
        return cls(np.asarray(f(theta_grid(N)), dtype=float), n)

    @classmethod
    def constant(cls, c: float, n: int, N: int) -> "SphereAxisymField":
        return cls(np.full(N + 1, float(c)), n)

    def weights(self) -> np.ndarray:
        return axisym_weights(self.N, self.n)

    def integrate(self, values=None) -> float:
        vals = self.values if values is None else np.asarray(values)
        return float(self.weights() @ vals)

    def derivatives(self):
        return theta_derivatives(self.values, self.dtheta)

    def spline(self) -> CubicSpline:
        return CubicSpline(self.theta, self.values, bc_type="clamped")

    def reflected(self) -> "SphereAxisymField":
        """The field composed with the reflection θ ↦ π - θ."""
        return SphereAxisymField(self.values[::-1].copy(), self.n)


def axis_dilation(theta, log_tau: float):
    """Möbius dilation along the polar axis with the north pole as P.

    In stereographic coordinates projected from the north pole the map is
    y ↦ τy with τ = exp(log_tau); returns the image colatitude and the
    conformal factor ρ with φ*g_0 = ρ² g_0.
    """
    theta = np.asarray(theta, float)
    tau = np.exp(log_tau)
    half = 0.5 * theta
    image = 2.0 * np.arctan2(np.sin(half), tau * np.cos(half))
    rho = tau / (np.sin(half) ** 2 + tau**2 * np.cos(half) ** 2)
    return image, rho


def axis_log_tau(s: float) -> float:
    """log τ of φ_{P,t} for ξ = s·e_{n+1}: P = sign(s)e_{n+1}, t = 1/(1-|s|).

    φ_{-P,t} equals the dilation with pole P and factor 1/t.
    """
    if not -1.0 < s < 1.0:
        raise DomainError("need |xi| < 1", xi=s)
    return -np.sign(s) * np.log1p(-abs(s))
