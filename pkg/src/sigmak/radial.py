"""Rotationally symmetric conformal factors in cylindrical variables.

For u(r) on R^n \\ {0} put t = ln r and ξ(t) = -(2/(n-2)) ln u(r) - t. The
Schouten tensor then has a radial eigenvalue λ_r and a tangential eigenvalue
λ_t (multiplicity n-1):

    λ_t = e^{2ξ} (1 - ξ'^2) / 2,    λ_r = e^{2ξ} (ξ'' - (1 - ξ'^2) / 2).

Profiles are integrated in the rapidity η with ξ' = tanh η, so that
1 - ξ'^2 = sech^2 η stays representable when ξ' is within rounding of 1
(the V_0 profile has ξ' = tanh t).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, cosh, exp, log, tanh

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConeError, DomainError, PreconditionError
from .sphere import sphere_rule
from .symmetric import elementary_symmetric


@dataclass
class RadialProfile:
    t: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    xipp: np.ndarray
    n: int
    a: float | None = None

    @property
    def xip(self) -> np.ndarray:
        return np.tanh(self.eta)

    @property
    def one_minus_xip2(self) -> np.ndarray:
        return 1.0 / np.cosh(self.eta) ** 2

    def u(self) -> np.ndarray:
        """u(r) at r = e^t."""
        return np.exp(-0.5 * (self.n - 2) * (self.xi + self.t))

    def spectrum(self) -> np.ndarray:
        lam_r, lam_t = cylindrical_spectrum(self.xi, self.xip, self.xipp, self.n, self.one_minus_xip2)
        return np.column_stack([lam_r] + [lam_t] * (self.n - 1))


def _cone(xip):
    xip = np.asarray(xip, float)
    if np.any(np.abs(xip) >= 1.0):
        raise ConeError("|xi'| must be < 1")
    return 1.0 - xip * xip


def cylindrical_spectrum(xi, xip, xipp, n, one_minus=None):
    w = _cone(xip) if one_minus is None else np.asarray(one_minus, float)
    e2 = np.exp(2.0 * np.asarray(xi, float))
    return e2 * (np.asarray(xipp, float) - 0.5 * w), 0.5 * e2 * w


def sigma_cylindrical(xi, xip, xipp, ell: int, n: int, one_minus=None):
    """σ_ℓ = 2^{1-ℓ} C(n-1,ℓ-1) e^{2ℓξ} (1-ξ'^2)^{ℓ-1} [ξ'' + (n-2ℓ)/(2ℓ) (1-ξ'^2)]."""
    if not 1 <= ell <= n:
        raise DomainError("need 1 <= ell <= n")
    w = _cone(xip) if one_minus is None else np.asarray(one_minus, float)
    return (
        2.0 ** (1 - ell) * comb(n - 1, ell - 1) * np.exp(2.0 * ell * np.asarray(xi, float))
        * w ** (ell - 1) * (np.asarray(xipp, float) + (n - 2.0 * ell) / (2.0 * ell) * w)
    )


def h_of_a(a: float, n: int) -> float:
    return 1.0 - exp(-n * a)


def gamma_of_a(a: float, n: int) -> float:
    """Decay exponent (n-2)/2 [1 + (1 - h(a)^{2/n})^{1/2}]."""
    h = h_of_a(a, n)
    return 0.5 * (n - 2) * (1.0 + (1.0 - h ** (2.0 / n)) ** 0.5)


def integrate_profile(n: int, k: int, target, xi0: float, eta0: float, t_max: float,
                      step: float = 1e-3, t0: float = 0.0, a: float | None = None) -> RadialProfile:
    """RK4 for the profile with prescribed σ_k(t) = target(t).

    Solving the cylindrical formula for ξ'' and writing ξ' = tanh η gives

        η' = target(t) e^{-2kξ} cosh^{2k} η / c - (n-2k)/(2k),
        c  = 2^{1-k} C(n-1, k-1).
    """
    if not 1 <= k <= n:
        raise DomainError("need 1 <= k <= n")
    if step <= 0 or t_max <= t0:
        raise DomainError("need step > 0 and t_max > t0")
    c = 2.0 ** (1 - k) * comb(n - 1, k - 1)
    shift = (n - 2.0 * k) / (2.0 * k)
    const = not callable(target)
    S0 = float(target) if const else 0.0

    def rhs(t, xi, eta):
        S = S0 if const else float(target(t))
        ch = cosh(eta)
        return tanh(eta), S * exp(-2.0 * k * xi) * ch ** (2 * k) / c - shift

    steps = int(round((t_max - t0) / step))
    ts = t0 + step * np.arange(steps + 1)
    xs = np.empty(steps + 1)
    es = np.empty(steps + 1)
    xs[0], es[0] = xi0, eta0
    x, e = float(xi0), float(eta0)
    for i in range(steps):
        t = ts[i]
        try:
            k1x, k1e = rhs(t, x, e)
            k2x, k2e = rhs(t + 0.5 * step, x + 0.5 * step * k1x, e + 0.5 * step * k1e)
            k3x, k3e = rhs(t + 0.5 * step, x + 0.5 * step * k2x, e + 0.5 * step * k2e)
            k4x, k4e = rhs(t + step, x + step * k3x, e + step * k3e)
            x += step * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0
            e += step * (k1e + 2 * k2e + 2 * k3e + k4e) / 6.0
        except OverflowError:
            x = e = float("inf")
        if not (np.isfinite(x) and np.isfinite(e)):
            raise ConeError("profile left the cone (|xi'| -> 1)", t=float(ts[i + 1]))
        xs[i + 1], es[i + 1] = x, e
    S = np.full_like(ts, S0) if const else np.asarray(target(ts), float)
    etap = S * np.exp(-2.0 * k * xs) * np.cosh(es) ** (2 * k) / c - shift
    xipp = etap / np.cosh(es) ** 2
    return RadialProfile(ts, xs, es, xipp, n, a)


def integrate_Va(a: float, n: int, t_max: float = 20.0, step: float = 1e-3) -> RadialProfile:
    """V_a profile: σ_{n/2} = 2^{-n/2} C(n, n/2), ξ(0) = a, ξ'(0) = 0.

    Inverting the cylindrical formula at ℓ = n/2 gives
    ξ'' = e^{-nξ} (1 - ξ'^2)^{1-n/2}, i.e. η' = (e^{-ξ} cosh η)^n.
    """
    if a < 0:
        raise DomainError("need a >= 0")
    if n % 2 or n < 4:
        raise DomainError("n must be even and at least 4")
    k = n // 2
    return integrate_profile(n, k, 2.0 ** (-k) * comb(n, k), a, 0.0, t_max, step, a=a)


def conserved_quantity(profile: RadialProfile) -> np.ndarray:
    """E = (1 - ξ'^2)^{n/2} - e^{-nξ}; constant h(a) along V_a."""
    n = profile.n
    return profile.one_minus_xip2 ** (n / 2.0) - np.exp(-n * profile.xi)


def tail_exponent(profile: RadialProfile, window: float = 5.0) -> float:
    """Least-squares slope of -ln u = (n-2)/2 (ξ + t) over [t_max - window, t_max]."""
    t = profile.t
    if t[-1] - t[0] < 15.0:
        raise PreconditionError("profile must be integrated over at least 15 units of t")
    sel = t >= t[-1] - window
    y = 0.5 * (profile.n - 2) * (profile.xi[sel] + t[sel])
    return float(np.polyfit(t[sel], y, 1)[0])


def H_quantity(profile: RadialProfile, k: int) -> np.ndarray:
    """H = e^{(2k-n)ξ} (1 - ξ'^2)^k."""
    return np.exp((2 * k - profile.n) * profile.xi) * profile.one_minus_xip2**k


def check_H_monotone(profile: RadialProfile, k: int, t_range=None, tol: float = 1e-10) -> dict:
    """Largest per-step increase of H where ξ' ≥ 0 on the tested range."""
    t = profile.t
    sel = np.ones(t.size, bool) if t_range is None else (t >= t_range[0]) & (t <= t_range[1])
    sel &= profile.eta >= 0
    H = H_quantity(profile, k)[sel]
    dH = np.diff(H)
    return {
        "k": k,
        "max_increase": float(dH.max()) if dH.size else 0.0,
        "max_decrease": float(-dH.min()) if dH.size else 0.0,
        "non_increasing": bool(dH.size == 0 or dH.max() <= tol),
        "nodes": int(sel.sum()),
    }


def two_sided_bound(n: int, k: int) -> float:
    """2^{(n-2)k/(2k-n)}, the upper constant for k > n/2."""
    if not 2 * k > n:
        raise DomainError("need k > n/2")
    return 2.0 ** ((n - 2) * k / (2.0 * k - n))


def check_two_sided_bound(profile: RadialProfile, r1: float, r2: float, k: int,
                          tol: float = 1e-8, cone_tol: float = 1e-10) -> dict:
    """Ratio r2^{n-2} u(r2) / (r1^{n-2} u(r1)) against [1, 2^{(n-2)k/(2k-n)}]."""
    n = profile.n
    bound = two_sided_bound(n, k)
    t1, t2 = log(r1), log(r2)
    t = profile.t
    if not (t[0] <= t1 < t2 <= t[-1]):
        raise DomainError("radii outside the profile range")
    sel = (t >= t1) & (t <= t2)
    if np.any(profile.eta[sel] < -cone_tol):
        raise PreconditionError("r^{(n-2)/2} u is not non-increasing on [r1, r2]")
    spec = profile.spectrum()[sel]
    e = elementary_symmetric(spec)
    # σ_ℓ(|λ|) is the size of the terms cancelling in σ_ℓ on the cone boundary
    scale = np.maximum(1.0, elementary_symmetric(np.abs(spec))[:, 1:k + 1])
    if np.any(e[:, 1:k + 1] < -cone_tol * scale):
        raise ConeError("profile leaves the closed cone on [r1, r2]")
    xi = CubicSpline(t, profile.xi)
    ratio = exp(0.5 * (n - 2) * ((t2 - t1) - (float(xi(t2)) - float(xi(t1)))))
    return {
        "ratio": ratio,
        "bound": bound,
        "holds": bool(1.0 - tol <= ratio <= bound + tol),
    }


def spherical_average(u, center, radii, n: int, degree: int = 24) -> np.ndarray:
    """û(r) = (mean over ∂B_r of u^{-2/(n-2)})^{-(n-2)/2}."""
    radii = np.atleast_1d(np.asarray(radii, float))
    if np.any(radii <= 0):
        raise DomainError("radii must be positive")
    om, w = sphere_rule(n - 1, degree)
    w = w / w.sum()
    pts = np.asarray(center, float) + radii[:, None, None] * om[None, :, :]
    vals = np.asarray(u(pts), float)
    if np.any(vals <= 0):
        raise PreconditionError("field must be positive")
    m = (vals ** (-2.0 / (n - 2))) @ w
    return m ** (-(n - 2) / 2.0)


def profile_from_samples(t, u_vals, n: int) -> RadialProfile:
    """Profile of sampled u(e^t) on a uniform t grid (4th-order differences).

    Two nodes are dropped at each end.
    """
    t = np.asarray(t, float)
    dt = t[1] - t[0]
    xi = -(2.0 / (n - 2)) * np.log(np.asarray(u_vals, float)) - t
    d1 = (xi[:-4] - 8 * xi[1:-3] + 8 * xi[3:-1] - xi[4:]) / (12 * dt)
    d2 = (-xi[:-4] + 16 * xi[1:-3] - 30 * xi[2:-2] + 16 * xi[3:-1] - xi[4:]) / (12 * dt * dt)
    if np.any(np.abs(d1) >= 1):
        raise ConeError("|xi'| >= 1 in sampled profile")
    return RadialProfile(t[2:-2], xi[2:-2], np.arctanh(d1), d2, n)
