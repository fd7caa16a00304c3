"""Finite-difference and quadrature checks of the integral and divergence
identities satisfied by F[ψ], its Newton tensors and σ_k-curvature.

Divergence checks difference twice (once to form F[ψ], once for the
divergence), so a residual is available four nodes away from the boundary.
The refinement drivers evaluate it at fixed physical points on nested
9-node-per-axis boxes with spacing h, h/2, ..., which keeps memory small
even for n = 5 while measuring the observed convergence order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, log2

import numpy as np

from . import grid
from .conformal import bubble, f_field
from .errors import ConeError, DivergentTail, DomainError, PreconditionError
from .quadrature import ball_rule, shell_rule
from .sphere import SphereAxisymField
from .symmetric import elementary_symmetric, eigenvalues, newton_tensors


@dataclass
class IdentityReport:
    identity: str
    residual: float
    h: float
    residuals: list = field(default_factory=list)
    hs: list = field(default_factory=list)
    orders: list = field(default_factory=list)

    @property
    def order(self):
        return self.orders[-1] if self.orders else None

    def to_dict(self):
        return {
            "identity": self.identity,
            "residual": self.residual,
            "h": self.h,
            "residuals": self.residuals,
            "hs": self.hs,
            "orders": self.orders,
            "order": self.order,
        }


# ---------------------------------------------------------------------------
# pointwise ingredients


def _ingredients(psi: grid.EuclideanField, upto: int):
    """F, ∇ψ, ψ, σ_0..σ_n and T_0..T_upto on the first interior block."""
    n = psi.n
    F = f_field(psi)
    g = grid.gradient(psi.values, psi.h)
    e = elementary_symmetric(eigenvalues(F))
    T = newton_tensors(F, upto)
    vals = grid.trim(psi.values, range(n))
    return F, g, vals, e, T


def _inner(a, n):
    return grid.trim(a, range(n), ndim_space=n)


def _quad(T, g):
    return np.einsum("...ab,...a,...b->...", T, g, g)


def divergence_residual(psi: grid.EuclideanField, ell: int) -> np.ndarray:
    """∇_a T_ℓ^a_b - (n-2ℓ) T_ℓ^a_b ∇_aψ + (n-ℓ) σ_ℓ ∇_bψ, shape ``inner + (n,)``."""
    n = psi.n
    if not 0 <= ell <= n:
        raise DomainError("ell out of range")
    F, g, _, e, T = _ingredients(psi, ell)
    lhs = grid.divergence(T[ell], psi.h, n)
    Ti, gi, si = _inner(T[ell], n), _inner(g, n), _inner(e[..., ell], n)
    rhs = (n - 2 * ell) * np.einsum("...ab,...a->...b", Ti, gi) - (n - ell) * si[..., None] * gi
    return lhs - rhs


def weighted_residual(psi: grid.EuclideanField, ell: int, p: float, q: float) -> np.ndarray:
    """Residual of the e^{-qψ}|∇ψ|^p-weighted divergence identity for T_ℓ∇ψ."""
    n = psi.n
    if not 0 <= ell <= n - 1:
        raise DomainError("need 0 <= ell <= n-1")
    if p < 0:
        raise DomainError("need p >= 0")
    F, g, w, e, T = _ingredients(psi, ell + 1)
    g2 = np.sum(g * g, axis=-1)
    weight = np.exp(-q * w) * g2 ** (p / 2.0)
    X = weight[..., None] * np.einsum("...ab,...b->...a", T[ell], g)
    lhs = grid.divergence(X, psi.h, n)
    gi, g2i, Ei = _inner(g, n), _inner(g2, n), _inner(np.exp(-q * w), n)
    Tl, Tl1 = _inner(T[ell], n), _inner(T[ell + 1], n)
    sl, sl1 = _inner(e[..., ell], n), _inner(e[..., ell + 1], n)
    gp = g2i ** (p / 2.0)
    rhs = (p + ell + 1) * sl1 * gp + (n - 2 * ell - q - p / 2.0 - 1.0) * gp * _quad(Tl, gi)
    rhs = rhs - 0.5 * (n - ell) * sl * gp * g2i
    if p != 0:
        rhs = rhs - p * g2i ** (p / 2.0 - 1.0) * _quad(Tl1, gi)
    return lhs - Ei * rhs


def rising(x: float, j: int) -> float:
    """Rising factorial x^{(j)} = x (x+1) ... (x+j-1)."""
    out = 1.0
    for i in range(j):
        out *= x + i
    return out


def summed_coefficients(n: int, k: int, q: float, t: float, s: float):
    """Coefficients (c_j, a_j, b_j), j = 0..k-1, of the summed identity

        div(e^{-qψ} Σ c_j |∇ψ|^{2j} T_{k-1-j} ∇ψ)
            = e^{-qψ} [k σ_k + Σ c_j a_j |∇ψ|^{2j} T_{k-1-j}(∇ψ,∇ψ)
                       - Σ b_j |∇ψ|^{2j+2} σ_{k-1-j}].
    """
    if t <= 0 or s <= 0:
        raise DomainError("need t, s > 0")
    j = np.arange(k)
    c = np.array([rising(t, i) / (2.0**i * rising(s, i)) for i in j])
    a = n - 2 * k + (j + 1) * (s - t) / (s + j) - q
    b = np.array(
        [
            rising(t, i) / (2.0 ** (i + 1) * rising(s, i + 1))
            * ((n - k + 1) * s - (k + 1) * t + (n - 2 * k + s - t) * i)
            for i in j
        ]
    )
    return c, a, b


def specialized_coefficients(n: int, k: int, delta: float, q: float):
    """Closed forms for t = n-k+1, s = k+1+δ: (c_j, a_j, β_j) with b_j = δ β_j."""
    j = np.arange(k)
    t, s = n - k + 1.0, k + 1.0 + delta
    c = np.array([rising(t, i) / (2.0**i * rising(s, i)) for i in j])
    a = (k * (n - 2 * k) + delta * (n - 2 * k + 1 + j)) / (k + 1 + delta + j) - q
    beta = np.array([rising(t, i + 1) / (2.0 ** (i + 1) * rising(s, i + 1)) for i in j])
    return c, a, beta


def _summed_parts(psi, k, q, t, s):
    n = psi.n
    if not 1 <= k <= n:
        raise DomainError("need 1 <= k <= n")
    c, a, b = summed_coefficients(n, k, q, t, s)
    F, g, w, e, T = _ingredients(psi, k)
    g2 = np.sum(g * g, axis=-1)
    E = np.exp(-q * w)
    X = 0.0
    for j in range(k):
        X = X + c[j] * g2[..., None] ** j * np.einsum("...ab,...b->...a", T[k - 1 - j], g)
    div = grid.divergence(E[..., None] * X, psi.h, n)
    gi, g2i, Ei = _inner(g, n), _inner(g2, n), _inner(E, n)
    sig = _inner(e, n)
    tsum = sum(c[j] * a[j] * g2i**j * _quad(_inner(T[k - 1 - j], n), gi) for j in range(k))
    ssum = sum(b[j] * g2i ** (j + 1) * sig[..., k - 1 - j] for j in range(k))
    return div, Ei, sig[..., k], tsum, ssum, sig, g2i


def summed_residual(psi: grid.EuclideanField, k: int, q: float, t: float, s: float) -> np.ndarray:
    div, E, sk, tsum, ssum, _, _ = _summed_parts(psi, k, q, t, s)
    return div - E * (k * sk + tsum - ssum)


# ---------------------------------------------------------------------------
# refinement drivers


def refinement_study(name, residual_fn, psi, points, h0=0.1, refine=2, half_nodes=4):
    """Max residual at ``points`` on boxes with spacing h0 / 2^i, i = 0..refine.

    ``psi`` is a callable on arrays of points ``(..., n)``; each box has
    ``2*half_nodes + 1`` nodes per axis, centred at a point.
    """
    points = np.atleast_2d(np.asarray(points, float))
    hs, res = [], []
    for i in range(refine + 1):
        h = h0 / 2**i
        worst = 0.0
        for pt in points:
            field_ = grid.EuclideanField.centered(psi, pt, h, half_nodes)
            r = np.asarray(residual_fn(field_))
            worst = max(worst, float(np.max(np.abs(r))) if r.size else 0.0)
        hs.append(h)
        res.append(worst)
    orders = []
    for r0, r1 in zip(res[:-1], res[1:]):
        orders.append(log2(r0 / r1) if r0 > 0 and r1 > 0 else float("inf") if r1 == 0 and r0 > 0 else None)
    return IdentityReport(name, res[-1], hs[-1], res, hs, orders)


def _dispatch(name, fn, psi, points, h, refine):
    if isinstance(psi, grid.EuclideanField):
        r = np.abs(fn(psi))
        return IdentityReport(name, float(r.max()) if r.size else 0.0, max(psi.h), [float(r.max())], [max(psi.h)], [])
    if points is None:
        raise PreconditionError("sample points are required for callable fields")
    return refinement_study(name, fn, psi, points, h, refine)


def check_divergence(psi, ell: int, points=None, h: float = 0.1, refine: int = 2) -> IdentityReport:
    """Newton-tensor divergence identity for T_ℓ of F[ψ]."""
    return _dispatch(f"divergence[ell={ell}]", lambda f: divergence_residual(f, ell), psi, points, h, refine)


def check_weighted_divergence(psi, ell: int, p: float, q: float, points=None, h=0.1, refine=2):
    return _dispatch(
        f"weighted[ell={ell},p={p},q={q}]", lambda f: weighted_residual(f, ell, p, q), psi, points, h, refine
    )


def check_summed_identity(psi, k: int, q: float, t: float, s: float, points=None, h=0.1, refine=2):
    rep = _dispatch(
        f"summed[k={k},q={q},t={t},s={s}]", lambda f: summed_residual(f, k, q, t, s), psi, points, h, refine
    )
    return rep


def specialization_report(n: int, k: int, delta: float = 0.05, q: float = 0.0) -> dict:
    """Coefficients of the t = n-k+1, s = k+1+δ specialization and their signs."""
    c, a, beta = specialized_coefficients(n, k, delta, q)
    return {
        "n": n,
        "k": k,
        "delta": delta,
        "c": c.tolist(),
        "a_plus_q": (a + q).tolist(),
        "delta_coefficients": beta.tolist(),
        "all_positive": bool(np.all(c > 0) and np.all(beta > 0)),
    }


# ---------------------------------------------------------------------------
# Cacciopoli integrands


def smooth_cutoff(r, r_in, r_out):
    """C^2 radial cutoff: 1 on |y| <= r_in, 0 on |y| >= r_out."""
    x = np.clip((np.asarray(r, float) - r_in) / (r_out - r_in), 0.0, 1.0)
    return 1.0 - x**3 * (10.0 - 15.0 * x + 6.0 * x * x)


def cacciopoli_sides(psi, n: int, k: int, q: float, r: float, R: float, delta: float = 0.05,
                     h: float = 0.1, sign: int = 1, cutoff: str = "indicator", cone_tol: float = 1e-10):
    """Integral sides and the pointwise inequality behind the Cacciopoli estimate.

    ``sign = +1`` uses weight e^{-qψ} with s = k+1+δ and checks
    div X ≤ e^{-qψ}[k σ_k - δ Σ β_j |∇ψ|^{2j+2} σ_{k-1-j}], valid when every
    a_j ≤ 0. ``sign = -1`` uses s = k+1-δ, checks the reversed inequality
    with +δ, valid when every a_j ≥ 0 (large negative q). The returned
    ``slack`` is the minimum over nodes of the gap (≥ 0 when it holds).
    """
    if not 0 < r < R:
        raise DomainError("need 0 < r < R")
    half = int(np.ceil(R / h)) + 4
    fld = grid.EuclideanField.centered(psi, np.zeros(n), h, half)
    s_par = k + 1.0 + sign * delta
    t_par = n - k + 1.0
    F = f_field(fld)
    e_all = elementary_symmetric(eigenvalues(F))
    pts = fld.interior_coords()
    rad = np.linalg.norm(pts, axis=-1)
    inside = rad <= R
    bad = inside & np.any(e_all[..., 1:k + 1] < -cone_tol, axis=-1)
    if np.any(bad):
        raise ConeError("F[psi] leaves the closed cone", nodes=pts[bad][:10].tolist())

    div, E, sk, tsum, ssum, sig, g2 = _summed_parts(fld, k, q, t_par, s_par)
    c, a, b = summed_coefficients(n, k, q, t_par, s_par)
    bound = E * (k * sk - ssum)
    gap = sign * (bound - div)
    inner = np.linalg.norm(grid.trim(pts, range(n), ndim_space=n), axis=-1) <= R
    coeff_ok = bool(np.all(a <= 0)) if sign > 0 else bool(np.all(a >= 0))

    g = grid.gradient(fld.values, fld.h)
    w = grid.trim(fld.values, range(n))
    weight = np.exp(-q * w)
    wts = grid.trapezoid_weights(weight.shape, fld.h)
    if cutoff == "smooth":
        eta = smooth_cutoff(rad, r, R) ** (2 * k)
        lhs_w = eta
    else:
        lhs_w = (rad <= r).astype(float)
    gpow = np.sum(g * g, axis=-1) ** k
    return {
        "lhs": float(np.sum(wts * lhs_w * weight * gpow)),
        "rhs_sigma": float(np.sum(wts * inside * weight * e_all[..., k])),
        "rhs_volume": float(np.sum(wts * inside * weight)),
        "scale": (R - r) ** (-2 * k),
        "delta": delta,
        "s": s_par,
        "t": t_par,
        "a": a.tolist(),
        "coefficients_admissible": coeff_ok,
        "slack": float(np.min(gap[inner])) if np.any(inner) else float("nan"),
        "h": h,
    }


# ---------------------------------------------------------------------------
# Kazdan–Warner, Pohozaev and moments on R^n


def fd_gradient(K, step: float = 1e-4):
    """4th-order central-difference gradient of a callable on (..., n)."""

    def grad(y):
        y = np.asarray(y, float)
        n = y.shape[-1]
        out = np.empty(y.shape)
        for i in range(n):
            e = np.zeros(n)
            e[i] = step
            out[..., i] = (-K(y + 2 * e) + 8 * K(y + e) - 8 * K(y - e) + K(y - 2 * e)) / (12 * step)
        return out

    return grad


def _check_tail(n, u, radius, tail_tol, center=None):
    p = 2.0 * n / (n - 2.0)
    pts, w = ball_rule(n, radius, center)
    mass = float(w @ u(pts) ** p)
    tpts, tw = shell_rule(n, 0.9 * radius, radius, center)
    tail = float(tw @ u(tpts) ** p)
    if tail > tail_tol * mass:
        raise DivergentTail("integrand tail is not negligible", tail=tail, mass=mass, radius=radius)
    return pts, w, mass


def kazdan_warner(u, K, n: int | None = None, radius: float = 50.0, grad_K=None, tail_tol: float = 1e-3):
    """∫ ∂_ℓ K u^{2n/(n-2)} dy over R^n (truncated), or the sphere version.

    ``u`` may be a callable on R^n, an :class:`EuclideanField` (trapezoid
    over the box) or a :class:`SphereAxisymField`, in which case ``K`` must
    provide ``theta_derivative`` and the vector ∫_{S^n} ⟨∇K, ∇x_i⟩ v^{2n/(n-2)}
    dv is returned.
    """
    if isinstance(u, SphereAxisymField):
        return kazdan_warner_sphere(u, K)
    grad = grad_K if grad_K is not None else fd_gradient(K)
    if isinstance(u, grid.EuclideanField):
        n = u.n
        p = 2.0 * n / (n - 2.0)
        pts = u.coords()
        gk = grad(pts)
        wts = grid.trapezoid_weights(u.shape, u.h)
        return (wts * u.values**p).reshape(-1) @ gk.reshape(-1, n)
    if n is None:
        raise PreconditionError("dimension is required for callable fields")
    pts, w, _ = _check_tail(n, u, radius, tail_tol)
    p = 2.0 * n / (n - 2.0)
    return (w * u(pts) ** p) @ grad(pts)


def pohozaev(u, K, n: int, radius: float = 50.0, grad_K=None, tail_tol: float = 1e-3) -> float:
    """∫ y·∇K u^{2n/(n-2)} dy over R^n (truncated)."""
    grad = grad_K if grad_K is not None else fd_gradient(K)
    pts, w, _ = _check_tail(n, u, radius, tail_tol)
    p = 2.0 * n / (n - 2.0)
    return float((w * u(pts) ** p) @ np.sum(pts * grad(pts), axis=-1))


def kazdan_warner_sphere(v: SphereAxisymField, K) -> np.ndarray:
    """∫_{S^n} ⟨∇K, ∇x_i⟩ v^{2n/(n-2)} dv for axisymmetric v and K.

    Only the axial component can be non-zero; with ∇x_{n+1} = -sin θ ∂_θ it
    equals -∫ K'(θ) sin θ v^{2n/(n-2)} dv.
    """
    n = v.n
    p = 2.0 * n / (n - 2.0)
    th = v.theta
    kp = np.asarray(K.theta_derivative(th), float)
    out = np.zeros(n + 1)
    out[-1] = -v.integrate(kp * np.sin(th) * v.values**p)
    return out


@dataclass
class MomentSet:
    M: float
    mu_p: np.ndarray
    mu_lp: np.ndarray
    r0: float


def moments(u, r0: float, n: int | None = None, center=None) -> MomentSet:
    """Mass, first and second moments of u^{2n/(n-2)} over |y| ≤ r0."""
    if isinstance(u, grid.EuclideanField):
        n = u.n
        pts = u.coords()
        c = np.zeros(n) if center is None else np.asarray(center, float)
        y = pts - c
        mask = np.linalg.norm(y, axis=-1) <= r0
        wts = grid.trapezoid_weights(u.shape, u.h) * mask * u.values ** (2.0 * n / (n - 2.0))
        y = y.reshape(-1, n)
        wts = wts.ravel()
    else:
        if n is None:
            raise PreconditionError("dimension is required for callable fields")
        pts, w = ball_rule(n, r0, center)
        y = pts - (0 if center is None else np.asarray(center, float))
        wts = w * u(pts) ** (2.0 * n / (n - 2.0))
    M = float(wts.sum())
    if not M > 0:
        raise DomainError("mass must be positive")
    mu = wts @ y
    mu2 = np.einsum("m,mi,mj->ij", wts, y, y)
    return MomentSet(M, mu, 0.5 * (mu2 + mu2.T), r0)


def moment_limit(q, d: float, n: int, lam: float, r0: float = 1.0, degree: int = 24) -> float:
    """λ^d ∫_{|y|≤r0} q(y) u_λ^{2n/(n-2)} dy for the bubble u_λ of scale λ.

    Substituting z = λy turns this into ∫_{|z|≤λ r0} q(z)(1+|z|^2)^{-n} dz for
    q homogeneous of degree d, which is evaluated by a radial-angular rule.
    """
    if not 0 <= d < n:
        raise DomainError("need 0 <= d < n", d=d, n=n)
    if lam <= 0:
        raise DomainError("bubble scale must be positive")
    pts, w = ball_rule(n, lam * r0, degree=degree)
    z2 = np.sum(pts * pts, axis=-1)
    return float(w @ (q(pts) * (1.0 + z2) ** (-n)))


# ---------------------------------------------------------------------------
# convexity and δ-energy


def conformal_hessian(w: grid.EuclideanField) -> np.ndarray:
    """A_w = ∇²w - |∇w|^2/(2w) I at interior nodes."""
    if np.any(w.values <= 0):
        raise PreconditionError("field must be positive")
    g = grid.gradient(w.values, w.h)
    H = grid.hessian(w.values, w.h)
    wi = grid.trim(w.values, range(w.n))
    return H - (np.sum(g * g, axis=-1) / (2.0 * wi))[..., None, None] * np.eye(w.n)


def check_convexity(w1: grid.EuclideanField, w2: grid.EuclideanField) -> dict:
    """Spectrum of A_{(w1+w2)/2} - (A_{w1} + A_{w2})/2 over interior nodes."""
    if w1.shape != w2.shape or w1.h != w2.h or w1.origin != w2.origin:
        raise PreconditionError("fields must share a grid")
    mid = grid.EuclideanField(0.5 * (w1.values + w2.values), w1.h, w1.origin)
    D = conformal_hessian(mid) - 0.5 * (conformal_hessian(w1) + conformal_hessian(w2))
    ev = np.linalg.eigvalsh(0.5 * (D + np.swapaxes(D, -1, -2)))
    return {"min_eigenvalue": float(ev.min()), "max_abs": float(np.abs(D).max())}


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float


@dataclass(frozen=True)
class Annulus:
    center: tuple
    r1: float
    r2: float


def delta_energy_profile(u, domain, degree: int = 24) -> dict:
    """T = sup dist(x, ∂Ω)^{(n-2)/2} u(x) and energy ∫_Ω u^{2n/(n-2)}.

    The supremum is taken over the quadrature nodes, which are dense near
    the boundary and the centre.
    """
    if not isinstance(domain, (Ball, Annulus)):
        raise DomainError("domain must be a Ball or an Annulus")
    c = np.asarray(domain.center, float)
    n = c.size
    if isinstance(domain, Ball):
        pts, w = ball_rule(n, domain.radius, c, degree=degree)
        dist = domain.radius - np.linalg.norm(pts - c, axis=-1)
    else:
        pts, w = shell_rule(n, domain.r1, domain.r2, c, degree=degree, inner=domain.r1 if domain.r1 > 0 else 1.0)
        rr = np.linalg.norm(pts - c, axis=-1)
        dist = np.minimum(rr - domain.r1, domain.r2 - rr)
    vals = np.asarray(u(pts), float)
    if np.any(vals <= 0):
        raise PreconditionError("field must be positive")
    p = 2.0 * n / (n - 2.0)
    return {
        "T": float(np.max(dist ** ((n - 2) / 2.0) * vals)),
        "energy": float(w @ vals**p),
    }


def bubble_mass(n: int) -> float:
    """∫_{R^n} (1+|z|^2)^{-n} dz = |S^{n-1}| Γ(n/2)^2 / (2 Γ(n))."""
    from math import gamma

    from .sphere import sphere_area

    return sphere_area(n - 1) * gamma(n / 2) ** 2 / (2.0 * gamma(n))


def bubble_sigma(n: int, k: int) -> float:
    """σ_k of the standard bubble's Schouten tensor, 2^k C(n, k)."""
    return 2.0**k * comb(n, k)


# ---------------------------------------------------------------------------
# test families for ψ


def random_polynomial(n: int, degree: int = 4, seed: int = 0, scale: float = 0.3):
    """ψ(y) = Σ_{|α| ≤ degree} c_α y^α with c_α ~ scale·N(0,1)/|α|!, as a callable."""
    from itertools import combinations_with_replacement
    from math import factorial

    rng = np.random.default_rng(seed)
    terms = []
    for d in range(1, degree + 1):
        for combo in combinations_with_replacement(range(n), d):
            alpha = np.bincount(combo, minlength=n)
            terms.append((alpha, scale * rng.normal() / factorial(d)))

    def psi(y):
        y = np.asarray(y, float)
        out = np.zeros(y.shape[:-1])
        for alpha, c in terms:
            out = out + c * np.prod(y**alpha, axis=-1)
        return out

    return psi


def bubble_log_psi(n: int, lam: float = 1.0, y0=None):
    """ψ = -(2/(n-2)) ln u for the bubble u of scale lam centred at y0."""

    def psi(y):
        return -(2.0 / (n - 2.0)) * np.log(bubble(y, y0, lam, n))

    return psi
