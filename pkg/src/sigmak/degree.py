"""Critical points of K on S^n, Morse-signed counting over Crit₋(K), Brouwer
degrees of maps on balls, and the finite-dimensional map

    G(ξ) = ∫_{S^n} K∘φ_{P,t}(x) x dv,   P = ξ/|ξ|,  t = 1/(1-|ξ|).

G is integrated in coordinates adapted to P: x = tanh(s) P + sech(s) ω with
ω on the unit sphere of P^⊥, so dv = sech^n(s) ds dω and φ_{P,t} becomes the
shift s ↦ s + ln t. The s-integral uses the trapezoid rule on a truncated line
(the integrand is analytic in a strip and decays like e^{-n|s|}); the ω-rule is
exact for polynomial K.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm, qmc

from .errors import BoundaryZero, DegenerateZero, DomainError, NondegeneracyViolation, ResolutionError
from .kfunc import AxisymmetricProfile, SphereFunction
from .sphere import sphere_area, sphere_rule


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get("SIGMAK_THREADS", "1")))


def _pmap(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# critical points


@dataclass
class CriticalPointRecord:
    x: tuple
    value: float
    grad_norm: float
    laplacian: float
    hessian: tuple
    morse_index: int
    cls: str
    manifold_dim: int = 0

    @property
    def contribution(self) -> int:
        """(-1)^index for a point; (-1)^(normal index) χ(S^m) for an m-sphere of critical points."""
        sign = (-1) ** self.morse_index
        if self.manifold_dim == 0:
            return sign
        return sign * (1 + (-1) ** self.manifold_dim)

    def to_dict(self):
        d = asdict(self)
        d["class"] = d.pop("cls")
        d["contribution"] = self.contribution
        return d


def tangent_frame(x) -> np.ndarray:
    """Orthonormal basis of x^⊥ as columns, shape (m, m-1)."""
    x = np.asarray(x, float)
    m = x.size
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(m)]))
    return q[:, 1:m]


def sphere_seeds(m: int, count: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform points on S^{m-1}: scrambled Sobol mapped through the normal law."""
    sob = qmc.Sobol(m, scramble=True, seed=seed)
    u = sob.random(count)
    z = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _newton_sphere(K, x, tol, max_iter):
    for _ in range(max_iter):
        E = tangent_frame(x)
        g = E.T @ K.gradient(x)
        gn = np.linalg.norm(g)
        if gn < tol:
            return x, gn
        H = K.intrinsic_hessian(x, E)
        step = np.linalg.lstsq(H, -g, rcond=1e-14)[0]
        ns = np.linalg.norm(step)
        if ns > 0.5:
            step *= 0.5 / ns
        alpha = 1.0
        while alpha > 1e-6:
            y = x + alpha * (E @ step)
            y /= np.linalg.norm(y)
            if np.linalg.norm(K.intrinsic_gradient(y)) < gn:
                break
            alpha *= 0.5
        x = y
    return x, float(np.linalg.norm(K.intrinsic_gradient(x)))


def _dedupe(points, dist):
    out = []
    for p in sorted(points, key=lambda a: tuple(np.round(a, 9))):
        if all(np.linalg.norm(p - q) > dist for q in out):
            out.append(p)
    return out


def find_critical_points(K: SphereFunction, seeds: int = 512, seed: int = 0, tol: float = 1e-10,
                         nondeg_tol: float = 1e-8, dedupe: float = 1e-6, max_iter: int = 60,
                         workers: int | None = None) -> list:
    """Critical points of K by multistart Newton on the sphere.

    Seeds that do not reach |∇K| < tol are discarded. Raises
    :class:`NondegeneracyViolation` when |∇K| + |ΔK| ≤ nondeg_tol at a point.
    """
    if not isinstance(K, SphereFunction):
        raise DomainError("critical-point search needs an analytic K; use axisymmetric_critical_set for profiles")
    m = K.n + 1
    starts = sphere_seeds(m, seeds, seed)
    results = _pmap(lambda x0: _newton_sphere(K, x0, tol, max_iter), list(starts), worker_count(workers))
    found = [x for x, gn in results if gn < tol]
    records = []
    for x in _dedupe(found, dedupe):
        records.append(_record(K, x, nondeg_tol))
    return records


def _record(K, x, nondeg_tol):
    E = tangent_frame(x)
    gn = float(np.linalg.norm(K.intrinsic_gradient(x)))
    lap = float(K.laplacian(x))
    if gn + abs(lap) <= nondeg_tol:
        raise NondegeneracyViolation("|∇K| + |ΔK| vanishes at a critical point", x=x.tolist(), laplacian=lap)
    ev = np.linalg.eigvalsh(K.intrinsic_hessian(x, E))
    return CriticalPointRecord(
        x=tuple(float(a) for a in x),
        value=float(K(x)),
        grad_norm=gn,
        laplacian=lap,
        hessian=tuple(float(e) for e in ev),
        morse_index=int(np.sum(ev < 0)),
        cls="minus" if lap < 0 else "plus",
    )


def axisymmetric_critical_set(K, n: int | None = None, samples: int = 4096, nondeg_tol: float = 1e-8) -> list:
    """Critical set of an axisymmetric K(θ): the two poles and interior rings.

    A ring at colatitude θ0 is an (n-1)-sphere of critical points; its record
    carries the normal second derivative K''(θ0) as the only non-zero Hessian
    eigenvalue and ``manifold_dim = n - 1``.
    """
    n = K.n if n is None else n
    th = np.linspace(0.0, np.pi, samples + 1)
    dk = np.asarray(K.theta_derivative(th), float)
    scale = max(1.0, float(np.max(np.abs(K.theta_values(th)))))
    roots = []
    for i in range(1, samples - 1):
        a, b = dk[i], dk[i + 1]
        if a == 0.0:
            roots.append(th[i])
        elif a * b < 0:
            roots.append(brentq(K.theta_derivative, th[i], th[i + 1], xtol=1e-14))
    if np.any(np.abs(dk[1:-1]) < 1e-12 * scale) and not roots:
        raise NondegeneracyViolation("K' vanishes on an interval")
    records = []
    for t0, pole in [(0.0, True)] + [(r, False) for r in roots] + [(np.pi, True)]:
        k2 = float(K.theta_second(t0))
        x = np.zeros(n + 1)
        x[0], x[-1] = np.sin(t0), np.cos(t0)
        if pole:
            lap = n * k2
            hess = (k2,) * n
            dim = 0
        else:
            # Δ = ∂_θθ + (n-1) cot θ ∂_θ, and ∂_θ K = 0 on the ring
            lap = k2
            hess = tuple(sorted((k2,) + (0.0,) * (n - 1)))
            dim = n - 1
        if abs(lap) <= nondeg_tol:
            raise NondegeneracyViolation("|∇K| + |ΔK| vanishes at a critical point", theta=float(t0))
        records.append(
            CriticalPointRecord(
                x=tuple(float(a) for a in x),
                value=float(K.theta_values(np.array(t0))),
                grad_norm=0.0 if pole else abs(float(K.theta_derivative(np.array(t0)))),
                laplacian=float(lap),
                hessian=hess,
                morse_index=int(k2 < 0) * (n if pole else 1),
                cls="minus" if lap < 0 else "plus",
                manifold_dim=dim,
            )
        )
    return records


def critical_points(K, **kw) -> list:
    """Dispatch: rings need the axisymmetric analysis, otherwise multistart Newton."""
    if isinstance(K, AxisymmetricProfile) or (isinstance(K, SphereFunction) and K.axis_only and K.degree > 1):
        return axisymmetric_critical_set(K, nondeg_tol=kw.get("nondeg_tol", 1e-8))
    return find_critical_points(K, **kw)


def _check_morse(records, tol=1e-8):
    for r in records:
        if r.manifold_dim == 0 and min(abs(e) for e in r.hessian) <= tol:
            raise NondegeneracyViolation("critical point is degenerate", x=list(r.x), hessian=list(r.hessian))


def deg_crit_minus(records) -> int:
    """Σ over Crit₋ of (-1)^{Morse index} (critical rings weighted by χ)."""
    minus = [r for r in records if r.cls == "minus"]
    _check_morse(minus)
    return int(sum(r.contribution for r in minus))


def morse_euler_sum(records) -> int:
    _check_morse(records)
    return int(sum(r.contribution for r in records))


def existence_verdict(deg: int, n: int) -> dict:
    ref = (-1) ** n
    holds = deg != ref
    return {
        "deg_crit_minus": int(deg),
        "reference": ref,
        "criterion_holds": bool(holds),
        "verdict": "criterion holds: deg != (-1)^n" if holds else "criterion fails: deg = (-1)^n",
    }


# ---------------------------------------------------------------------------
# Brouwer degree


@dataclass
class DegreeResult:
    degree: int
    s: float
    zeros: list = field(default_factory=list)
    signs: list = field(default_factory=list)
    determinants: list = field(default_factory=list)
    boundary_min: float = float("nan")

    def to_dict(self):
        return asdict(self)


def fd_jacobian(F, x, step: float = 1e-6):
    """Central-difference Jacobian; F is evaluated once on a batch of points."""
    x = np.asarray(x, float)
    d = x.size
    pts = np.concatenate([x[None, :] + step * np.eye(d), x[None, :] - step * np.eye(d)])
    vals = np.asarray(F(pts))
    return ((vals[:d] - vals[d:]) / (2.0 * step)).T


def _batched(F):
    def f(x):
        x = np.asarray(x, float)
        if x.ndim == 1:
            return np.asarray(F(x), float)
        try:
            out = np.asarray(F(x), float)
            if out.shape == x.shape:
                return out
        except (ValueError, TypeError):
            pass
        return np.stack([np.asarray(F(p), float) for p in x])

    return f


def _newton_ball(F, x, tol, max_iter, radius, jac_step):
    fx = F(x)
    for _ in range(max_iter):
        nf = np.linalg.norm(fx)
        if nf < tol:
            return x, nf
        J = fd_jacobian(F, x, jac_step)
        step = np.linalg.lstsq(J, -fx, rcond=1e-14)[0]
        alpha = 1.0
        while alpha > 1e-8:
            y = x + alpha * step
            ny = np.linalg.norm(y)
            if ny >= radius:
                y = y * (radius * (1 - 1e-9) / ny)
            fy = F(y)
            if np.linalg.norm(fy) < (1 - 1e-4 * alpha) * nf:
                break
            alpha *= 0.5
        else:
            return x, nf
        x, fx = y, fy
    return x, float(np.linalg.norm(fx))


def ball_seeds(dim: int, s: float, count: int, seed: int = 0) -> np.ndarray:
    """Origin plus Sobol points of the cube kept inside the open ball of radius s."""
    sob = qmc.Sobol(dim, scramble=True, seed=seed)
    pts = []
    while len(pts) < count:
        c = (2.0 * sob.random(256) - 1.0) * s
        pts.extend(p for p in c if np.linalg.norm(p) < s)
    return np.vstack([np.zeros(dim)] + pts[: count - 1])


def brouwer_degree(F, dim: int, s: float, seeds: int = 64, seed: int = 0, tol: float = 1e-10,
                   det_tol: float = 1e-8, boundary_tol: float = 1e-6, boundary_degree: int = 9,
                   max_radius: float | None = None, jac_step: float = 1e-6, dedupe: float = 1e-6,
                   max_iter: int = 50, workers: int | None = None) -> DegreeResult:
    """deg(F, B_s, 0) as Σ sign det DF over zeros found by multistart Newton."""
    if s <= 0:
        raise DomainError("need s > 0")
    F = _batched(F)
    bpts, _ = sphere_rule(dim - 1, boundary_degree)
    bvals = np.linalg.norm(F(s * bpts), axis=-1)
    bmin = float(bvals.min())
    if bmin <= boundary_tol:
        raise BoundaryZero("map vanishes (numerically) on the boundary sphere", s=s, min_norm=bmin)
    radius = max_radius if max_radius is not None else np.inf
    starts = ball_seeds(dim, s, seeds, seed)
    results = _pmap(lambda x0: _newton_ball(F, x0, tol, max_iter, radius, jac_step), list(starts),
                    worker_count(workers))
    found = [x for x, nf in results if nf < tol]
    zeros = [z for z in _dedupe(found, dedupe)]
    near = [z for z in zeros if abs(np.linalg.norm(z) - s) <= dedupe]
    if near:
        raise BoundaryZero("zero on the boundary sphere", s=s, zero=near[0].tolist())
    inside = [z for z in zeros if np.linalg.norm(z) < s]
    signs, dets = [], []
    for z in inside:
        det = float(np.linalg.det(fd_jacobian(F, z, jac_step)))
        if abs(det) <= det_tol:
            raise DegenerateZero("Jacobian is (nearly) singular at a zero", zero=z.tolist(), det=det)
        signs.append(int(np.sign(det)))
        dets.append(det)
    return DegreeResult(int(sum(signs)), float(s), [tuple(map(float, z)) for z in inside], signs, dets, bmin)


# ---------------------------------------------------------------------------
# the reduced map G


class GQuadrature:
    """Quadrature for G on S^n in the coordinates adapted to P."""

    def __init__(self, n: int, degree: int | None = None, ds: float = 0.2, cutoff: float | None = None):
        self.n = n
        self.degree = 24 if degree is None else degree
        self.ds = ds
        # sech^n(s) < 2^n e^{-n|s|} drops below 1e-17 beyond the cutoff
        self.cutoff = cutoff if cutoff is not None else (17.0 * np.log(10.0) + n * np.log(2.0)) / n + 1.0
        half = int(np.ceil(self.cutoff / ds))
        self.s = ds * np.arange(-half, half + 1)
        self.ws = ds / np.cosh(self.s) ** n
        self.omega, self.wo = sphere_rule(n - 1, self.degree)

    def refined(self) -> "GQuadrature":
        return GQuadrature(self.n, self.degree, self.ds / 2.0, self.cutoff)

    def evaluate(self, K, xi) -> np.ndarray:
        xi = np.asarray(xi, float)
        single = xi.ndim == 1
        xi = np.atleast_2d(xi)
        n = self.n
        out = np.empty_like(xi)
        for b, z in enumerate(xi):
            r = float(np.linalg.norm(z))
            if r >= 1.0:
                raise DomainError("need |xi| < 1", xi=z.tolist())
            if r == 0.0:
                P = np.zeros(n + 1)
                P[-1] = 1.0
                L = 0.0
            else:
                P = z / r
                L = -np.log1p(-r)
            E = tangent_frame(P)
            w_perp = self.omega @ E.T
            s = self.s
            X = np.tanh(s)[:, None, None] * P + (1.0 / np.cosh(s))[:, None, None] * w_perp[None]
            Y = np.tanh(s + L)[:, None, None] * P + (1.0 / np.cosh(s + L))[:, None, None] * w_perp[None]
            Kv = np.asarray(K(Y), float)
            out[b] = np.einsum("i,j,ij,ijk->k", self.ws, self.wo, Kv, X)
        return out[0] if single else out


def G_of_xi(K, xi, quad: GQuadrature | None = None, check: bool = True, tol: float = 1e-8) -> np.ndarray:
    """G(ξ) = ∫ K∘φ_{P,t} x dv; with ``check`` the s-step is halved until stable to ``tol``."""
    n = K.n
    if quad is None:
        deg = K.degree + 1 if getattr(K, "degree", None) is not None else 24
        quad = GQuadrature(n, deg)
    g = quad.evaluate(K, xi)
    if not check:
        return g
    for _ in range(4):
        fine = quad.refined()
        g2 = fine.evaluate(K, xi)
        if np.max(np.abs(g2 - g)) <= tol * max(1.0, float(np.max(np.abs(g2)))):
            return g2
        quad, g = fine, g2
    raise ResolutionError("G quadrature did not stabilize; refine ds or the angular degree",
                          ds=quad.ds, degree=quad.degree)


def G_map(K, quad: GQuadrature | None = None):
    """Batched callable ξ ↦ G(ξ) with a fixed quadrature (used inside Newton)."""
    if quad is None:
        deg = K.degree + 1 if getattr(K, "degree", None) is not None else 24
        quad = GQuadrature(K.n, deg)
    return lambda xi: quad.evaluate(K, xi)


def degree_of_G(K, s_values=(0.5, 0.7, 0.9), seeds: int = 64, seed: int = 0, workers=None, **kw) -> dict:
    """deg(G, B_s, 0) for each s; ``consistent`` reports agreement across the scan.

    ``zero_radii`` lists |ξ| of the zeros found in the largest ball; the degree
    is constant for s beyond the largest of them (``s0_estimate``).
    """
    F = G_map(K)
    out = {}
    for s in s_values:
        res = brouwer_degree(F, K.n + 1, s, seeds=seeds, seed=seed, max_radius=0.999, workers=workers, **kw)
        out[s] = res
    degs = {r.degree for r in out.values()}
    radii = sorted(float(np.linalg.norm(z)) for z in out[max(s_values)].zeros)
    return {
        "per_s": out,
        "consistent": len(degs) == 1,
        "degree": degs.pop() if len(degs) == 1 else None,
        "zero_radii": radii,
        "s0_estimate": radii[-1] if radii else 0.0,
    }


def degree_identity(K, records=None, **kw) -> dict:
    """Compare deg(G, B_s, 0) with -(-1)^n + deg(∇K, Crit₋(K))."""
    n = K.n
    if records is None:
        records = critical_points(K)
    dm = deg_crit_minus(records)
    g = degree_of_G(K, **kw)
    expected = -((-1) ** n) + dm
    outer = g["per_s"][max(g["per_s"])].degree
    return {
        "deg_crit_minus": dm,
        "expected": expected,
        "deg_G": {str(s): r.degree for s, r in g["per_s"].items()},
        "consistent": g["consistent"],
        "holds": bool(g["consistent"] and g["degree"] == expected),
        "holds_outermost": bool(outer == expected),
        "zero_radii": g["zero_radii"],
        "s0_estimate": g["s0_estimate"],
        "euler_sum": morse_euler_sum(records),
        "euler_expected": 1 + (-1) ** n,
    }


def sphere_moment(n: int) -> float:
    """∫_{S^n} x_i^2 dv = |S^n| / (n+1)."""
    return sphere_area(n) / (n + 1)
