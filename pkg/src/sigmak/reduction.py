"""Axisymmetric σ_k-Nirenberg equation on S^n: the K_μ homotopy, the Möbius
parametrization π(w, ξ), the projection Π, the reduced map Λ_{ξ,μ}, and a
damped-Newton continuation solver.

Everything lives on the axisymmetric slice: fields depend on the colatitude
θ only and ξ = s·e_{n+1} runs along the symmetry axis, so of the n+1
components of Λ only the last one can be non-zero.

The reduced problem is solved in the w-frame. With φ = φ_{P,t},
π(w, ξ) = T_{φ^{-1}} w and Π(F_μ[π(w, ξ)]) = 0 is equivalent to

    σ_k(λ(A_{g_w})) = K_μ∘φ - Λ·φ(x),    ∫ x w^{2n/(n-2)} dv = 0,

which is a bordered system in (w, Λ_{n+1}).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import brentq

from .conformal import axisym_eigenvalues, axisym_pullback
from .errors import ConeExit, DomainError, NoConvergence, StepUnderflow
from .identities import kazdan_warner_sphere
from .sphere import SphereAxisymField, axis_dilation, axis_log_tau, axisym_weights, fd_matrices, sphere_area, theta_grid
from .symmetric import cone_margin, dsigma_dA, elementary_symmetric


def round_curvature(n: int, k: int) -> float:
    """σ_k of the round metric, 2^{-k} C(n, k)."""
    return 2.0 ** (-k) * comb(n, k)


def d_nk(n: int, k: int) -> float:
    """Coefficient of -(Δ + n) in the linearization at w ≡ 1: 2^{2-k} C(n-1, k-1) / (n-2)."""
    return 2.0 ** (2 - k) * comb(n - 1, k - 1) / (n - 2.0)


def d_nk_printed(n: int, k: int) -> float:
    """The same coefficient written with C(n, k); it overstates d_nk by n/k."""
    return 2.0 ** (2 - k) * comb(n, k) / (n - 2.0)


def _check_nk(n, k):
    if not (3 <= n and 1 <= k <= n):
        raise DomainError("need n >= 3 and 1 <= k <= n", n=n, k=k)


def K_mu_values(K, mu: float, theta, n: int, k: int) -> np.ndarray:
    """K_μ = μK + (1-μ) 2^{-k} C(n,k) at colatitudes θ."""
    return mu * np.asarray(K.theta_values(theta), float) + (1.0 - mu) * round_curvature(n, k)


# ---------------------------------------------------------------------------
# σ_k on axisymmetric fields


def sigma_axisym(values, n: int, k: int, with_jacobian: bool = False, cone_tol: float = 1e-10):
    """σ_k(λ(A_{g_v})) at every node; optionally the dense Jacobian d/dv.

    The Jacobian is assembled by the chain rule: ∂σ_k/∂λ are the diagonal
    entries of T_{k-1}(diag λ), and each eigenvalue depends on (v, v', v'').
    Raises :class:`ConeExit` with the offending nodes when λ ∉ Γ_k.
    """
    _check_nk(n, k)
    values = np.asarray(values, float)
    N = values.size - 1
    dth = np.pi / N
    lam_th, lam_t, d_th, d_t = axisym_eigenvalues(values, dth, n, with_partials=True)
    spec = np.column_stack([lam_th] + [lam_t] * (n - 1))
    e = elementary_symmetric(spec)
    bad = np.nonzero(~np.all(e[:, 1:k + 1] > cone_tol, axis=-1))[0]
    if bad.size:
        raise ConeExit("metric left the Γ_k cone", nodes=bad.tolist()[:20], count=int(bad.size))
    sig = e[:, k]
    margin = cone_margin(spec, k)
    if not with_jacobian:
        return sig, margin
    diag = np.zeros((N + 1, n, n))
    idx = np.arange(n)
    diag[:, idx, idx] = spec
    T = dsigma_dA(diag, k)
    s_th = T[:, 0, 0]
    s_t = np.trace(T, axis1=1, axis2=2) - s_th
    R = {key: s_th * d_th[key] + s_t * d_t[key] for key in ("v", "vp", "vpp")}
    D1, D2 = fd_matrices(N)
    J = np.diag(R["v"]) + R["vp"][:, None] * D1 + R["vpp"][:, None] * D2
    return sig, margin, J


def residual(v: SphereAxisymField, K, mu: float, k: int) -> np.ndarray:
    """F_μ[v] = σ_k(λ(A_{g_v})) - K_μ at every node."""
    sig, _ = sigma_axisym(v.values, v.n, k)
    return sig - K_mu_values(K, mu, v.theta, v.n, k)


def linearize(v: SphereAxisymField, K, mu: float, k: int) -> np.ndarray:
    """Dense matrix of the derivative of v ↦ F_μ[v] on the θ grid.

    K_μ does not depend on v, so K and μ only enter through the cone check.
    """
    _, _, J = sigma_axisym(v.values, v.n, k, with_jacobian=True)
    return J


def fd_jacobian_columns(v: SphereAxisymField, k: int, columns, step: float = 1e-6) -> np.ndarray:
    """Central-difference columns of the σ_k Jacobian (verification helper)."""
    out = []
    for j in columns:
        e = np.zeros(v.N + 1)
        e[j] = step
        sp, _ = sigma_axisym(v.values + e, v.n, k)
        sm, _ = sigma_axisym(v.values - e, v.n, k)
        out.append((sp - sm) / (2 * step))
    return np.stack(out, axis=1)


def axisym_harmonic(n: int, ell: int, theta) -> np.ndarray:
    """Zonal spherical harmonic of degree ℓ on S^n (Gegenbauer C_ℓ^{(n-1)/2}(cos θ))."""
    from scipy.special import eval_gegenbauer

    return eval_gegenbauer(ell, (n - 1) / 2.0, np.cos(theta))


# ---------------------------------------------------------------------------
# projection, mass centre, parametrization


def project_Pi(f, n: int | None = None, points=None, weights=None):
    """Πf = f - (n+1)/|S^n| x·∫ y f(y) dv.

    ``f`` is either a :class:`SphereAxisymField`/array on the θ grid (then
    ``n`` is required for arrays) or an array on quadrature ``points`` of
    S^n with ``weights``.
    """
    if points is not None:
        points = np.asarray(points, float)
        f = np.asarray(f, float)
        m = points.shape[-1] - 1
        mom = (weights * f) @ points
        return f - (m + 1) / sphere_area(m) * points @ mom
    if isinstance(f, SphereAxisymField):
        n, vals = f.n, f.values
    else:
        if n is None:
            raise DomainError("n is required for raw θ-grid arrays")
        vals = np.asarray(f, float)
    N = vals.size - 1
    c = np.cos(theta_grid(N))
    mom = axisym_weights(N, n) @ (c * vals)
    return vals - (n + 1) / sphere_area(n) * c * mom


def center_of_mass(w: SphereAxisymField) -> np.ndarray:
    """∫ x w^{2n/(n-2)} dv; only the axial component survives."""
    p = 2.0 * w.n / (w.n - 2.0)
    out = np.zeros(w.n + 1)
    out[-1] = w.integrate(np.cos(w.theta) * w.values**p)
    return out


def axis_parameter(xi, n: int) -> float:
    """s with ξ = s e_{n+1}; rejects ξ off the symmetry axis."""
    if np.ndim(xi) == 0:
        s = float(xi)
    else:
        xi = np.asarray(xi, float)
        if xi.size != n + 1:
            raise DomainError("xi must have n+1 components")
        if np.linalg.norm(xi[:-1]) > 1e-14:
            raise DomainError("only xi along the symmetry axis is supported on the axisymmetric slice")
        s = float(xi[-1])
    if not -1.0 < s < 1.0:
        raise DomainError("need |xi| < 1", xi=s)
    return s


def pi_parametrize(w: SphereAxisymField, xi) -> SphereAxisymField:
    """π(w, ξ) = T_{φ^{-1}} w with φ = φ_{P,t}; π(w, 0) = w."""
    s = axis_parameter(xi, w.n)
    if s == 0.0:
        return w
    return axisym_pullback(w, -axis_log_tau(s))


# ---------------------------------------------------------------------------
# reduced problem


@dataclass
class ReducedConfig:
    N: int = 256
    tol: float = 1e-9
    max_iter: int = 40
    mu_max: float = 0.2


@dataclass
class ReducedSolution:
    xi: tuple
    w: SphereAxisymField
    Lambda: np.ndarray
    mu: float
    k: int
    residual_norm: float
    iterations: int
    trace: list = field(default_factory=list)

    @property
    def com_norm(self) -> float:
        return float(np.linalg.norm(center_of_mass(self.w)))

    def to_dict(self):
        return {
            "xi": list(self.xi),
            "mu": self.mu,
            "k": self.k,
            "Lambda": self.Lambda.tolist(),
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "center_of_mass_norm": self.com_norm,
            "w_minus_one_sup": float(np.max(np.abs(self.w.values - 1.0))),
            "trace": self.trace,
        }


def _frame(theta, s):
    image, rho = axis_dilation(theta, axis_log_tau(s)) if s != 0.0 else (theta, np.ones_like(theta))
    return image, rho


def _reduced_system(wv, lam, K, mu, n, k, image, weights, jac):
    p = 2.0 * n / (n - 2.0)
    c = np.cos(theta_grid(wv.size - 1))
    if jac:
        sig, margin, J = sigma_axisym(wv, n, k, with_jacobian=True)
    else:
        sig, margin = sigma_axisym(wv, n, k)
    cphi = np.cos(image)
    F1 = sig - K_mu_values(K, mu, image, n, k) + lam * cphi
    F2 = weights @ (c * wv**p)
    if not jac:
        return F1, F2, margin
    M = np.zeros((wv.size + 1, wv.size + 1))
    M[:-1, :-1] = J
    M[:-1, -1] = cphi
    M[-1, :-1] = p * weights * c * wv ** (p - 1)
    return F1, F2, margin, M


def solve_reduced(K, xi, mu: float, k: int, n: int | None = None, config: ReducedConfig | None = None,
                  w0=None, lam0: float = 0.0) -> ReducedSolution:
    """Solve Π(F_μ[π(w, ξ)]) = 0 for w in S_0 by damped Newton on (w, Λ_{n+1})."""
    cfg = config or ReducedConfig()
    n = K.n if n is None else n
    _check_nk(n, k)
    if not 0.0 <= mu <= 1.0:
        raise DomainError("need 0 <= mu <= 1")
    if mu > cfg.mu_max:
        raise DomainError("mu exceeds the configured bound for the reduced problem", mu=mu, mu_max=cfg.mu_max)
    s = axis_parameter(xi, n)
    theta = theta_grid(cfg.N)
    image, _ = _frame(theta, s)
    weights = axisym_weights(cfg.N, n)
    wv = np.ones(cfg.N + 1) if w0 is None else np.asarray(w0, float).copy()
    lam = float(lam0)
    trace = []
    F1, F2, _, M = _reduced_system(wv, lam, K, mu, n, k, image, weights, True)
    norm = max(float(np.max(np.abs(F1))), abs(F2))
    for it in range(cfg.max_iter):
        trace.append(norm)
        if norm <= cfg.tol:
            break
        step = np.linalg.solve(M, -np.concatenate([F1, [F2]]))
        alpha = 1.0
        while True:
            trial_w = wv + alpha * step[:-1]
            trial_l = lam + alpha * step[-1]
            try:
                if np.all(trial_w > 0):
                    G1, G2, _, M2 = _reduced_system(trial_w, trial_l, K, mu, n, k, image, weights, True)
                    tn = max(float(np.max(np.abs(G1))), abs(G2))
                    if tn <= (1.0 - 1e-4 * alpha) * norm:
                        break
            except ConeExit:
                pass
            alpha *= 0.5
            if alpha < 1e-8:
                raise NoConvergence("line search failed in the reduced Newton iteration", trace=trace)
        wv, lam, F1, F2, M, norm = trial_w, trial_l, G1, G2, M2, tn
    else:
        if norm > cfg.tol:
            raise NoConvergence("reduced Newton iteration did not converge", trace=trace)
    Lam = np.zeros(n + 1)
    Lam[-1] = lam
    xi_vec = np.zeros(n + 1)
    xi_vec[-1] = s
    return ReducedSolution(tuple(xi_vec), SphereAxisymField(wv, n), Lam, mu, k, norm, len(trace) - 1, trace)


def lambda_from_projection(sol: ReducedSolution, K) -> np.ndarray:
    """Λ = -(n+1)/|S^n| ∫ F_μ[π(w, ξ)] x dv, evaluated on the pushed-forward field."""
    n = sol.w.n
    v = pi_parametrize(sol.w, sol.xi)
    F = residual(v, K, sol.mu, sol.k)
    out = np.zeros(n + 1)
    out[-1] = -(n + 1) / sphere_area(n) * v.integrate(F * np.cos(v.theta))
    return out


def kw_linear_system(K, xi, w: SphereAxisymField | None = None, n: int | None = None, N: int = 256,
                     form: str = "pullback") -> float:
    """Λ_{n+1}/μ from the Kazdan–Warner linear system on the w-frame.

    ``form="pullback"`` uses ∇(Λ·φ) on the left-hand side, consistent with
    σ_k(g_w) = K_μ∘φ - Λ·φ; ``form="printed"`` uses ∇(Λ·x). Both coincide at
    ξ = 0. With ``w = None`` the weight w^{2n/(n-2)} is replaced by 1 (the
    μ → 0 limit).
    """
    n = K.n if n is None else n
    s = axis_parameter(xi, n)
    if w is not None:
        N, wv = w.N, w.values
    else:
        wv = np.ones(N + 1)
    theta = theta_grid(N)
    image, rho = _frame(theta, s)
    p = 2.0 * n / (n - 2.0)
    wts = axisym_weights(N, n) * wv**p
    st = np.sin(theta)
    rhs = -wts @ (st * np.asarray(K.theta_derivative(image), float) * rho)
    if form == "pullback":
        lhs = wts @ (st * np.sin(image) * rho)
    elif form == "printed":
        lhs = wts @ (st * st)
    else:
        raise DomainError("form must be 'pullback' or 'printed'")
    return float(rhs / lhs)


def lambda_scan(K, s_values, mu: float, k: int, config: ReducedConfig | None = None) -> list:
    """[(s, Λ_{n+1}(s e_{n+1}, μ))] along the axis, warm-started left to right."""
    out = []
    w0, lam0 = None, 0.0
    for s in s_values:
        sol = solve_reduced(K, float(s), mu, k, config=config, w0=w0, lam0=lam0)
        w0, lam0 = sol.w.values, sol.Lambda[-1]
        out.append((float(s), float(sol.Lambda[-1])))
    return out


# ---------------------------------------------------------------------------
# homotopy


@dataclass
class HomotopyConfig:
    k: int = 2
    N: int = 256
    tol: float = 1e-8
    mu0: float = 0.05
    dmu0: float = 0.05
    dmu_min: float = 1e-4
    dmu_max: float = 0.1
    max_newton: int = 25
    s_scan: tuple = tuple(np.round(np.linspace(-0.8, 0.8, 17), 10))
    polish: float = 1e-3


@dataclass
class HomotopyState:
    mu: float
    v: SphereAxisymField
    residual_norm: float
    cone_margin: float
    steps: int

    def summary(self):
        return {"mu": self.mu, "residual": self.residual_norm, "cone_margin": self.cone_margin, "newton_steps": self.steps}


@dataclass
class HomotopyResult:
    v: SphereAxisymField
    states: list
    start_xi: float
    rejected: int = 0

    @property
    def final(self) -> HomotopyState:
        return self.states[-1]

    def report(self, K) -> dict:
        kw = kazdan_warner_sphere(self.v, K)
        return {
            "start_xi": self.start_xi,
            "mu_trace": [s.summary() for s in self.states],
            "rejected_steps": self.rejected,
            "final_residual": self.final.residual_norm,
            "min_cone_margin": min(s.cone_margin for s in self.states),
            "kazdan_warner_norm": float(np.linalg.norm(kw)),
        }


def newton_solve(v0, K, mu, k, tol, max_iter, polish=1e-3):
    """Damped Newton for F_μ[v] = 0 with Armijo backtracking and a cone guard.

    Iterates until the sup-norm residual is below ``tol * polish`` or stops
    decreasing once below ``tol``. Returns (v, residual, margin, iterations).
    """
    n = v0.n
    theta = v0.theta
    target = K_mu_values(K, mu, theta, n, k)
    v = v0.values.copy()
    sig, margin, J = sigma_axisym(v, n, k, with_jacobian=True)
    F = sig - target
    norm = float(np.max(np.abs(F)))
    trace = [norm]
    for it in range(max_iter):
        if norm <= tol * polish:
            break
        step = np.linalg.solve(J, -F)
        alpha = 1.0
        accepted = False
        while alpha >= 1e-6:
            trial = v + alpha * step
            if np.all(trial > 0):
                try:
                    s2, m2, J2 = sigma_axisym(trial, n, k, with_jacobian=True)
                    F2 = s2 - target
                    n2 = float(np.max(np.abs(F2)))
                    if n2 <= (1.0 - 1e-4 * alpha) * norm:
                        accepted = True
                        break
                except ConeExit:
                    pass
            alpha *= 0.5
        if not accepted:
            if norm <= tol:
                break
            raise NoConvergence("line search failed", mu=mu, trace=trace)
        v, F, J, margin, norm = trial, F2, J2, m2, n2
        trace.append(norm)
    if norm > tol:
        raise NoConvergence("Newton iteration did not reach the tolerance", mu=mu, trace=trace)
    return SphereAxisymField(v, n), norm, float(np.min(margin)), len(trace) - 1


def find_start(K, k: int, config: HomotopyConfig) -> tuple:
    """Zero of s ↦ Λ_{n+1}(s e_{n+1}, μ0) closest to 0 and the field π(w, ξ) there."""
    cfg = ReducedConfig(N=config.N, tol=min(1e-9, config.tol), mu_max=max(0.2, config.mu0))
    scan = lambda_scan(K, config.s_scan, config.mu0, k, cfg)
    brackets = [(a, b) for (a, la), (b, lb) in zip(scan[:-1], scan[1:]) if la == 0 or la * lb < 0]
    exact = [s for s, lam in scan if lam == 0.0]
    if not brackets and not exact:
        raise NoConvergence("Λ has no zero along the axis at the starting μ", scan=scan)

    def lam_of(s):
        return solve_reduced(K, s, config.mu0, k, config=cfg).Lambda[-1]

    roots = exact + [brentq(lam_of, a, b, xtol=1e-12) for a, b in brackets if lam_of(a) * lam_of(b) < 0]
    s_star = min(roots, key=lambda r: (abs(r), r))
    sol = solve_reduced(K, s_star, config.mu0, k, config=cfg)
    return s_star, pi_parametrize(sol.w, s_star), scan


def solve_homotopy(K, config: HomotopyConfig | None = None) -> HomotopyResult:
    """Continue F_μ[v] = 0 from μ0 to μ = 1 along K_μ."""
    cfg = config or HomotopyConfig()
    n, k = K.n, cfg.k
    _check_nk(n, k)
    if not 2 * k >= n:
        raise DomainError("the solver needs n/2 <= k <= n", n=n, k=k)
    theta = theta_grid(cfg.N)
    kv = np.asarray(K.theta_values(theta), float)
    if np.any(kv <= 0):
        raise DomainError("K must be positive")
    c = round_curvature(n, k)
    if np.max(np.abs(kv - c)) <= 1e-14 * c:
        v = SphereAxisymField.constant(1.0, n, cfg.N)
        F = residual(v, K, 1.0, k)
        st = HomotopyState(1.0, v, float(np.max(np.abs(F))), float(np.min(cone_margin(np.full((1, n), 0.5), k))), 0)
        return HomotopyResult(v, [st], 0.0)

    s_star, v0, _ = find_start(K, k, cfg)
    v, res, margin, its = newton_solve(v0, K, cfg.mu0, k, cfg.tol, cfg.max_newton, cfg.polish)
    states = [HomotopyState(cfg.mu0, v, res, margin, its)]
    prev = None
    mu, dmu = cfg.mu0, cfg.dmu0
    rejected = 0
    while mu < 1.0:
        dmu = min(dmu, 1.0 - mu)
        new_mu = 1.0 if 1.0 - mu - dmu < 1e-12 else mu + dmu
        guess = v.values
        if prev is not None:
            guess = v.values + (new_mu - mu) / (mu - prev[0]) * (v.values - prev[1])
            if np.any(guess <= 0):
                guess = v.values
        try:
            v_new, res, margin, its = newton_solve(SphereAxisymField(guess, n), K, new_mu, k, cfg.tol,
                                                   cfg.max_newton, cfg.polish)
        except (NoConvergence, ConeExit):
            rejected += 1
            dmu *= 0.5
            if dmu < cfg.dmu_min:
                raise StepUnderflow("μ-step fell below the minimum", mu=mu, dmu=dmu)
            continue
        if margin <= 0:
            raise ConeExit("accepted state has non-positive cone margin", mu=new_mu)
        prev = (mu, v.values)
        mu, v = new_mu, v_new
        states.append(HomotopyState(mu, v, res, margin, its))
        if its <= 4:
            dmu = min(2.0 * dmu, cfg.dmu_max)
    return HomotopyResult(v, states, s_star, rejected)
