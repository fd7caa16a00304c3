"""Command-line front end: ``sigmak <subcommand> [options]``.

Every subcommand prints a versioned JSON report (or writes it to
``--output``) and accepts ``--selftest``. Exit codes: 0 success,
2 precondition violation (cone, non-degeneracy, bad input), 3 convergence
failure, 1 failed self-test.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from math import log, pi

import numpy as np
import sympy as sp

from . import degree as deg
from . import identities as ident
from . import radial as rad
from . import reduction as red
from .config import RunConfig, dumps_report
from .errors import DomainError, PreconditionError, SigmakError
from .kfunc import parse_K
from .sphere import SphereAxisymField


# ---------------------------------------------------------------------------
# subcommand bodies


def _sample_points(n, seed, count=2):
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.3, 0.3, size=(count, n))


def run_identities(cfg: RunConfig, args) -> dict:
    n = cfg.n or 4
    k = cfg.k or 2
    psi = ident.random_polynomial(n, 4, cfg.seed) if args.psi == "poly" else ident.bubble_log_psi(n)
    pts = _sample_points(n, cfg.seed)
    if args.check == "divergence":
        ell = args.ell if args.ell is not None else k
        rep = ident.check_divergence(psi, ell, pts, cfg.h, cfg.refine)
    elif args.check == "weighted":
        ell = args.ell if args.ell is not None else k - 1
        rep = ident.check_weighted_divergence(psi, ell, args.p, args.q, pts, cfg.h, cfg.refine)
    else:
        t = args.t if args.t is not None else n - k + 1.0
        s = args.s if args.s is not None else k + 1.0 + 0.05
        rep = ident.check_summed_identity(psi, k, args.q, t, s, pts, cfg.h, cfg.refine)
    out = rep.to_dict()
    out["order_at_least_3_5"] = bool(rep.order is not None and rep.order >= 3.5)
    return out


def run_radial(cfg: RunConfig, args) -> dict:
    n = cfg.n or 4
    prof = rad.integrate_Va(args.a, n, args.tmax, args.step)
    E = rad.conserved_quantity(prof)
    h = rad.h_of_a(args.a, n)
    g_fit = rad.tail_exponent(prof)
    g = rad.gamma_of_a(args.a, n)
    if cfg.field_output:
        H = rad.H_quantity(prof, n // 2)
        with open(cfg.field_output, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "xi", "xi_prime", "E", "H"])
            for row in zip(prof.t, prof.xi, prof.xip, E, H):
                w.writerow([f"{x:.15g}" for x in row])
    return {
        "a": args.a,
        "n": n,
        "h_a": h,
        "gamma_exact": g,
        "gamma_fit": g_fit,
        "gamma_rel_error": abs(g_fit - g) / g,
        "conservation_drift": float(np.max(np.abs(E - h))),
        "t_max": args.tmax,
    }


def run_degree(cfg: RunConfig, args) -> dict:
    K = parse_K(cfg.K, cfg.n)
    n = K.n
    records = deg.critical_points(K, seeds=args.seeds, seed=cfg.seed, workers=cfg.workers) \
        if not getattr(K, "axis_only", False) or getattr(K, "degree", 2) <= 1 \
        else deg.critical_points(K)
    dm = deg.deg_crit_minus(records)
    out = {
        "n": n,
        "K": K.text,
        "records": [r.to_dict() for r in records],
        "deg_crit_minus": dm,
        "euler_sum": deg.morse_euler_sum(records),
        "euler_expected": 1 + (-1) ** n,
        "existence": deg.existence_verdict(dm, n),
    }
    if not args.no_G:
        s_values = tuple(float(x) for x in args.s_scan.split(","))
        g = deg.degree_of_G(K, s_values, seeds=args.g_seeds, seed=cfg.seed, workers=cfg.workers)
        out["deg_G"] = {str(s): r.degree for s, r in g["per_s"].items()}
        out["deg_G_consistent"] = g["consistent"]
        out["deg_G_zero_radii"] = g["zero_radii"]
        out["s0_estimate"] = g["s0_estimate"]
        out["expected_deg_G"] = -((-1) ** n) + dm
    return out


def run_reduce(cfg: RunConfig, args) -> dict:
    K = parse_K(cfg.K, cfg.n)
    k = cfg.k or 2
    rc = red.ReducedConfig(N=cfg.N, tol=min(cfg.tol, 1e-9))
    sol = red.solve_reduced(K, args.xi, args.mu, k, config=rc)
    out = sol.to_dict()
    out["Lambda_projection"] = red.lambda_from_projection(sol, K).tolist()
    out["kw_pullback_over_mu"] = red.kw_linear_system(K, args.xi, sol.w)
    out["kw_printed_over_mu"] = red.kw_linear_system(K, args.xi, sol.w, form="printed")
    out["kw_limit_over_mu"] = red.kw_linear_system(K, args.xi, None, N=cfg.N)
    return out


def run_solve(cfg: RunConfig, args) -> dict:
    K = parse_K(cfg.K, cfg.n)
    n = K.n
    k = cfg.k or 2
    out = {"n": n, "k": k, "N": cfg.N, "tol": cfg.tol}
    if not args.skip_criterion:
        dm = deg.deg_crit_minus(deg.critical_points(K))
        verdict = deg.existence_verdict(dm, n)
        out["existence"] = verdict
        if not verdict["criterion_holds"]:
            raise PreconditionError("degree criterion fails: deg = (-1)^n", deg_crit_minus=dm)
    hc = red.HomotopyConfig(k=k, N=cfg.N, tol=cfg.tol)
    res = red.solve_homotopy(K, hc)
    out.update(res.report(K))
    if cfg.field_output:
        with open(cfg.field_output, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "v"])
            for row in zip(res.v.theta, res.v.values):
                w.writerow([f"{x:.15g}" for x in row])
    return out


def _poly_in_z(expr: str, n: int):
    syms = sp.symbols(" ".join(f"z{i}" for i in range(1, n + 1)), real=True)
    syms = (syms,) if n == 1 else syms
    f = sp.lambdify([syms], sp.sympify(expr, locals={str(s): s for s in syms}), "numpy")

    def q(z):
        z = np.asarray(z, float)
        return np.broadcast_to(np.asarray(f([z[..., i] for i in range(n)]), float), z.shape[:-1])

    return q


def run_moments(cfg: RunConfig, args) -> dict:
    n = cfg.n or 4
    q = _poly_in_z(args.q, n)
    lams = [float(x) for x in args.lam.split(",")]
    vals = {str(l): ident.moment_limit(q, args.d, n, l, args.r0) for l in lams}
    out = {"n": n, "q": args.q, "d": args.d, "r0": args.r0, "values": vals}
    if args.q.strip() == "1":
        out["full_space_limit"] = ident.bubble_mass(n)
    return out


def run_energy(cfg: RunConfig, args) -> dict:
    n = cfg.n or 4
    lams = [float(x) for x in args.lam.split(",")]
    c = tuple([0.0] * n)
    dom = ident.Ball(c, args.radius) if args.domain == "ball" else ident.Annulus(c, args.r1, args.r2)
    rows = []
    for l in lams:
        r = ident.delta_energy_profile(lambda y: ident.bubble(y, None, l, n), dom)
        rows.append({"lam": l, **r})
    return {"n": n, "domain": args.domain, "profile": rows}


# ---------------------------------------------------------------------------
# self-tests: each runs the module's trivial examples


def _selftest_identities():
    n = 3
    psi = ident.random_polynomial(n, 4, 0)
    pts = _sample_points(n, 0, 1)
    r0 = ident.check_divergence(psi, 0, pts, 0.1, 1).residual
    a = ident.check_weighted_divergence(psi, 1, 0.0, 0.0, pts, 0.1, 1).residual
    b = ident.check_divergence(psi, 1, pts, 0.1, 1).residual
    c1 = ident.check_summed_identity(psi, 1, 0.3, 2.0, 2.5, pts, 0.1, 1).residual
    c2 = ident.check_weighted_divergence(psi, 0, 0.0, 0.3, pts, 0.1, 1).residual
    return [
        ("T_0 = I divergence identity", r0 < 1e-10),
        ("p = q = 0 weighted identity is small", a < 1e-3 and b < 1e-3),
        ("k = 1 summed identity equals weighted ell = 0", abs(c1 - c2) < 1e-3),
    ]


def _selftest_radial():
    p = rad.integrate_Va(0.0, 4, 16.0, 2e-3)
    E = rad.conserved_quantity(p)
    return [
        ("h(0) = 0", rad.h_of_a(0.0, 4) == 0.0),
        ("gamma(0) = n - 2", abs(rad.gamma_of_a(0.0, 4) - 2.0) < 1e-14),
        ("V_0 conserved quantity stays at 0", float(np.max(np.abs(E))) < 1e-9),
    ]


def _selftest_degree():
    from .kfunc import SphereFunction

    K = SphereFunction("2 + x4", 3)
    recs = deg.critical_points(K, seeds=64)
    ident_ok = deg.brouwer_degree(lambda x: x, 3, 0.5, seeds=8).degree == 1
    anti_ok = deg.brouwer_degree(lambda x: -x, 5, 0.5, seeds=8).degree == -1
    G0 = deg.G_of_xi(SphereFunction("2 + 0*x4", 3), np.array([0.0, 0.0, 0.3, 0.0]))
    try:
        deg.critical_points(SphereFunction("2 + 0*x4", 3), seeds=16)
        const_ok = False
    except SigmakError:
        const_ok = True
    return [
        ("K = 2 + x_{n+1}: deg over Crit_- is (-1)^n", deg.deg_crit_minus(recs) == -1),
        ("empty Crit_- has degree 0", deg.deg_crit_minus([r for r in recs if r.cls == "plus"]) == 0),
        ("identity map has degree 1", ident_ok),
        ("antipodal map in R^5 has degree -1", anti_ok),
        ("constant K gives G = 0", float(np.max(np.abs(G0))) < 1e-12),
        ("constant K is rejected as degenerate", const_ok),
    ]


def _selftest_reduce():
    from .kfunc import SphereFunction

    n, k = 4, 2
    K = SphereFunction(f"{red.round_curvature(n, k)} + 0*x5", n)
    one = SphereAxisymField.constant(1.0, n, 64)
    sol = red.solve_reduced(K, 0.3, 0.1, k, config=red.ReducedConfig(N=64))
    f = np.cos(one.theta)
    return [
        ("v = 1, mu = 0 residual vanishes", float(np.max(np.abs(red.residual(one, K, 0.0, k)))) < 1e-13),
        ("constant K: w = 1 and Lambda = 0", float(np.max(np.abs(sol.w.values - 1))) < 1e-12
         and abs(sol.Lambda[-1]) < 1e-12),
        ("Pi removes x_{n+1}", float(np.max(np.abs(red.project_Pi(f, n)))) < 1e-12),
        ("Pi keeps constants", float(np.max(np.abs(red.project_Pi(np.ones(65), n) - 1))) < 1e-12),
        ("pi(w, 0) = w", red.pi_parametrize(one, 0.0) is one),
    ]


def _selftest_solve():
    from .kfunc import SphereFunction

    n, k = 4, 2
    K = SphereFunction(f"{red.round_curvature(n, k)} + 0*x5", n)
    res = red.solve_homotopy(K, red.HomotopyConfig(k=k, N=64))
    return [("round K is solved by v = 1 in one step",
             len(res.states) == 1 and float(np.max(np.abs(res.v.values - 1))) == 0.0)]


def _selftest_moments():
    n = 4
    one = ident.moment_limit(lambda z: np.ones(z.shape[:-1]), 0, n, 50.0)
    return [("q = 1, n = 4 gives pi^2/6 at radius 50", abs(one - pi**2 / 6) < 1e-6)]


def _selftest_energy():
    r1 = ident.delta_energy_profile(lambda y: ident.bubble(y, None, 1.0, 3), ident.Ball((0.0,) * 3, 1.0))
    return [("energies are positive and finite", r1["energy"] > 0 and np.isfinite(r1["T"]))]


SELFTESTS = {
    "identities": _selftest_identities,
    "radial": _selftest_radial,
    "degree": _selftest_degree,
    "reduce": _selftest_reduce,
    "solve": _selftest_solve,
    "moments": _selftest_moments,
    "energy": _selftest_energy,
}

RUNNERS = {
    "identities": run_identities,
    "radial": run_radial,
    "degree": run_degree,
    "reduce": run_reduce,
    "solve": run_solve,
    "moments": run_moments,
    "energy": run_energy,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sigmak", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp_):
        sp_.add_argument("--config", help="JSON run configuration (see schemas/run_config.schema.json)")
        sp_.add_argument("--n", type=int)
        sp_.add_argument("--k", type=int)
        sp_.add_argument("--seed", type=int)
        sp_.add_argument("--workers", type=int, help="worker threads (default: SIGMAK_THREADS or 1)")
        sp_.add_argument("--output", help="write the JSON report here instead of stdout")
        sp_.add_argument("--selftest", action="store_true", help="run the trivial examples and exit")
        return sp_

    s = common(sub.add_parser("identities", help="FD refinement study of a divergence identity"))
    s.add_argument("--check", choices=["divergence", "weighted", "summed"], default="divergence")
    s.add_argument("--psi", choices=["poly", "bubble"], default="poly")
    s.add_argument("--ell", type=int)
    s.add_argument("--p", type=float, default=0.0)
    s.add_argument("--q", type=float, default=0.0)
    s.add_argument("--t", type=float)
    s.add_argument("--s", type=float)
    s.add_argument("--h", type=float)
    s.add_argument("--refine", type=int)

    s = common(sub.add_parser("radial", help="integrate the V_a profile"))
    s.add_argument("--a", type=float, default=0.0)
    s.add_argument("--tmax", type=float, default=20.0)
    s.add_argument("--step", type=float, default=1e-3)
    s.add_argument("--csv", dest="field_output", help="write t, xi, xi', E, H here")

    s = common(sub.add_parser("degree", help="critical points, deg over Crit_- and deg(G)"))
    s.add_argument("--K", help="polynomial in x1..x{n+1}, or a .json/.csv file")
    s.add_argument("--seeds", type=int, default=512)
    s.add_argument("--g-seeds", type=int, default=64)
    s.add_argument("--s-scan", default="0.5,0.7,0.9")
    s.add_argument("--no-G", action="store_true", help="skip the Brouwer degree of G")

    s = common(sub.add_parser("reduce", help="solve the reduced problem at (xi, mu)"))
    s.add_argument("--K")
    s.add_argument("--xi", type=float, default=0.0, help="position along the symmetry axis")
    s.add_argument("--mu", type=float, default=0.05)
    s.add_argument("--N", type=int)
    s.add_argument("--tol", type=float)

    s = common(sub.add_parser("solve", help="homotopy solve of the axisymmetric equation"))
    s.add_argument("--K")
    s.add_argument("--N", type=int)
    s.add_argument("--tol", type=float)
    s.add_argument("--field-output", help="CSV of (theta, v)")
    s.add_argument("--skip-criterion", action="store_true")

    s = common(sub.add_parser("moments", help="bubble moment limits"))
    s.add_argument("--q", default="1", help="homogeneous polynomial in z1..zn")
    s.add_argument("--d", type=float, default=0.0, help="homogeneity degree of q")
    s.add_argument("--lam", default="50")
    s.add_argument("--r0", type=float, default=1.0)

    s = common(sub.add_parser("energy", help="delta-energy profile of bubbles on a ball or annulus"))
    s.add_argument("--lam", default="1,4,16")
    s.add_argument("--domain", choices=["ball", "annulus"], default="ball")
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--r1", type=float, default=0.5)
    s.add_argument("--r2", type=float, default=1.0)
    return p


_CFG_KEYS = ("n", "k", "seed", "workers", "N", "tol", "h", "refine", "K", "output", "field_output")


def make_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config, args.command) if args.config else RunConfig(command=args.command)
    for key in _CFG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if cfg.workers == 1 and "SIGMAK_THREADS" in os.environ and args.workers is None:
        cfg.workers = deg.worker_count()
    if args.command in ("degree", "reduce", "solve") and not cfg.K and not args.selftest:
        raise DomainError("--K is required")
    return cfg.validate()


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = None
    try:
        cfg = make_config(args)
        os.environ["SIGMAK_THREADS"] = str(cfg.workers)
        if args.selftest:
            checks = SELFTESTS[args.command]()
            ok = all(passed for _, passed in checks)
            result = {"selftest": [{"name": name, "pass": bool(passed)} for name, passed in checks], "all_pass": ok}
            _emit(dumps_report(args.command, cfg, result, "ok" if ok else "selftest_failed"), cfg.output)
            return 0 if ok else 1
        result = RUNNERS[args.command](cfg, args)
        _emit(dumps_report(args.command, cfg, result), cfg.output)
        return 0
    except SigmakError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "details": exc.details}
        _emit(dumps_report(args.command, cfg, err, "error"), cfg.output if cfg else None)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
