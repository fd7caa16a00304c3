"""Homotopy solve of the axisymmetric equation and grid convergence of the Kazdan-Warner defect."""

import argparse

from sigmak import degree, reduction
from sigmak.kfunc import SphereFunction


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", default="3/2 + 0.1*(2*x5**2 - 1) + 0.05*x5")
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--N", default="64,128,256,512")
    args = ap.parse_args()
    K = SphereFunction(args.K, args.n)
    dm = degree.deg_crit_minus(degree.critical_points(K))
    print(f"K = {K.text}: deg Crit_- = {dm}, criterion {degree.existence_verdict(dm, args.n)['criterion_holds']}")
    print(f"{'N':>5} {'steps':>6} {'residual':>10} {'KW':>10} {'margin':>8}")
    for N in (int(x) for x in args.N.split(",")):
        res = reduction.solve_homotopy(K, reduction.HomotopyConfig(k=args.k, N=N))
        rep = res.report(K)
        print(f"{N:>5} {len(rep['mu_trace']):>6} {rep['final_residual']:>10.1e} "
              f"{rep['kazdan_warner_norm']:>10.1e} {rep['min_cone_margin']:>8.3f}")


if __name__ == "__main__":
    main()
