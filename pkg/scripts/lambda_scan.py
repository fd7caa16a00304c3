"""Λ along the symmetry axis from the reduced problem, compared with the two forms of the KW system."""

import argparse

import numpy as np

from sigmak import reduction
from sigmak.kfunc import SphereFunction


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", default="3/2 + 0.1*(2*x5**2 - 1) + 0.05*x5")
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--mu", type=float, default=0.05)
    ap.add_argument("--N", type=int, default=128)
    args = ap.parse_args()
    K = SphereFunction(args.K, args.n)
    cfg = reduction.ReducedConfig(N=args.N)
    print(f"{'s':>6} {'Lambda/mu':>12} {'pullback':>12} {'printed':>12} {'mu->0':>12}")
    for s in np.round(np.linspace(-0.8, 0.8, 9), 6):
        sol = reduction.solve_reduced(K, s, args.mu, args.k, config=cfg)
        print(f"{s:>6.2f} {sol.Lambda[-1] / args.mu:>12.6f} "
              f"{reduction.kw_linear_system(K, s, sol.w):>12.6f} "
              f"{reduction.kw_linear_system(K, s, sol.w, form='printed'):>12.6f} "
              f"{reduction.kw_linear_system(K, s, None, N=args.N):>12.6f}")


if __name__ == "__main__":
    main()
