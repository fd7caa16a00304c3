"""Finite-difference σ_k of the Euclidean bubble against its constant value, as h shrinks."""

import argparse
from math import comb

import numpy as np

from sigmak import conformal, grid
from sigmak.symmetric import eigenvalues, elementary_symmetric


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--h", default="0.1,0.05,0.025,0.0125")
    args = ap.parse_args()
    n = args.n
    print(f"{'h':>8} " + " ".join(f"{'k=' + str(k):>10}" for k in range(1, n + 1)))
    for h in (float(x) for x in args.h.split(",")):
        u = grid.EuclideanField.centered(lambda y: conformal.bubble(y, None, 1.0, n), np.full(n, 0.2), h, 5)
        e = elementary_symmetric(eigenvalues(conformal.schouten_field(u)))
        errs = [np.max(np.abs(e[..., k] - comb(n, k) * 2.0**k)) / (comb(n, k) * 2.0**k) for k in range(1, n + 1)]
        print(f"{h:>8.4f} " + " ".join(f"{x:>10.2e}" for x in errs))


if __name__ == "__main__":
    main()
