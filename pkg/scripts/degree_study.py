"""Degree of G against the critical-point count for random Morse K.

K is a random diagonal quadratic form plus a linear term on S^n. The script
prints deg(∇K, Crit_-), the degree of G on each ball B_s and the radii of
the zeros of G, which locate the smallest admissible s.
"""

import argparse

import numpy as np

from sigmak import degree
from sigmak.kfunc import SphereFunction


def random_K(n, rng):
    a = rng.uniform(-1, 1, n + 1)
    b = rng.uniform(-0.3, 0.3, n + 1)
    terms = [f"{a[i]:+.4f}*x{i + 1}**2 {b[i]:+.4f}*x{i + 1}" for i in range(n + 1)]
    return SphereFunction("3 " + " ".join(terms), n)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--count", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--s", default="0.5,0.7,0.9,0.995")
    ap.add_argument("--seeds", type=int, default=48)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    s_values = tuple(float(x) for x in args.s.split(","))
    for _ in range(args.count):
        K = random_K(args.n, rng)
        rep = degree.degree_identity(K, s_values=s_values, seeds=args.seeds, seed=args.seed)
        print(K.text)
        print(f"  deg Crit_- = {rep['deg_crit_minus']}, expected deg G = {rep['expected']}, "
              f"deg G by s = {rep['deg_G']}")
        print(f"  zero radii = {np.round(rep['zero_radii'], 3).tolist()}, s0 estimate = {rep['s0_estimate']}")


if __name__ == "__main__":
    main()
