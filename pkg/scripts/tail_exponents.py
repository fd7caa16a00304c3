"""Tail exponents and conservation drift of the V_a profiles over a grid of (n, a)."""

import argparse
from math import log

import numpy as np

from sigmak import radial


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="4,6,8")
    ap.add_argument("--a", default="0,0.1,0.5,1,2")
    ap.add_argument("--tmax", type=float, default=20.0)
    ap.add_argument("--step", type=float, default=1e-3)
    args = ap.parse_args()
    print(f"{'n':>3} {'a':>8} {'gamma':>10} {'fit':>10} {'rel err':>9} {'drift':>9}")
    for n in (int(x) for x in args.n.split(",")):
        for a in [float(x) for x in args.a.split(",")] + [log(2) / n]:
            prof = radial.integrate_Va(a, n, args.tmax, args.step)
            g = radial.gamma_of_a(a, n)
            fit = radial.tail_exponent(prof)
            drift = np.max(np.abs(radial.conserved_quantity(prof) - radial.h_of_a(a, n)))
            print(f"{n:>3} {a:>8.4f} {g:>10.6f} {fit:>10.6f} {abs(fit - g) / g:>9.2e} {drift:>9.1e}")


if __name__ == "__main__":
    main()
