#!/usr/bin/env python
"""Plot-free study of how fast a single randomized feasibility pass converges.

For a fixed halfspace-constrained testbed, runs passes of increasing length N
and prints the mean distance to the feasible set together with a linear fit of
log(distance) against N. A clearly negative slope with high R^2 is the
expected geometric decay.
"""
import argparse

from svifeas.verify import check_feasibility_decay, _halfspace_testbed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--max-n", type=int, default=60)
    args = ap.parse_args()

    wp, _ = _halfspace_testbed()
    n_values = list(range(5, args.max_n + 1, 5))
    fit = check_feasibility_decay(wp, args.beta, n_values,
                                  seeds=args.seeds)
    for n, d in zip(n_values, fit.mean_dists):
        print(f"N = {n:4d}   mean dist = {d:.6e}")
    print(f"fit: slope = {fit.slope:.4f}, R^2 = {fit.r_squared:.4f}")


if __name__ == "__main__":
    main()
