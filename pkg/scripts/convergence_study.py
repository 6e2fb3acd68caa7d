"""Leapfrog energy drift of the closed lattice under repeated dt halving.

Prints max |H_k(t) - H_k(0)| for each step size and the ratio between
successive rows (4 for a second-order scheme).
"""

import argparse

import numpy as np

from pqntoda.cli import SimulateConfig, cmd_simulate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--dt", type=float, default=4e-3, help="coarsest step")
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--k", type=int, default=2, help="which H_k to follow")
    args = ap.parse_args()

    prev, ratios = None, []
    print(f"{'dt':>10} {'drift H_' + str(args.k):>14} {'ratio':>8}")
    for level in range(args.levels):
        dt = args.dt / 2**level
        _, drifts = cmd_simulate(SimulateConfig("a1", args.n, T=args.T, dt=dt))
        d = {x.name: x.max_abs for x in drifts}[f"H_{args.k}"]
        ratio = ""
        if prev is not None:
            ratios.append(prev / d)
            ratio = f"{ratios[-1]:8.3f}"
        print(f"{dt:10.2e} {d:14.4e} {ratio:>8}")
        prev = d
    if ratios:
        print(f"order estimate: {np.log2(ratios[-1]):.2f}")


if __name__ == "__main__":
    main()
