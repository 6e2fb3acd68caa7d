"""Chain residuals in double versus extended precision as the lattice grows.

For each n the worst involutivity and generalized Lenard-Magri residuals
over a few seeded points are printed at both precisions.
"""

import argparse

import numpy as np

from pqntoda import toda
from pqntoda.cli import make_rng
from pqntoda.pqn import ChainData
from pqntoda.precision import run


def worst(model, x, precision):
    K = model.default_kmax()
    chain = ChainData(model.deformed(+1), K, model.Omega, +1)
    Nm = model.deformed(-1).N

    def body(c):
        cv = chain.at(c)
        lm = max(float(np.max(np.abs(cv.lm_residual(Nm.at(c), k)))) for k in range(1, K))
        return float(np.max(cv.involutivity())), lm

    return run(body, x, precision)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=sorted(toda.MODELS), default="a1")
    ap.add_argument("--nmax", type=int, default=6)
    ap.add_argument("--points", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'n':>3} {'inv double':>11} {'inv ext':>11} {'lm double':>11} {'lm ext':>11}")
    for n in range(2, args.nmax + 1):
        m = toda.build_model(args.family, n)
        pts = make_rng(args.seed).uniform(-1, 1, size=(args.points, 2 * n))
        lo = np.max([worst(m, x, "double") for x in pts], axis=0)
        hi = np.max([worst(m, x, "extended") for x in pts], axis=0)
        print(f"{n:3d} {lo[0]:11.2e} {hi[0]:11.2e} {lo[1]:11.2e} {hi[1]:11.2e}")


if __name__ == "__main__":
    main()
