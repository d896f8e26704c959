"""Constant-step norm-PRR vs e-PRR on the simplex-constrained interpolation problem."""

import argparse
import math

import numpy as np

from normprr import benchmarks as B
from normprr.diagnostics import fit_geometric
from normprr.solvers import RunConfig, Schedule, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--d", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=3000)
    ap.add_argument("--step", type=float, default=4.0, help="n * alpha in units of 1/L")
    ap.add_argument("--dist", default="uniform", choices=("uniform", "gaussian", "student-t"))
    ap.add_argument("--every", type=int, default=250)
    args = ap.parse_args()

    bundle = B.make_simplex_interpolation(n=args.n, d=args.d, dist=args.dist, rng=0)
    L = bundle.L
    sched = Schedule("constant", alpha=args.step / L, n=args.n)
    curves = {}
    for alg in ("norm-prr", "e-prr"):
        tr = run(RunConfig(alg, bundle.objective, 1.0 / L, sched, args.epochs, seed=0, start=bundle.start,
                           record_error=False, record_variance=False, record_merit=False))
        curves[alg] = tr.series("psi") - bundle.known_solution.psi

    print(f"{'epoch':>6s} {'norm-prr':>12s} {'e-prr':>12s}")
    for k in range(args.every, args.epochs + 1, args.every):
        print(f"{k:6d} {curves['norm-prr'][k - 1]:12.3e} {curves['e-prr'][k - 1]:12.3e}")
    rel = curves["norm-prr"]
    pos = rel[rel > 0]
    end = int(np.flatnonzero(rel <= 100 * pos.min())[0]) + 1 if pos.size else len(rel)
    fit = fit_geometric(zip(np.arange(1, end + 1), rel[:end]))
    print(f"norm-prr contraction {math.exp(fit.slope):.4f}/epoch over epochs 1..{end} (|r| = {abs(fit.r):.4f})")


if __name__ == "__main__":
    main()
