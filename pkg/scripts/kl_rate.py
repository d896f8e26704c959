"""Iterate and objective decay rates of norm-PRR with alpha_k = alpha/(beta + k) on l1 least squares."""

import argparse

import numpy as np

from normprr import benchmarks as B
from normprr.diagnostics import fit_rate
from normprr.solvers import RunConfig, Schedule, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--epochs", type=int, default=5000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--n-alpha", type=float, default=20.0, help="n * alpha")
    ap.add_argument("--beta", type=float, default=40.0)
    args = ap.parse_args()

    bundle = B.make_quadratic_l1(n=32, d=8, condition_number=10.0, rng=0)
    obj, n = bundle.objective, bundle.objective.n
    sched = Schedule("polynomial", alpha=args.n_alpha / n, beta=args.beta, gamma=1.0, n=n)
    w_star, psi_star = bundle.known_solution.w, bundle.known_solution.psi
    for seed in range(args.seeds):
        tr = run(RunConfig("norm-prr", obj, bundle.lam, sched, args.epochs, seed=seed, record_error=False,
                           record_variance=False, record_merit=False, record_iterates=True))
        W = np.array(tr.iterates[1:])
        k = np.arange(1, len(W) + 1)
        sw = fit_rate(zip(k, np.linalg.norm(W - w_star, axis=1)))
        sp = fit_rate(zip(k, np.abs(tr.series("psi") - psi_star)))
        print(f"seed {seed}: slope ||w - w*|| {sw:.3f}, |psi - psi*| {sp:.3f}")


if __name__ == "__main__":
    main()
