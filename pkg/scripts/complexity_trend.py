"""min_k ||F(z^k)||^2 against the horizon T for the theory step schedule on tanh-l1."""

import argparse

import numpy as np

from normprr import benchmarks as B
from normprr.solvers import RunConfig, Schedule, run
from normprr.stationarity import default_lambda, theory_constants


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizons", type=int, nargs="+", default=[100, 400, 1600])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--data-seed", type=int, default=0)
    ap.add_argument("--regime", default="reshuffled", choices=("reshuffled", "worst-case"))
    ap.add_argument("--capped", action="store_true", help="use the default eta, which respects alpha_bar")
    args = ap.parse_args()

    bundle = B.make_tanh_classification(B.synthetic_classification(64, 10, rng=args.data_seed))
    obj = bundle.objective
    L = obj.problem.lipschitz
    lam = default_lambda(L, obj.regularizer.rho)
    consts = theory_constants(L, obj.regularizer.rho, lam)
    eta = None if args.capped else (2 * L * consts.C) ** (-1 / 3)
    means = []
    for T in args.horizons:
        sched = Schedule.theory(consts, obj.n, T, eta=eta, regime=args.regime)
        best = []
        for seed in range(args.seeds):
            tr = run(RunConfig("norm-prr", obj, lam, sched, T, seed=seed, record_error=False,
                               record_variance=False, record_merit=False))
            best.append(np.min(tr.series("fnor_norm", include_initial=True)[:-1] ** 2))
        means.append(float(np.mean(best)))
        print(f"T = {T:5d}  alpha {tr.records[0].step:.3e}  mean min ||F||^2 = {means[-1]:.4e}")
    if len(means) > 1:
        print(f"log-log slope {np.polyfit(np.log(args.horizons), np.log(means), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
