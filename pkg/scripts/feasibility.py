"""Toy 1-D feasibility experiment: share of runs that stay in the domain of log."""

import argparse

from normprr import benchmarks as B
from normprr.solvers import RunConfig, Schedule, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--alpha", type=float, default=1.0, help="alpha_k = alpha / k")
    args = ap.parse_args()

    bundle = B.make_toy_1d()
    sched = Schedule("polynomial", alpha=args.alpha, gamma=1.0, n=bundle.objective.n)
    for alg in ("norm-prr", "e-prr", "psgd"):
        statuses, finals = [], []
        for seed in range(args.seeds):
            tr = run(RunConfig(alg, bundle.objective, bundle.lam, sched, args.epochs, seed=seed,
                               start=bundle.start, domain_guard=bundle.domain_guard))
            statuses.append(tr.status)
            if tr.status == "completed":
                finals.append(tr.records[-1].nat_res)
        ok = statuses.count("completed")
        tail = f", median final residual {sorted(finals)[len(finals) // 2]:.3e}" if finals else ""
        first = [s for s in statuses if s != "completed"]
        print(f"{alg:9s} completed {ok}/{args.seeds}{tail}" + (f" ({first[0]} otherwise)" if first else ""))


if __name__ == "__main__":
    main()
