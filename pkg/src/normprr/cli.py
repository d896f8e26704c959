"""Command-line entry point: run, compare, check, gen-data.

Exit codes: 0 success, 1 config error, 2 runtime failure, 3 diagnostics violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import benchmarks as B
from .harness import DIAGNOSTICS, ConfigError, diagnostics_violated, execute, load_config

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_DIAGNOSTICS = 0, 1, 2, 3

GEN_KINDS = ("classification",)
_GEN_KEYS = {"n": int, "d": int, "seed": int, "dist": str, "flip": float}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="normprr", description="Run shuffled proximal gradient experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "run the configured grid and write runs.csv and summary.txt"),
        ("compare", "run the grid, aggregate curves and plot"),
        ("check", "run the grid with every diagnostic enabled"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--output", default=None, help="override the output directory")
        p.add_argument("--seed-offset", type=int, default=0)
        p.add_argument("--no-plots", action="store_true")
    g = sub.add_parser("gen-data", help="write a synthetic dataset in LIBSVM format")
    g.add_argument("kind", choices=GEN_KINDS)
    g.add_argument("params", help="comma-separated key=value, e.g. n=64,d=10,seed=0")
    g.add_argument("out")
    return ap


def _gen_params(text: str) -> dict:
    out = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        if "=" not in item:
            raise ConfigError(item, "expected key=value")
        k, v = (s.strip() for s in item.split("=", 1))
        if k not in _GEN_KEYS:
            raise ConfigError(k, "unknown key")
        if k in out:
            raise ConfigError(k, "duplicate key")
        try:
            out[k] = _GEN_KEYS[k](v)
        except ValueError:
            raise ConfigError(k, f"expected {_GEN_KEYS[k].__name__}, got {v!r}") from None
    return out


def gen_data(kind: str, params: str, out) -> Path:
    p = _gen_params(params)
    n, d, seed, dist = p.get("n", 64), p.get("d", 10), p.get("seed", 0), p.get("dist", "gaussian")
    data = B.synthetic_classification(n=n, d=d, rng=seed, flip=p.get("flip", 0.1), dist=dist)
    out = Path(out)
    B.save_libsvm(data, out, header={"n": n, "d": d, "seed": seed, "dist": dist})
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "gen-data":
            path = gen_data(args.kind, args.params, args.out)
            print(f"wrote {path}")
            return EXIT_OK
        cfg = load_config(args.config)
        if args.command == "check" and not cfg.diagnostics:
            cfg = replace(cfg, diagnostics=DIAGNOSTICS)
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be positive")
        res = execute(
            cfg, jobs=args.jobs, seed_offset=args.seed_offset, plots=False if args.no_plots else None,
            output_dir=args.output, aggregate_curves=args.command == "compare",
        )
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - map any crash to the runtime exit code
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    s = res.summary
    print(f"wrote {res.csv_path} and {res.summary_path}")
    if res.curves_path:
        print(f"wrote {res.curves_path}")
    for p in res.plots:
        print(f"wrote {p}")
    for (a, sid), g in s.groups.items():
        print(f"{a:10s} {sid:12s} success {g['completed']}/{g['runs']}")
    if s.counts.get("error"):
        print(f"{s.counts['error']} runs raised errors; see summary.txt", file=sys.stderr)
        return EXIT_RUNTIME
    if args.command == "check":
        if diagnostics_violated(s):
            print("diagnostics: violations found; see summary.txt", file=sys.stderr)
            return EXIT_DIAGNOSTICS
        print("diagnostics: no violations")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
