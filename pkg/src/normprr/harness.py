"""Config-driven experiment grids: parse, execute, aggregate, plot.

Config format: INI-style sections of ``key = value`` lines, ``#`` comments,
lists comma-separated. Example::

    [problem]
    kind = toy1d

    [run]
    algorithms = norm-prr, e-prr, psgd
    epochs = 100
    seeds = 0..9            # inclusive range, or a list such as 0, 3, 7

    [schedule.inv]
    kind = poly             # poly | constant | theory
    alpha = 1
    gamma = 1

    [output]
    dir = results
"""

from __future__ import annotations

import configparser
import csv
import functools
import io
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import benchmarks as B
from . import diagnostics as D
from .problem import CompositeObjective
from .solvers import ALGORITHMS, DIVERGENCE_LIMIT, RunConfig, Schedule, run, theory_eta
from .stationarity import theory_constants

log = logging.getLogger(__name__)

COLUMNS = (
    "run_id", "algorithm", "schedule_id", "seed", "epoch", "step_size", "psi", "rel_err",
    "nat_res", "fnor_norm", "merit", "sigma2", "err_norm", "feasible", "elapsed_ms",
)
CURVE_METRICS = ("step_size", "psi", "rel_err", "nat_res", "fnor_norm", "merit", "sigma2", "err_norm")
REL_ERR_CONVENTIONS = ("pooled-min", "reference-psi-star")
DIAGNOSTICS = ("error_bound", "merit_descent", "complexity_bound", "variance_bound", "stationarity")
STATUSES = ("completed", "failed-infeasible", "diverged", "error")
LOG_FLOOR = 1e-16

_SCHEDULE_ALIASES = {"poly": "polynomial", "polynomial": "polynomial", "constant": "constant", "theory": "theory"}

# kind -> {key: type}
_PROBLEM_KEYS = {
    "toy1d": {},
    "simplex": {"n": int, "d": int, "support_size": int, "dist": str, "seed": int},
    "quadratic-l1": {"n": int, "d": int, "condition_number": float, "nu": float, "noise": float, "seed": int},
    "tanh": {"n": int, "d": int, "seed": int, "dist": str, "flip": float, "nu": float, "data": str},
}
_SCHEDULE_KEYS = {
    "kind": str, "alpha": float, "beta": float, "gamma": float, "eta": float,
    "regime": str, "horizon": int, "units": str,
}
_RUN_KEYS = {"algorithms", "epochs", "seeds", "lambda", "shuffle", "rel_err"}
_OUTPUT_KEYS = {"dir", "plots", "metrics"}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class ScheduleSpec:
    id: str
    kind: str
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 1.0
    eta: Optional[float] = None
    regime: str = "reshuffled"
    horizon: Optional[int] = None
    units: str = "absolute"  # or "inverse-L": alpha is multiplied by 1/L


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    problem_params: tuple
    algorithms: tuple
    schedules: tuple
    epochs: int
    seeds: tuple
    lam: Optional[float] = None
    shuffle: str = "independent"
    rel_err: str = "pooled-min"
    output_dir: str = "results"
    plots: bool = True
    plot_metrics: tuple = ("rel_err", "nat_res")
    diagnostics: tuple = ()

    @property
    def params(self) -> dict:
        return dict(self.problem_params)


# ---------------------------------------------------------------------------
# parsing


def _convert(key, raw, typ):
    try:
        return typ(raw)
    except ValueError:
        raise ConfigError(key, f"expected {typ.__name__}, got {raw!r}") from None


def _bool(key, raw) -> bool:
    v = raw.strip().lower()
    if v in ("yes", "true", "on", "1"):
        return True
    if v in ("no", "false", "off", "0"):
        return False
    raise ConfigError(key, f"expected yes/no, got {raw!r}")


def _list(raw) -> list:
    return [t.strip() for t in raw.split(",") if t.strip()]


def _seeds(raw) -> tuple:
    raw = raw.strip()
    if ".." in raw:
        lo, hi = raw.split("..", 1)
        lo, hi = _convert("run.seeds", lo, int), _convert("run.seeds", hi, int)
        if hi < lo:
            raise ConfigError("run.seeds", f"empty range {raw!r}")
        return tuple(range(lo, hi + 1))
    return tuple(_convert("run.seeds", s, int) for s in _list(raw))


def _unknown(section, keys, allowed):
    for k in keys:
        if k not in allowed:
            raise ConfigError(f"{section}.{k}", "unknown key")


def _required(sec, name, key):
    if key not in sec:
        raise ConfigError(f"{name}.{key}", "missing required key")
    return sec[key]


def parse_config(text: str, base_dir=None) -> ExperimentConfig:
    cp = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"{e.section}.{e.option}", "duplicate key") from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(e.section, "duplicate section") from None
    except configparser.Error as e:
        raise ConfigError("config", str(e).splitlines()[0]) from None

    for name in cp.sections():
        if name not in ("problem", "run", "output", "diagnostics") and not name.startswith("schedule."):
            raise ConfigError(name, "unknown section")

    if "problem" not in cp:
        raise ConfigError("problem", "missing section")
    psec = cp["problem"]
    kind = _required(psec, "problem", "kind").strip()
    if kind not in _PROBLEM_KEYS:
        raise ConfigError("problem.kind", f"unknown problem {kind!r}; choose from {', '.join(_PROBLEM_KEYS)}")
    schema = _PROBLEM_KEYS[kind]
    _unknown("problem", [k for k in psec if k != "kind"], schema)
    params = {}
    for k, typ in schema.items():
        if k in psec:
            params[k] = _convert(f"problem.{k}", psec[k].strip(), typ)
    if "data" in params and base_dir is not None and not os.path.isabs(params["data"]):
        params["data"] = str(Path(base_dir) / params["data"])

    if "run" not in cp:
        raise ConfigError("run", "missing section")
    rsec = cp["run"]
    _unknown("run", rsec, _RUN_KEYS)
    algorithms = tuple(_list(_required(rsec, "run", "algorithms")))
    if not algorithms:
        raise ConfigError("run.algorithms", "at least one algorithm required")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigError("run.algorithms", f"unknown algorithm {a!r}")
    epochs = _convert("run.epochs", _required(rsec, "run", "epochs").strip(), int)
    if epochs < 1:
        raise ConfigError("run.epochs", "must be positive")
    seeds = _seeds(_required(rsec, "run", "seeds"))
    if not seeds:
        raise ConfigError("run.seeds", "at least one seed required")
    lam = None
    if "lambda" in rsec:
        lam = _convert("run.lambda", rsec["lambda"].strip(), float)
        if not lam > 0:
            raise ConfigError("run.lambda", "must be positive")
    shuffle = rsec.get("shuffle", "independent").strip()
    if shuffle not in ("independent", "shuffle-once", "incremental"):
        raise ConfigError("run.shuffle", f"unknown mode {shuffle!r}")
    rel_err = rsec.get("rel_err", "pooled-min").strip()
    if rel_err not in REL_ERR_CONVENTIONS:
        raise ConfigError("run.rel_err", f"choose from {', '.join(REL_ERR_CONVENTIONS)}")

    schedules = []
    for name in cp.sections():
        if not name.startswith("schedule."):
            continue
        sid = name.split(".", 1)[1]
        if not sid:
            raise ConfigError(name, "empty schedule id")
        schedules.append(_parse_schedule(sid, cp[name], name))
    if not schedules:
        raise ConfigError("schedule", "at least one [schedule.<id>] section required")

    out = cp["output"] if "output" in cp else {}
    _unknown("output", out, _OUTPUT_KEYS)
    output_dir = out.get("dir", "results").strip()
    plots = _bool("output.plots", out["plots"]) if "plots" in out else True
    metrics = tuple(_list(out["metrics"])) if "metrics" in out else ("rel_err", "nat_res")
    for m in metrics:
        if m not in CURVE_METRICS:
            raise ConfigError("output.metrics", f"unknown metric {m!r}")

    diags = ()
    if "diagnostics" in cp:
        dsec = cp["diagnostics"]
        _unknown("diagnostics", dsec, DIAGNOSTICS)
        diags = tuple(k for k in DIAGNOSTICS if k in dsec and _bool(f"diagnostics.{k}", dsec[k]))

    return ExperimentConfig(
        problem=kind, problem_params=tuple(sorted(params.items())), algorithms=algorithms,
        schedules=tuple(schedules), epochs=epochs, seeds=seeds, lam=lam, shuffle=shuffle,
        rel_err=rel_err, output_dir=output_dir, plots=plots, plot_metrics=metrics, diagnostics=diags,
    )


def _parse_schedule(sid, sec, name) -> ScheduleSpec:
    _unknown(name, sec, _SCHEDULE_KEYS)
    raw_kind = _required(sec, name, "kind").strip()
    if raw_kind not in _SCHEDULE_ALIASES:
        raise ConfigError(f"{name}.kind", f"unknown schedule kind {raw_kind!r}")
    kind = _SCHEDULE_ALIASES[raw_kind]
    vals = {k: _convert(f"{name}.{k}", sec[k].strip(), t) for k, t in _SCHEDULE_KEYS.items() if k in sec and k != "kind"}
    if kind in ("polynomial", "constant") and "alpha" not in vals:
        raise ConfigError(f"{name}.alpha", "missing required key")
    if "alpha" in vals and not vals["alpha"] > 0:
        raise ConfigError(f"{name}.alpha", "must be positive")
    if kind == "polynomial":
        g = vals.get("gamma", 1.0)
        if not 1.0 / 3.0 < g <= 1.0:
            raise ConfigError(f"{name}.gamma", f"gamma={g} outside (1/3, 1]")
        if vals.get("beta", 0.0) < 0:
            raise ConfigError(f"{name}.beta", "must be nonnegative")
    if "eta" in vals and not vals["eta"] > 0:
        raise ConfigError(f"{name}.eta", "must be positive")
    if vals.get("regime", "reshuffled") not in ("reshuffled", "worst-case"):
        raise ConfigError(f"{name}.regime", "choose reshuffled or worst-case")
    if vals.get("units", "absolute") not in ("absolute", "inverse-L"):
        raise ConfigError(f"{name}.units", "choose absolute or inverse-L")
    if "horizon" in vals and vals["horizon"] < 1:
        raise ConfigError(f"{name}.horizon", "must be positive")
    return ScheduleSpec(sid, kind, **vals)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e.strerror}") from None
    return parse_config(text, base_dir=path.parent)


# ---------------------------------------------------------------------------
# problem and schedule construction


@functools.lru_cache(maxsize=8)
def _bundle(kind: str, params: tuple) -> B.BenchmarkBundle:
    p = dict(params)
    if kind == "toy1d":
        return B.make_toy_1d()
    if kind == "simplex":
        return B.make_simplex_interpolation(
            n=p.get("n", 500), d=p.get("d", 50), support_size=p.get("support_size", 5),
            dist=p.get("dist", "uniform"), rng=p.get("seed", 0),
        )
    if kind == "quadratic-l1":
        return B.make_quadratic_l1(
            n=p.get("n", 32), d=p.get("d", 8), condition_number=p.get("condition_number", 10.0),
            nu=p.get("nu", 0.01), rng=p.get("seed", 0), noise=p.get("noise", 0.1),
        )
    if "data" in p:
        data = B.load_libsvm(p["data"])
    else:
        data = B.synthetic_classification(
            n=p.get("n", 64), d=p.get("d", 10), rng=p.get("seed", 0),
            flip=p.get("flip", 0.1), dist=p.get("dist", "gaussian"),
        )
    return B.make_tanh_classification(data, nu=p.get("nu", 0.01))


def build_bundle(cfg: ExperimentConfig) -> B.BenchmarkBundle:
    return _bundle(cfg.problem, cfg.problem_params)


def resolve_lambda(cfg: ExperimentConfig, bundle: B.BenchmarkBundle) -> float:
    return cfg.lam if cfg.lam is not None else bundle.lam


def build_schedule(spec: ScheduleSpec, bundle: B.BenchmarkBundle, lam: float, epochs: int) -> Schedule:
    n = bundle.objective.n
    key = f"schedule.{spec.id}"
    if spec.kind in ("polynomial", "constant"):
        alpha = spec.alpha
        if spec.units == "inverse-L":
            if not (math.isfinite(bundle.L) and bundle.L > 0):
                raise ConfigError(f"{key}.units", "problem has no finite L")
            alpha /= bundle.L
        if spec.kind == "constant":
            return Schedule("constant", alpha=alpha, n=n)
        return Schedule("polynomial", alpha=alpha, beta=spec.beta, gamma=spec.gamma, n=n)
    consts = _constants(bundle.objective, lam, key)
    horizon = spec.horizon or epochs
    eta = spec.eta if spec.eta is not None else theory_eta(consts, n, horizon, spec.regime)
    return Schedule("theory", n=n, horizon=horizon, eta=eta, regime=spec.regime)


def _constants(obj: CompositeObjective, lam: float, key: str):
    try:
        return theory_constants(obj.problem.lipschitz, obj.regularizer.rho, lam)
    except ValueError as e:
        raise ConfigError(key, f"theory constants unavailable: {e}") from None


# ---------------------------------------------------------------------------
# execution


@dataclass
class RunResult:
    run_id: str
    algorithm: str
    schedule_id: str
    seed: int
    status: str
    failure_epoch: Optional[int]
    rows: list  # (epoch, step, psi, nat_res, fnor_norm, merit, sigma2, err_norm, feasible, elapsed_ms)
    message: str = ""
    diagnostics: dict = field(default_factory=dict)

    def final(self, name: str):
        vals = [r[_ROW_INDEX[name]] for r in self.rows]
        vals = [v for v in vals if v is not None and math.isfinite(v)]
        return vals[-1] if vals else None

    def minimum(self, name: str):
        vals = [r[_ROW_INDEX[name]] for r in self.rows]
        vals = [v for v in vals if v is not None and math.isfinite(v)]
        return min(vals) if vals else None


_ROW_INDEX = {"epoch": 0, "step_size": 1, "psi": 2, "nat_res": 3, "fnor_norm": 4, "merit": 5,
              "sigma2": 6, "err_norm": 7, "feasible": 8, "elapsed_ms": 9}


@dataclass
class RunSummary:
    runs: list
    groups: dict  # (algorithm, schedule_id) -> {"runs", "completed", "success_rate"}
    psi_min: Optional[float]
    counts: dict

    def success_rate(self, algorithm: str, schedule_id: str) -> float:
        return self.groups[(algorithm, schedule_id)]["success_rate"]


@dataclass
class ExecutionResult:
    csv_path: Path
    summary_path: Path
    summary: RunSummary
    curves_path: Optional[Path] = None
    plots: list = field(default_factory=list)


def run_id(algorithm: str, schedule_id: str, seed: int) -> str:
    return f"{algorithm}:{schedule_id}:{seed}"


def _task(args) -> RunResult:
    cfg, algorithm, spec, seed = args
    rid = run_id(algorithm, spec.id, seed)
    bundle = build_bundle(cfg)
    lam = resolve_lambda(cfg, bundle)
    sched = build_schedule(spec, bundle, lam, cfg.epochs)
    iterates = bool({"variance_bound", "stationarity"} & set(cfg.diagnostics))
    rc = RunConfig(
        algorithm, bundle.objective, lam, sched, cfg.epochs, seed=seed, shuffle=cfg.shuffle,
        start=bundle.start, domain_guard=bundle.domain_guard, record_iterates=iterates,
    )
    try:
        trace = run(rc)
    except (ValueError, ArithmeticError) as e:
        return RunResult(rid, algorithm, spec.id, seed, "error", None, [], message=str(e))
    rows = [
        (r.k, r.step, r.psi, r.nat_res, r.fnor_norm, r.merit, r.sigma2, r.err_norm, r.feasible, r.elapsed * 1e3)
        for r in trace.records
    ]
    res = RunResult(rid, algorithm, spec.id, seed, trace.status, trace.failure_epoch, rows)
    if cfg.diagnostics:
        res.diagnostics = _diagnose(cfg, bundle, lam, trace)
    return res


def _diagnose(cfg, bundle, lam, trace) -> dict:
    obj = bundle.objective
    out = {}
    try:
        consts = theory_constants(obj.problem.lipschitz, obj.regularizer.rho, lam)
    except ValueError as e:
        consts = None
        why = f"theory constants unavailable: {e}"
    for name in cfg.diagnostics:
        if name == "variance_bound":
            rep = D.check_variance_trace(trace, obj)
        elif name == "stationarity":
            rep = D.check_stat_trace(trace, obj)
        elif consts is None:
            rep = D.InequalityReport(name, applicable=False, reason=why)
        elif name == "error_bound":
            rep = D.check_error_bound(trace, consts)
        elif name == "merit_descent":
            rep = D.check_merit_descent(trace, consts)
        else:
            rep = D.check_complexity_bound(trace, consts, bundle.f_lb + obj.regularizer.phi_lb)
        out[name] = rep
    return out


def _tasks(cfg: ExperimentConfig, seed_offset: int):
    return [
        (cfg, a, s, seed + seed_offset)
        for a in cfg.algorithms
        for s in cfg.schedules
        for seed in cfg.seeds
    ]


def execute(cfg: ExperimentConfig, jobs: int = 1, seed_offset: int = 0, plots: Optional[bool] = None,
            output_dir=None, aggregate_curves: bool = False) -> ExecutionResult:
    """Run the (algorithm, schedule, seed) grid and write runs.csv and summary.txt."""
    out = Path(output_dir or cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError("output.dir", f"not writable: {e.strerror}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError("output.dir", f"{out} is not writable")

    bundle = build_bundle(cfg)
    lam = resolve_lambda(cfg, bundle)
    for spec in cfg.schedules:  # surface schedule problems before any run starts
        build_schedule(spec, bundle, lam, cfg.epochs)
    if cfg.rel_err == "reference-psi-star" and bundle.known_solution is None:
        raise ConfigError("run.rel_err", f"problem {cfg.problem!r} carries no reference solution")

    tasks = _tasks(cfg, seed_offset)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]

    if cfg.rel_err == "reference-psi-star":
        psi_ref = bundle.known_solution.psi
    else:
        psi_ref = _pooled_min(results)

    csv_path = out / "runs.csv"
    write_runs_csv(results, psi_ref, csv_path)
    summary = summarize(results, psi_ref)
    summary_path = out / "summary.txt"
    summary_path.write_text(format_summary(cfg, summary))
    result = ExecutionResult(csv_path, summary_path, summary)

    if aggregate_curves:
        statuses = {r.run_id: r.status for r in results}
        agg = aggregate([csv_path], statuses=statuses)
        result.curves_path = out / "curves.csv"
        write_curves(agg, result.curves_path)
        if cfg.plots if plots is None else plots:
            for m in cfg.plot_metrics:
                p = emit_plot(agg, m, out / f"{m}.svg")
                if p is not None:
                    result.plots.append(p)
    return result


def _pooled_min(results) -> Optional[float]:
    vals = [r[2] for res in results for r in res.rows if r[8] and r[2] is not None and math.isfinite(r[2])]
    return min(vals) if vals else None


def rel_err(psi, psi_ref):
    if psi is None or psi_ref is None or not math.isfinite(psi):
        return None
    return (psi - psi_ref) / max(1.0, psi_ref)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_runs_csv(results, psi_ref, path) -> None:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(COLUMNS)
    for res in results:
        for epoch, step, psi, nat, fnor, mer, s2, err, feas, ms in res.rows:
            psi_out = psi if feas else None
            wr.writerow([
                res.run_id, res.algorithm, res.schedule_id, res.seed, epoch, _fmt(step), _fmt(psi_out),
                _fmt(rel_err(psi_out, psi_ref)), _fmt(nat), _fmt(fnor), _fmt(mer), _fmt(s2), _fmt(err),
                _fmt(bool(feas)), f"{ms:.3f}",
            ])
    Path(path).write_text(buf.getvalue())


def summarize(results, psi_ref) -> RunSummary:
    groups: dict = {}
    counts = {s: 0 for s in STATUSES}
    for res in results:
        counts[res.status] = counts.get(res.status, 0) + 1
        g = groups.setdefault((res.algorithm, res.schedule_id), {"runs": 0, "completed": 0})
        g["runs"] += 1
        g["completed"] += res.status == "completed"
    for g in groups.values():
        g["success_rate"] = g["completed"] / g["runs"]
    return RunSummary(results, groups, psi_ref, counts)


def format_summary(cfg: ExperimentConfig, s: RunSummary) -> str:
    lines = [
        f"problem = {cfg.problem}",
        f"problem.params = {', '.join(f'{k}={v}' for k, v in cfg.problem_params)}",
        f"rel_err.convention = {cfg.rel_err}",
        f"rel_err.psi_min = {_fmt(s.psi_min)}",
        f"runs.total = {len(s.runs)}",
    ]
    lines += [f"runs.{k} = {v}" for k, v in s.counts.items()]
    for (a, sid), g in s.groups.items():
        pre = f"group.{a}.{sid}"
        lines += [f"{pre}.runs = {g['runs']}", f"{pre}.completed = {g['completed']}",
                  f"{pre}.success_rate = {g['success_rate']!r}"]
    for r in s.runs:
        pre = f"run.{r.run_id}"
        lines.append(f"{pre}.status = {r.status}")
        if r.failure_epoch is not None:
            lines.append(f"{pre}.failure_epoch = {r.failure_epoch}")
        if r.message:
            lines.append(f"{pre}.message = {r.message}")
        lines += [
            f"{pre}.final_psi = {_fmt(r.final('psi'))}",
            f"{pre}.final_nat_res = {_fmt(r.final('nat_res'))}",
            f"{pre}.min_nat_res = {_fmt(r.minimum('nat_res'))}",
        ]
        for name, rep in r.diagnostics.items():
            lines.append(f"{pre}.diag.{name} = {rep.summary()}")
    return "\n".join(lines) + "\n"


def diagnostics_violated(summary: RunSummary) -> bool:
    return any(rep.applicable and not rep.holds for r in summary.runs for rep in r.diagnostics.values())


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class GroupCurve:
    algorithm: str
    schedule_id: str
    runs: int
    completed: int
    epochs: np.ndarray
    mean: dict
    median: dict

    @property
    def success_rate(self) -> float:
        return self.completed / self.runs if self.runs else 0.0


def _parse_num(s: str) -> float:
    return float(s) if s != "" else math.nan


def _infer_failed(rows) -> bool:
    for r in rows:
        if r["feasible"] != "1":
            return True
        psi = _parse_num(r["psi"])
        if not math.isfinite(psi) or psi > DIVERGENCE_LIMIT:
            return True
    return False


def aggregate(csv_paths, statuses: Optional[dict] = None) -> dict:
    """Mean and median curves per (algorithm, schedule_id) over completed runs.

    Run status comes from ``statuses`` (run_id -> status) when given, otherwise
    it is inferred from the rows: any infeasible, non-finite or diverged row
    marks the run as failed.
    """
    runs: dict = {}
    order: list = []
    for path in csv_paths:
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = next(rd, None)
            if header is None:
                raise ValueError(f"{path}: empty CSV")
            for i, col in enumerate(COLUMNS):
                if i >= len(header) or header[i] != col:
                    raise ValueError(f"{path}: schema mismatch at column {col!r}")
            if len(header) != len(COLUMNS):
                raise ValueError(f"{path}: schema mismatch at column {header[len(COLUMNS)]!r}")
            for row in rd:
                rec = dict(zip(COLUMNS, row))
                key = (rec["algorithm"], rec["schedule_id"])
                if key not in runs:
                    runs[key] = {}
                    order.append(key)
                runs[key].setdefault(rec["run_id"], []).append(rec)

    out = {}
    for key in order:
        members = runs[key]
        done = []
        for rid, rows in members.items():
            failed = statuses[rid] != "completed" if statuses and rid in statuses else _infer_failed(rows)
            if not failed:
                done.append(rows)
        if not done:
            out[key] = GroupCurve(key[0], key[1], len(members), 0, np.array([], dtype=int), {}, {})
            continue
        epochs = sorted({int(r["epoch"]) for rows in done for r in rows})
        pos = {e: j for j, e in enumerate(epochs)}
        mean, median = {}, {}
        for m in CURVE_METRICS:
            M = np.full((len(done), len(epochs)), np.nan)
            for i, rows in enumerate(done):
                for r in rows:
                    M[i, pos[int(r["epoch"])]] = _parse_num(r[m])
            if np.all(np.isnan(M)):
                continue
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                mean[m] = np.nanmean(M, axis=0)
                median[m] = np.nanmedian(M, axis=0)
        out[key] = GroupCurve(key[0], key[1], len(members), len(done), np.array(epochs), mean, median)
    return out


def write_curves(agg: dict, path) -> None:
    metrics = [m for m in CURVE_METRICS if any(m in g.mean for g in agg.values())]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["algorithm", "schedule_id", "epoch", "runs", "completed", "success_rate"]
                + [f"{m}_{s}" for m in metrics for s in ("mean", "median")])
    for g in agg.values():
        if len(g.epochs) == 0:
            wr.writerow([g.algorithm, g.schedule_id, "", g.runs, g.completed, _fmt(g.success_rate)]
                        + [""] * (2 * len(metrics)))
            continue
        for j, e in enumerate(g.epochs):
            row = [g.algorithm, g.schedule_id, int(e), g.runs, g.completed, _fmt(g.success_rate)]
            for m in metrics:
                for src in (g.mean, g.median):
                    v = src[m][j] if m in src else math.nan
                    row.append("" if math.isnan(v) else _fmt(v))
            wr.writerow(row)
    Path(path).write_text(buf.getvalue())


# ---------------------------------------------------------------------------
# plotting

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def emit_plot(agg: dict, metric: str, path, stat: str = "mean") -> Optional[Path]:
    """Log-scale SVG line plot of one metric, one polyline per group."""
    series = []
    clamped = False
    schedules = {g.schedule_id for g in agg.values()}
    for g in agg.values():
        src = g.mean if stat == "mean" else g.median
        if metric not in src or len(g.epochs) == 0:
            continue
        y = np.asarray(src[metric], dtype=float)
        x = np.asarray(g.epochs, dtype=float)
        keep = ~np.isnan(y)
        if not keep.any():
            continue
        x, y = x[keep], y[keep]
        if np.any(y <= 0):
            clamped = True
            y = np.where(y <= 0, LOG_FLOOR, y)
        label = g.algorithm if len(schedules) == 1 else f"{g.algorithm} / {g.schedule_id}"
        series.append((label, x, np.log10(y)))
    if not series:
        log.warning("emit_plot: no data for metric %r, no file written", metric)
        return None

    W, H = 640, 420
    left, right, top, bottom = 70, 170, 30, 60
    pw, ph = W - left - right, H - top - bottom
    xs = np.concatenate([s[1] for s in series])
    ys = np.concatenate([s[2] for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 1, x1 + 1
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 1, y1 + 1

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (y1 - v) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for d in range(math.ceil(y0), math.floor(y1) + 1):
        yy = py(d)
        parts.append(f'<line x1="{left}" y1="{yy:.2f}" x2="{left + pw}" y2="{yy:.2f}" stroke="#ddd"/>')
        parts.append(f'<text x="{left - 6}" y="{yy + 4:.2f}" font-size="11" text-anchor="end">1e{d}</text>')
    for v in np.linspace(x0, x1, 5):
        parts.append(f'<text x="{px(v):.2f}" y="{top + ph + 16}" font-size="11" text-anchor="middle">{v:.0f}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{top + ph + 34}" font-size="12" text-anchor="middle">epoch</text>')
    parts.append(f'<text x="{left}" y="{top - 10}" font-size="13">{metric} ({stat}, log scale)</text>')
    for j, (label, x, y) in enumerate(series):
        color = _COLORS[j % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 18 * j
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 35}" y="{ly + 4}" font-size="11">{_esc(label)}</text>')
    if clamped:
        parts.append(
            f'<text class="footnote" x="{left}" y="{H - 8}" font-size="10">'
            f"note: values &lt;= 0 clamped to {LOG_FLOOR:g} for the log scale</text>"
        )
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n")
    return path


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
