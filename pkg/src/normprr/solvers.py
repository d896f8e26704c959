"""norm-PRR and the baselines (e-PRR, PSGD, RR, deterministic PGD).

All methods share one epoch loop: draw an order, run n inner steps, then
measure the state. Measurements are taken after each epoch; ``Trace.initial``
holds the state before the first epoch.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .problem import CompositeObjective, DomainViolation, _mean_rows, eval_full_grad
from .prox import ProxParameterError
from .shuffling import PermutationStream, epoch_rng
from .stationarity import TheoryConstants, theory_constants

ALGORITHMS = ("norm-prr", "e-prr", "psgd", "rr", "pgd")
DIVERGENCE_LIMIT = 1e12


# ---------------------------------------------------------------------------
# step sizes


@dataclass(frozen=True)
class Schedule:
    """Per-inner-step size rule alpha_k.

    constant:   alpha_k = alpha / n
    polynomial: alpha_k = alpha / (beta + k)**gamma
    theory:     alpha_k = eta * n**(1/3) / T**(1/3) / n   (regime "reshuffled")
                alpha_k = eta / T**(1/3) / n               (regime "worst-case")
    """

    kind: str
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 1.0
    n: int = 1
    horizon: Optional[int] = None
    eta: Optional[float] = None
    regime: str = "reshuffled"

    def __post_init__(self):
        if self.kind not in ("constant", "polynomial", "theory"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.kind == "polynomial":
            if not (1.0 / 3.0 < self.gamma <= 1.0):
                raise ValueError(f"gamma={self.gamma} outside (1/3, 1]")
            if self.beta < 0 or self.alpha <= 0:
                raise ValueError("polynomial schedule needs alpha > 0, beta >= 0")
        elif self.kind == "constant":
            if self.alpha <= 0:
                raise ValueError("alpha must be positive")
        else:
            if not self.horizon or self.horizon < 1:
                raise ValueError("theory schedule needs a positive horizon")
            if self.eta is None or self.eta <= 0:
                raise ValueError("theory schedule needs eta > 0")
            if self.regime not in ("reshuffled", "worst-case"):
                raise ValueError(f"unknown regime {self.regime!r}")

    @classmethod
    def theory(cls, constants: TheoryConstants, n: int, horizon: int, eta=None, regime="reshuffled"):
        if eta is None:
            eta = theory_eta(constants, n, horizon, regime)
        return cls("theory", n=n, horizon=horizon, eta=eta, regime=regime)

    @classmethod
    def safe_polynomial(cls, constants: TheoryConstants, n: int, gamma: float):
        """alpha_k = a / (n k^gamma) with the largest a keeping sum (n alpha_k)^3 <= 1/(2 L C)."""
        if not 1.0 / 3.0 < gamma < 1.0:
            raise ValueError("gamma must lie in (1/3, 1)")
        a = min(constants.alpha_bar, ((3 * gamma - 1) / (6 * constants.L * constants.C)) ** (1 / 3))
        return cls("polynomial", alpha=a / n, gamma=gamma, n=n)


def theory_eta(constants: TheoryConstants, n: int, horizon: int, regime: str = "reshuffled") -> float:
    c = (2.0 * constants.L * constants.C) ** (-1.0 / 3.0)
    if regime == "reshuffled":
        return min(c, constants.alpha_bar * n ** (-1.0 / 3.0) * horizon ** (1.0 / 3.0))
    return min(c, constants.alpha_bar * horizon ** (1.0 / 3.0))


def step_size(s: Schedule, k: int) -> float:
    if k < 1:
        raise ValueError("epoch index starts at 1")
    if s.kind == "constant":
        return s.alpha / s.n
    if s.kind == "polynomial":
        return s.alpha / (s.beta + k) ** s.gamma
    # constant over the horizon, so clamping k is a no-op on the value
    T = s.horizon
    if s.regime == "reshuffled":
        return s.eta * s.n ** (1.0 / 3.0) / T ** (1.0 / 3.0) / s.n
    return s.eta / T ** (1.0 / 3.0) / s.n


# ---------------------------------------------------------------------------
# run configuration and trace


@dataclass
class RunConfig:
    algorithm: str
    objective: CompositeObjective
    lam: float
    schedule: Schedule
    epochs: int
    seed: int = 0
    shuffle: str = "independent"
    start: Optional[np.ndarray] = None
    record_error: bool = True
    record_merit: bool = True
    record_variance: bool = True
    record_iterates: bool = False
    domain_guard: Optional[Callable[[np.ndarray], bool]] = None
    tau: Optional[float] = None
    index_source: Optional[Callable[[int], np.ndarray]] = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")


@dataclass
class EpochRecord:
    k: int
    step: Optional[float]
    psi: float
    nat_res: Optional[float]
    fnor_norm: Optional[float]
    merit: Optional[float]
    sigma2: Optional[float]
    err_norm: Optional[float]
    w_step: Optional[float]
    feasible: bool
    elapsed: float


@dataclass
class Trace:
    algorithm: str
    n: int
    lam: float
    tau: Optional[float]
    initial: EpochRecord
    records: list = field(default_factory=list)
    w: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    status: str = "completed"
    failure_epoch: Optional[int] = None
    iterates: list = field(default_factory=list)
    z_iterates: list = field(default_factory=list)

    def series(self, name: str, include_initial: bool = False) -> np.ndarray:
        recs = ([self.initial] if include_initial else []) + self.records
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in recs], dtype=float)

    @property
    def states(self) -> list:
        """Initial record followed by the per-epoch records."""
        return [self.initial] + self.records


# ---------------------------------------------------------------------------
# measurement


def _measure(cfg: RunConfig, w, z, k, step, err_norm, w_step, t0) -> EpochRecord:
    obj = cfg.objective
    reg = obj.regularizer
    p = obj.problem
    feasible = reg.in_domain(w)
    if not feasible:
        return EpochRecord(k, step, math.inf, None, None, None, None, err_norm, w_step, False, time.perf_counter() - t0)
    G = p.component_grads(w)
    vals = p.component_values(w)
    gbar = _mean_rows(G)
    f = math.fsum(vals) / p.n if p.n >= 1000 else float(vals.sum() / p.n)
    psi = f + reg.value_fn(w)
    sigma2 = None
    if cfg.record_variance:
        dev = G - gbar
        sigma2 = float(np.sum(dev * dev) / p.n)
    nat = None
    if reg.rho < 1.0:
        nat = float(np.linalg.norm(w - reg.prox_op(w - gbar, 1.0)))
    fnor = mer = None
    if cfg.algorithm == "norm-prr":
        F = gbar + (z - w) / cfg.lam
        fnor = float(np.linalg.norm(F))
        if cfg.record_merit and cfg.tau is not None:
            mer = psi + 0.5 * cfg.tau * cfg.lam * fnor * fnor
    return EpochRecord(k, step, psi, nat, fnor, mer, sigma2, err_norm, w_step, True, time.perf_counter() - t0)


def _resolve_tau(cfg: RunConfig) -> Optional[float]:
    if cfg.tau is not None:
        return cfg.tau
    p, reg = cfg.objective.problem, cfg.objective.regularizer
    try:
        return theory_constants(p.lipschitz, reg.rho, cfg.lam).tau
    except (ValueError, ProxParameterError):
        return None


# ---------------------------------------------------------------------------
# main loop


def run(cfg: RunConfig) -> Trace:
    """Dispatch on ``cfg.algorithm``."""
    obj = cfg.objective
    reg = obj.regularizer
    p = obj.problem
    n = p.n
    alg = cfg.algorithm
    if alg in ("norm-prr", "pgd"):
        reg.check_step(cfg.lam)
    cfg = replace(cfg, tau=_resolve_tau(cfg)) if alg == "norm-prr" else cfg
    start = np.zeros(p.dim) if cfg.start is None else np.array(cfg.start, dtype=float).ravel()
    if start.size != p.dim:
        raise ValueError(f"start has length {start.size}, expected {p.dim}")
    prox = reg.prox_op
    grad = p.grad_i
    guard = cfg.domain_guard
    lam = cfg.lam
    t0 = time.perf_counter()

    if alg == "norm-prr":
        z = start.copy()
        w = prox(z, lam)
    else:
        z = None
        w = start.copy()

    trace = Trace(alg, n, lam, cfg.tau, None)
    try:
        trace.initial = _measure(cfg, w, z, 0, None, None, None, t0)
    except DomainViolation:
        trace.initial = EpochRecord(0, None, math.nan, None, None, None, None, None, None, False, 0.0)
        trace.status = "failed-infeasible"
        trace.failure_epoch = 0
        trace.w = w
        return trace
    if cfg.record_iterates:
        trace.iterates.append(w.copy())
        if z is not None:
            trace.z_iterates.append(z.copy())

    stream = PermutationStream(n, cfg.shuffle, cfg.seed) if alg in ("norm-prr", "e-prr", "rr") else None
    fnor_prev = None
    if alg == "norm-prr" and cfg.record_error:
        fnor_prev = _normal_map_vec(obj, z, w, lam)

    for k in range(1, cfg.epochs + 1):
        a = lam if alg == "pgd" else step_size(cfg.schedule, k)
        if alg == "e-prr":
            reg.check_step(n * a)
        elif alg == "psgd":
            reg.check_step(a)
        if cfg.index_source is not None:
            order = np.asarray(cfg.index_source(k))
        elif stream is not None:
            order = stream.next_permutation()
        elif alg == "psgd":
            order = epoch_rng(cfg.seed, k, stream=1).integers(n, size=n)
        else:
            order = ()
        w_old = w
        z_old = z
        failed = False
        try:
            if alg == "norm-prr":
                for i in order:
                    z = z - a * (grad(w, i) + (z - w) / lam)
                    w = prox(z, lam)
                    if guard is not None and guard(w):
                        failed = True
                        break
            elif alg in ("e-prr", "rr"):
                for i in order:
                    w = w - a * grad(w, i)
                    if guard is not None and guard(w):
                        failed = True
                        break
                if not failed and alg == "e-prr":
                    w = prox(w, n * a)
            elif alg == "psgd":
                for i in order:
                    w = prox(w - a * grad(w, i), a)
                    if guard is not None and guard(w):
                        failed = True
                        break
            else:
                g = obj.grad(w)
                w = prox(w - lam * g, lam)
                if guard is not None and guard(w):
                    failed = True
        except DomainViolation:
            failed = True
        if failed:
            trace.records.append(
                EpochRecord(k, a, math.nan, None, None, None, None, None, None, False, time.perf_counter() - t0)
            )
            trace.status = "failed-infeasible"
            trace.failure_epoch = k
            trace.w = w
            trace.z = z
            return trace
        if not np.all(np.isfinite(w)) or (z is not None and not np.all(np.isfinite(z))):
            return _diverged(trace, k, a, w, z, t0)

        err = None
        fnor_new = None
        if alg == "norm-prr" and cfg.record_error:
            fnor_new = _normal_map_vec(obj, z, w, lam)
            e = z - z_old + n * a * fnor_prev
            err = float(np.linalg.norm(e))
        w_step = float(np.linalg.norm(w - w_old))
        try:
            rec = _measure(cfg, w, z, k, a, err, w_step, t0)
        except DomainViolation:
            trace.records.append(
                EpochRecord(k, a, math.nan, None, None, None, None, err, w_step, False, time.perf_counter() - t0)
            )
            trace.status = "failed-infeasible"
            trace.failure_epoch = k
            trace.w, trace.z = w, z
            return trace
        trace.records.append(rec)
        fnor_prev = fnor_new
        if cfg.record_iterates:
            trace.iterates.append(w.copy())
            if z is not None:
                trace.z_iterates.append(z.copy())
        if (rec.feasible and not math.isfinite(rec.psi)) or rec.psi > DIVERGENCE_LIMIT:
            trace.status = "diverged"
            trace.failure_epoch = k
            break
    trace.w, trace.z = w, z
    return trace


def _diverged(trace, k, a, w, z, t0):
    trace.records.append(EpochRecord(k, a, math.nan, None, None, None, None, None, None, False, time.perf_counter() - t0))
    trace.status = "diverged"
    trace.failure_epoch = k
    trace.w, trace.z = w, z
    return trace


def _normal_map_vec(obj, z, w, lam):
    return eval_full_grad(obj.problem, w) + (z - w) / lam


def run_norm_prr(cfg: RunConfig) -> Trace:
    return run(replace(cfg, algorithm="norm-prr"))


def run_eprr(cfg: RunConfig) -> Trace:
    return run(replace(cfg, algorithm="e-prr"))


def run_psgd(cfg: RunConfig) -> Trace:
    return run(replace(cfg, algorithm="psgd"))


def run_rr(cfg: RunConfig) -> Trace:
    return run(replace(cfg, algorithm="rr"))


def run_pgd(cfg: RunConfig) -> Trace:
    return run(replace(cfg, algorithm="pgd"))


def pgd_solve(obj: CompositeObjective, lam: float, start=None, tol: float = 1e-12, max_iter: int = 200_000):
    """Deterministic proximal gradient until ||G_lam(w)|| <= tol; returns (w, residual, iterations)."""
    reg = obj.regularizer
    reg.check_step(lam)
    w = np.zeros(obj.dim) if start is None else np.array(start, dtype=float)
    w = reg.prox_op(w, lam)
    res = math.inf
    for it in range(1, max_iter + 1):
        w_new = reg.prox_op(w - lam * obj.grad(w), lam)
        res = float(np.linalg.norm(w - w_new)) / lam
        w = w_new
        if res <= tol:
            return w, res, it
    return w, res, max_iter
