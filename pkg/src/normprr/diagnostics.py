"""Post-hoc checks of the descent inequalities along norm-PRR traces, and rate fits.

Each checker pairs the state before epoch k (``trace.states[k-1]``) with the
state after it (``trace.states[k]``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .problem import CompositeObjective, check_variance_bound
from .solvers import Trace
from .stationarity import TheoryConstants, check_stat_inequality

log = logging.getLogger(__name__)

REL_SLACK = 1e-6
ABS_SLACK = 1e-8


@dataclass
class InequalityReport:
    name: str
    epochs_checked: int = 0
    violations: list = field(default_factory=list)
    max_relative_violation: float = 0.0
    applicable: bool = True
    reason: str = ""

    @property
    def holds(self) -> bool:
        return self.applicable and not self.violations

    def summary(self) -> str:
        if not self.applicable:
            return f"{self.name}: not-applicable ({self.reason})"
        state = "holds" if self.holds else f"{len(self.violations)} violations"
        return f"{self.name}: {state} over {self.epochs_checked} epochs (max rel. violation {self.max_relative_violation:.3g})"


def _na(name, reason) -> InequalityReport:
    return InequalityReport(name, applicable=False, reason=reason)


def _require(trace: Trace, fields) -> Optional[str]:
    if trace.algorithm != "norm-prr":
        return "trace is not a norm-PRR run"
    for rec in trace.states[: len(trace.records) + 1]:
        if not rec.feasible:
            return "trace contains an infeasible state"
    for rec in trace.records:
        for f in fields:
            if getattr(rec, f) is None:
                return f"missing field {f}"
    for f in ("fnor_norm", "sigma2"):
        if getattr(trace.initial, f) is None:
            return f"missing field {f}"
    return None


def _same_lambda(trace, constants) -> Optional[str]:
    if not math.isclose(trace.lam, constants.lam, rel_tol=1e-12):
        return f"trace lambda {trace.lam} differs from constants lambda {constants.lam}"
    return None


def check_error_bound(trace: Trace, constants: TheoryConstants) -> InequalityReport:
    """||e^k||^2 <= C n^4 alpha_k^4 (||F(z^k)||^2 + sigma_k^2)."""
    name = "error-bound"
    why = _require(trace, ("err_norm", "step")) or _same_lambda(trace, constants)
    if why:
        return _na(name, why)
    n, C = trace.n, constants.C
    if constants.lam * constants.rho >= 1:
        return _na(name, "lambda * rho >= 1")
    cap = 1.0 / (math.sqrt(2 * C) * n)
    if any(r.step > cap for r in trace.records):
        return _na(name, f"step exceeds 1/(sqrt(2C) n) = {cap:.3g}")
    rep = InequalityReport(name)
    states = trace.states
    for k, post in enumerate(trace.records, start=1):
        pre = states[k - 1]
        lhs = post.err_norm**2
        rhs = C * n**4 * post.step**4 * (pre.fnor_norm**2 + pre.sigma2)
        rep.epochs_checked += 1
        if lhs > rhs * (1 + REL_SLACK):
            rel = (lhs - rhs) / rhs if rhs > 0 else math.inf
            rep.violations.append({"epoch": k, "lhs": lhs, "rhs": rhs})
            rep.max_relative_violation = max(rep.max_relative_violation, rel)
    return rep


def _merit(rec, constants: TheoryConstants) -> float:
    return rec.psi + 0.5 * constants.tau * constants.lam * rec.fnor_norm**2


def check_merit_descent(trace: Trace, constants: TheoryConstants) -> InequalityReport:
    """H(z^{k+1}) <= H(z^k) - tau n a/4 ||F(z^k)||^2 - ||w^{k+1}-w^k||^2/(8 n a) + C n^3 a^3 sigma_k^2."""
    name = "merit-descent"
    why = _require(trace, ("w_step", "step", "fnor_norm")) or _same_lambda(trace, constants)
    if why:
        return _na(name, why)
    if constants.rho > 0 and constants.lam >= 1 / (4 * constants.rho):
        return _na(name, "lambda >= 1/(4 rho)")
    n, C, tau = trace.n, constants.C, constants.tau
    cap = constants.alpha_bar / n
    if any(r.step > cap for r in trace.records):
        return _na(name, f"step exceeds alpha_bar/n = {cap:.3g}")
    rep = InequalityReport(name)
    states = trace.states
    for k, post in enumerate(trace.records, start=1):
        pre = states[k - 1]
        a = post.step
        lhs = _merit(post, constants)
        rhs = (
            _merit(pre, constants)
            - tau * n * a / 4 * pre.fnor_norm**2
            - post.w_step**2 / (8 * n * a)
            + C * n**3 * a**3 * pre.sigma2
        )
        rep.epochs_checked += 1
        if lhs > rhs + ABS_SLACK:
            rep.violations.append({"epoch": k, "lhs": lhs, "rhs": rhs})
            rep.max_relative_violation = max(rep.max_relative_violation, (lhs - rhs) / max(abs(rhs), 1e-300))
    return rep


def check_complexity_bound(trace: Trace, constants: TheoryConstants, psi_lb: float) -> InequalityReport:
    """min_{k<=T} ||F(z^k)||^2 <= (4 + 24 L C sum eta^3)/(tau sum eta) (H(z^1) - psi_lb) for every prefix T."""
    name = "complexity-bound"
    why = _require(trace, ("step",)) or _same_lambda(trace, constants)
    if why:
        return _na(name, why)
    if constants.rho > 0 and constants.lam >= 1 / (4 * constants.rho):
        return _na(name, "lambda >= 1/(4 rho)")
    n, L, C, tau = trace.n, constants.L, constants.C, constants.tau
    eta = np.array([n * r.step for r in trace.records])
    if np.any(eta > constants.alpha_bar * (1 + 1e-12)):
        return _na(name, "eta_k exceeds alpha_bar")
    if float(np.sum(eta**3)) > 1.0 / (2 * L * C):
        return _na(name, "sum eta_k^3 exceeds 1/(2 L C)")
    H1 = _merit(trace.initial, constants)
    gap = H1 - psi_lb
    rep = InequalityReport(name)
    states = trace.states
    best = math.inf
    s1 = s3 = 0.0
    for T in range(1, len(trace.records) + 1):
        best = min(best, states[T - 1].fnor_norm ** 2)
        s1 += eta[T - 1]
        s3 += eta[T - 1] ** 3
        rhs = (4 + 24 * L * C * s3) / (tau * s1) * gap
        rep.epochs_checked += 1
        if best > rhs * (1 + REL_SLACK):
            rep.violations.append({"epoch": T, "lhs": best, "rhs": rhs})
            rep.max_relative_violation = max(rep.max_relative_violation, (best - rhs) / rhs)
    return rep


def check_variance_trace(trace: Trace, obj: CompositeObjective) -> InequalityReport:
    """sigma^2(w^k) <= 2 L (f(w^k) - f_lb) at every recorded iterate."""
    name = "variance-bound"
    if not trace.iterates:
        return _na(name, "trace has no recorded iterates")
    if not math.isfinite(obj.problem.lipschitz):
        return _na(name, "no finite Lipschitz constant")
    if not math.isfinite(obj.problem.f_lb):
        return _na(name, "components have no finite lower bound")
    rep = InequalityReport(name)
    for k, w in enumerate(trace.iterates):
        if not obj.regularizer.in_domain(w):
            return _na(name, f"iterate {k} outside the domain")
        b = check_variance_bound(obj.problem, obj.regularizer, w)
        rep.epochs_checked += 1
        if not b.holds:
            rep.violations.append({"epoch": k, "lhs": b.lhs, "rhs": b.rhs})
            rep.max_relative_violation = max(rep.max_relative_violation, (b.lhs - b.rhs) / max(b.rhs, 1e-300))
    return rep


def check_stat_trace(trace: Trace, obj: CompositeObjective) -> InequalityReport:
    """(1 - lam rho)||G_lam(w^k)|| <= ||F(z^k)|| along the auxiliary iterates."""
    name = "stationarity-ordering"
    if trace.algorithm != "norm-prr" or not trace.z_iterates:
        return _na(name, "needs norm-PRR auxiliary iterates")
    rep = InequalityReport(name)
    for k, z in enumerate(trace.z_iterates):
        b = check_stat_inequality(obj, z, trace.lam)
        rep.epochs_checked += 1
        if not b.holds:
            rep.violations.append({"epoch": k, "lhs": b.lhs, "rhs": b.rhs})
            rep.max_relative_violation = max(rep.max_relative_violation, (b.lhs - b.rhs) / max(b.rhs, 1e-300))
    return rep


# ---------------------------------------------------------------------------
# rates


@dataclass
class RateFit:
    slope: float
    intercept: float
    r: float
    points: int


def _clean(series):
    arr = np.asarray(list(series), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("series must be a sequence of (k, y) pairs")
    keep = np.isfinite(arr[:, 1]) & (arr[:, 1] > 0)
    if not keep.all():
        log.warning("fit: dropping %d nonpositive or non-finite values", int((~keep).sum()))
    return arr[keep]


def _tail(arr, window):
    if not 0 < window <= 1:
        raise ValueError("window must lie in (0, 1]")
    start = int(math.floor(len(arr) * (1 - window)))
    return arr[start:]


def fit_loglog(series, window: float = 0.5) -> RateFit:
    arr = _tail(_clean(series), window)
    if len(arr) < 10:
        raise ValueError(f"need at least 10 positive points in the window, got {len(arr)}")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    r = float(np.corrcoef(x, y)[0, 1]) if np.std(y) > 0 else 1.0
    return RateFit(float(slope), float(intercept), r, len(arr))


def fit_rate(series, window: float = 0.5) -> float:
    """Least-squares slope of log y against log k over the last ``window`` fraction."""
    return fit_loglog(series, window).slope


def fit_geometric(series) -> RateFit:
    """Fit log y = a + b k; slope b < 0 means geometric decay with factor exp(b) per step."""
    arr = _clean(series)
    if len(arr) < 10:
        raise ValueError("need at least 10 positive points")
    x, y = arr[:, 0], np.log(arr[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    return RateFit(float(slope), float(intercept), float(np.corrcoef(x, y)[0, 1]), len(arr))
