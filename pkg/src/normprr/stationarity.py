"""Natural residual, normal map, merit function and step-size constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problem import BoundReport, CompositeObjective, eval_full_grad
from .prox import ProxParameterError


@dataclass(frozen=True)
class TheoryConstants:
    C: float
    tau: float
    alpha_bar: float
    lam: float
    L: float
    rho: float


def theory_constants(L: float, rho: float, lam: float) -> TheoryConstants:
    """Error-bound constant C, merit weight tau and the step cap alpha_bar."""
    if not (L > 0 and math.isfinite(L)):
        raise ValueError(f"L must be positive and finite, got {L}")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if not lam > 0:
        raise ProxParameterError("lambda must be positive")
    if rho > 0 and lam >= 1.0 / (4.0 * rho):
        raise ProxParameterError(f"lambda={lam} must be below 1/(4 rho)={1 / (4 * rho)}")
    C = 4.0 * ((3.0 * L + 2.0 / lam - rho) / (1.0 - lam * rho)) ** 2
    tau = (1.0 - 4.0 * lam * rho) / (2.0 * (1.0 - 2.0 * lam * rho + lam * lam * L * L))
    alpha_bar = 1.0 / max(math.sqrt(2.0 * C), 10.0 * L, 4.0 * C * lam / tau)
    return TheoryConstants(C, tau, alpha_bar, lam, L, rho)


def default_lambda(L: float, rho: float) -> float:
    if rho == 0:
        return 1.0 / L
    return min(1.0 / L, 1.0 / (8.0 * rho))


def _check_lambda(obj: CompositeObjective, lam: float) -> None:
    obj.regularizer.check_step(lam)


def natural_residual(obj: CompositeObjective, w, lam: float) -> np.ndarray:
    _check_lambda(obj, lam)
    w = np.asarray(w, dtype=float)
    g = eval_full_grad(obj.problem, w)
    return (w - obj.regularizer.prox_op(w - lam * g, lam)) / lam


@dataclass
class NormalMap:
    value: np.ndarray
    w: np.ndarray


def normal_map(obj: CompositeObjective, z, lam: float) -> NormalMap:
    """F(z) = grad f(w) + (z - w)/lam with w = prox(z, lam); F(z) is a subgradient of psi at w."""
    _check_lambda(obj, lam)
    z = np.asarray(z, dtype=float)
    w = obj.regularizer.prox_op(z, lam)
    return NormalMap(eval_full_grad(obj.problem, w) + (z - w) / lam, w)


def merit(obj: CompositeObjective, z, lam: float, tau: float) -> float:
    if not tau > 0:
        raise ValueError("tau must be positive")
    nm = normal_map(obj, z, lam)
    return obj.psi(nm.w) + 0.5 * tau * lam * float(nm.value @ nm.value)


def check_stat_inequality(obj: CompositeObjective, z, lam: float) -> BoundReport:
    """(1 - lam rho) ||G_lam(prox(z))|| <= ||F(z)||."""
    nm = normal_map(obj, z, lam)
    G = natural_residual(obj, nm.w, lam)
    lhs = (1.0 - lam * obj.regularizer.rho) * float(np.linalg.norm(G))
    rhs = float(np.linalg.norm(nm.value))
    return BoundReport(lhs, rhs, lhs <= rhs * (1 + 1e-9))


def subdifferential_distance(obj: CompositeObjective, w) -> Optional[float]:
    """dist(0, grad f(w) + d phi(w)) for separable convex phi; None otherwise."""
    reg = obj.regularizer
    w = np.asarray(w, dtype=float)
    if reg.kind not in ("zero", "l1", "nonneg", "box") or not reg.in_domain(w):
        return None
    g = eval_full_grad(obj.problem, w)
    if reg.kind == "zero":
        r = g
    elif reg.kind == "l1":
        nu = reg.params["nu"]
        r = np.where(w != 0, g + nu * np.sign(w), np.maximum(np.abs(g) - nu, 0.0))
    elif reg.kind == "nonneg":
        r = np.where(w > 0, g, np.maximum(g, 0.0))
    else:
        lo, hi = reg.params["lower"], reg.params["upper"]
        r = np.where(w <= lo, np.maximum(g, 0.0), np.where(w >= hi, np.maximum(-g, 0.0), g))
    return float(np.linalg.norm(r))
