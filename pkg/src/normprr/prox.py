"""Regularizers with exact proximal operators.

Every regularizer carries its weak-convexity modulus ``rho``; ``prox(z, step)``
is single valued whenever ``step * rho < 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

KINDS = ("zero", "l1", "box", "nonneg", "simplex", "elastic-net", "mcp")
INDICATOR_KINDS = ("box", "nonneg", "simplex")


class ProxParameterError(ValueError):
    """Raised when ``step * rho >= 1`` (the prox may be multivalued)."""


class UnsupportedDimensionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# elementary maps


def soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    # |z| == t lands in the dead zone
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) = 1} by sort-and-threshold."""
    v = np.asarray(v, dtype=float)
    d = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, d + 1)
    k = np.count_nonzero(u - css / ind > 0)
    theta = css[k - 1] / k
    x = np.maximum(v - theta, 0.0)
    s = x.sum()
    if s != 1.0:
        # rounding in theta; rescale the positive part
        x /= s
    return x


def firm_threshold(z: np.ndarray, t: float, nu: float, concavity: float) -> np.ndarray:
    """Prox of the minimax concave penalty with parameters (nu, concavity), step t < concavity."""
    a = np.abs(z)
    out = np.where(a <= t * nu, 0.0, np.sign(z) * (a - t * nu) / (1.0 - t / concavity))
    return np.where(a > concavity * nu, z, out)


def mcp_value(w: np.ndarray, nu: float, concavity: float) -> float:
    a = np.abs(w)
    inner = nu * a - a * a / (2.0 * concavity)
    outer = 0.5 * concavity * nu * nu
    return float(np.sum(np.where(a <= concavity * nu, inner, outer)))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Regularizer:
    """Nonsmooth term of the composite objective.

    ``prox_op(z, step)`` is the raw operator; solvers validate ``step`` once and
    then call it directly. ``prox`` validates on every call.
    """

    kind: str
    value_fn: Callable[[np.ndarray], float]
    prox_op: Callable[[np.ndarray, float], np.ndarray]
    rho: float = 0.0
    phi_lb: float = 0.0
    domain_fn: Optional[Callable[[np.ndarray, float], bool]] = None
    params: dict = field(default_factory=dict)

    @property
    def is_indicator(self) -> bool:
        return self.kind in INDICATOR_KINDS

    @property
    def is_convex(self) -> bool:
        return self.rho == 0.0

    def value(self, w) -> float:
        w = np.asarray(w, dtype=float)
        if not self.in_domain(w):
            return math.inf
        return self.value_fn(w)

    def in_domain(self, w, tol: float = 0.0) -> bool:
        if self.domain_fn is None:
            return True
        return bool(self.domain_fn(np.asarray(w, dtype=float), tol))

    def check_step(self, step: float) -> None:
        if not step > 0:
            raise ProxParameterError(f"prox step must be positive, got {step}")
        if step * self.rho >= 1.0:
            raise ProxParameterError(
                f"step*rho = {step * self.rho:g} >= 1; prox of {self.kind} may be multivalued"
            )

    def prox(self, z, step: float) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if np.isnan(z).any():
            raise ValueError("prox input contains NaN")
        self.check_step(step)
        return self.prox_op(z, step)

    def __repr__(self) -> str:
        extra = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"Regularizer({self.kind}{', ' + extra if extra else ''})"


def zero() -> Regularizer:
    return Regularizer("zero", lambda w: 0.0, lambda z, t: z.copy())


def l1(nu: float) -> Regularizer:
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    return Regularizer(
        "l1",
        lambda w: nu * float(np.abs(w).sum()),
        lambda z, t: soft_threshold(z, t * nu),
        params={"nu": nu},
    )


def box(lower: float, upper: float) -> Regularizer:
    if not lower < upper:
        raise ValueError("box needs lower < upper")

    def inside(w, tol):
        return bool(np.all(w >= lower - tol) and np.all(w <= upper + tol))

    return Regularizer(
        "box",
        lambda w: 0.0,
        lambda z, t: np.clip(z, lower, upper),
        domain_fn=inside,
        params={"lower": lower, "upper": upper},
    )


def nonneg() -> Regularizer:
    return Regularizer(
        "nonneg",
        lambda w: 0.0,
        lambda z, t: np.maximum(z, 0.0),
        domain_fn=lambda w, tol: bool(np.all(w >= -tol)),
    )


def simplex() -> Regularizer:
    def inside(w, tol):
        # tol widens both the sign and the affine constraint
        return bool(np.all(w >= -tol) and abs(w.sum() - 1.0) <= max(tol, 1e-12) * max(1, w.size))

    return Regularizer("simplex", lambda w: 0.0, lambda z, t: project_simplex(z), domain_fn=inside)


def elastic_net(nu1: float, nu2: float) -> Regularizer:
    """nu1 * ||w||_1 + nu2 * ||w||^2."""
    if nu1 < 0 or nu2 < 0:
        raise ValueError("elastic-net weights must be nonnegative")
    return Regularizer(
        "elastic-net",
        lambda w: nu1 * float(np.abs(w).sum()) + nu2 * float(w @ w),
        lambda z, t: soft_threshold(z, t * nu1) / (1.0 + 2.0 * t * nu2),
        params={"nu1": nu1, "nu2": nu2},
    )


def mcp(nu: float, concavity: float) -> Regularizer:
    """Minimax concave penalty; weakly convex with rho = 1 / concavity."""
    if nu <= 0 or concavity <= 0:
        raise ValueError("mcp needs nu > 0 and concavity > 0")
    return Regularizer(
        "mcp",
        lambda w: mcp_value(w, nu, concavity),
        lambda z, t: firm_threshold(z, t, nu, concavity),
        rho=1.0 / concavity,
        params={"nu": nu, "concavity": concavity},
    )


def make_regularizer(kind: str, **params) -> Regularizer:
    builders = {
        "zero": zero,
        "l1": l1,
        "box": box,
        "nonneg": nonneg,
        "simplex": simplex,
        "elastic-net": elastic_net,
        "mcp": mcp,
    }
    if kind not in builders:
        raise ValueError(f"unknown regularizer kind {kind!r}")
    return builders[kind](**params)


# ---------------------------------------------------------------------------
# validation oracles


def brute_force_prox(reg: Regularizer, z, step: float, radius: float, grid_points: int = 2001) -> np.ndarray:
    """Arg-min of value(y) + ||z - y||^2 / (2 step) over a uniform grid around z.

    Indicator domains are widened by half a grid spacing so that
    lower-dimensional sets (the simplex) still contain grid nodes.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    d = z.size
    if d > 2:
        raise UnsupportedDimensionError(f"brute_force_prox supports d <= 2, got d={d}")
    if grid_points < 1001:
        raise ValueError("grid_points must be >= 1001")
    axes = [np.linspace(zj - radius, zj + radius, grid_points) for zj in z]
    spacing = 2.0 * radius / (grid_points - 1)
    tol = 0.5 * spacing
    # every supported kind is a sum of per-coordinate terms, except for the
    # simplex's coupling constraint sum(y) = 1
    terms = [(ax - zj) ** 2 / (2.0 * step) + _coord_values(reg, ax, tol) for ax, zj in zip(axes, z)]
    if d == 1:
        obj = terms[0]
        if reg.kind == "simplex":
            obj = np.where(np.abs(axes[0] - 1.0) <= tol, obj, np.inf)
        return np.array([axes[0][int(np.argmin(obj))]])
    obj = terms[0][:, None] + terms[1][None, :]
    if reg.kind == "simplex":
        obj = np.where(np.abs(axes[0][:, None] + axes[1][None, :] - 1.0) <= tol, obj, np.inf)
    i, j = np.unravel_index(int(np.argmin(obj)), obj.shape)
    return np.array([axes[0][i], axes[1][j]])


def _coord_values(reg: Regularizer, x: np.ndarray, tol: float) -> np.ndarray:
    p = reg.params
    a = np.abs(x)
    if reg.kind == "zero":
        return np.zeros_like(x)
    if reg.kind == "l1":
        return p["nu"] * a
    if reg.kind == "elastic-net":
        return p["nu1"] * a + p["nu2"] * x * x
    if reg.kind == "mcp":
        nu, g = p["nu"], p["concavity"]
        return np.where(a <= g * nu, nu * a - a * a / (2 * g), 0.5 * g * nu * nu)
    if reg.kind in ("nonneg", "simplex"):
        ok = x >= -tol
    elif reg.kind == "box":
        ok = (x >= p["lower"] - tol) & (x <= p["upper"] + tol)
    else:  # pragma: no cover
        raise ValueError(reg.kind)
    return np.where(ok, 0.0, np.inf)


@dataclass
class CocoercivityReport:
    step: float
    samples: int
    violations: list
    max_violation: float

    @property
    def holds(self) -> bool:
        return not self.violations


def check_cocoercivity(reg: Regularizer, step: float, samples: int, rng, dim: int = 5, scale: float = 3.0):
    """Sample pairs (w, y) and test <w-y, P(w)-P(y)> >= (1 - step*rho) ||P(w)-P(y)||^2."""
    reg.check_step(step)
    rng = np.random.default_rng(rng)
    factor = 1.0 - step * reg.rho
    violations = []
    worst = 0.0
    for s in range(samples):
        w = scale * rng.standard_normal(dim)
        y = scale * rng.standard_normal(dim)
        pw, py = reg.prox_op(w, step), reg.prox_op(y, step)
        dp = pw - py
        gap = float((w - y) @ dp) - factor * float(dp @ dp)
        worst = min(worst, gap)
        if gap < -1e-9:
            violations.append((s, gap))
    return CocoercivityReport(step, samples, violations, -worst)
