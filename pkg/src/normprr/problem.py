"""Finite-sum composite problems psi = f + phi, f = (1/n) sum_i f(., i)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .prox import Regularizer

COMPENSATED_THRESHOLD = 1000


class DomainViolation(ValueError):
    """A component oracle was evaluated where it is undefined."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"component {index} undefined at the requested point")


@dataclass(frozen=True)
class ProblemInstance:
    """Smooth finite-sum part.

    ``grad_i(w, i)`` and ``f_i(w, i)`` use 0-based component indices.
    ``grad_all``/``f_all`` are optional vectorized oracles returning an
    ``(n, d)`` array and an ``(n,)`` array; they must agree with the per
    component oracles and only exist for speed.
    ``lipschitz`` is the common modulus of every component gradient; it may be
    ``inf`` when no global constant exists.
    """

    n: int
    dim: int
    grad_i: Callable[[np.ndarray, int], np.ndarray]
    f_i: Callable[[np.ndarray, int], float]
    lipschitz: float
    f_lb: float
    grad_all: Optional[Callable[[np.ndarray], np.ndarray]] = None
    f_all: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "problem"
    meta: dict = field(default_factory=dict)

    def component_grads(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self.grad_all is not None:
            G = self.grad_all(w)
        else:
            G = np.stack([self.grad_i(w, i) for i in range(self.n)])
        bad = ~np.isfinite(G).all(axis=1)
        if bad.any():
            raise DomainViolation(int(np.argmax(bad)))
        return G

    def component_values(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self.f_all is not None:
            v = np.asarray(self.f_all(w), dtype=float)
        else:
            v = np.array([self.f_i(w, i) for i in range(self.n)], dtype=float)
        bad = ~np.isfinite(v)
        if bad.any():
            raise DomainViolation(int(np.argmax(bad)))
        return v


@dataclass(frozen=True)
class CompositeObjective:
    problem: ProblemInstance
    regularizer: Regularizer

    @property
    def n(self) -> int:
        return self.problem.n

    @property
    def dim(self) -> int:
        return self.problem.dim

    @property
    def psi_lb(self) -> float:
        return self.problem.f_lb + self.regularizer.phi_lb

    def psi(self, w) -> float:
        phi = self.regularizer.value(w)
        if math.isinf(phi):
            return math.inf
        return eval_f(self.problem, w) + phi

    def grad(self, w) -> np.ndarray:
        return eval_full_grad(self.problem, w)


def _mean_rows(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    if n >= COMPENSATED_THRESHOLD:
        return np.array([math.fsum(col) for col in M.T]) / n
    return M.sum(axis=0) / n


def eval_f(p: ProblemInstance, w) -> float:
    v = p.component_values(w)
    if p.n >= COMPENSATED_THRESHOLD:
        return math.fsum(v) / p.n
    return float(v.sum() / p.n)


def eval_full_grad(p: ProblemInstance, w) -> np.ndarray:
    return _mean_rows(p.component_grads(w))


def component_variance(p: ProblemInstance, w) -> float:
    """(1/n) sum_i ||grad_i(w) - grad f(w)||^2 (two-pass)."""
    G = p.component_grads(w)
    dev = G - _mean_rows(G)
    return float(np.sum(dev * dev) / p.n)


@dataclass
class BoundReport:
    lhs: float
    rhs: float
    holds: bool


def check_variance_bound(p: ProblemInstance, reg: Regularizer, w) -> BoundReport:
    """Variance bound sigma^2 <= 2 L (f(w) - f_lb) at a point of dom(phi)."""
    if not reg.in_domain(w):
        raise ValueError("point outside the regularizer domain")
    lhs = component_variance(p, w)
    gap = eval_f(p, w) - p.f_lb
    rhs = math.inf if math.isinf(p.lipschitz) else 2.0 * p.lipschitz * gap
    return BoundReport(lhs, rhs, lhs <= rhs * (1 + 1e-9))


def fd_gradient_check(p: ProblemInstance, w, i: int) -> float:
    """Relative error between grad_i and central differences of f_i."""
    w = np.asarray(w, dtype=float)
    h = np.finfo(float).eps ** (1 / 3) * (1.0 + np.linalg.norm(w))
    g = np.asarray(p.grad_i(w, i), dtype=float)
    fd = np.empty_like(g)
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = h
        fd[j] = (p.f_i(w + e, i) - p.f_i(w - e, i)) / (2 * h)
    return float(np.linalg.norm(fd - g) / max(1.0, np.linalg.norm(g)))


def fd_gradient_check_all(p: ProblemInstance, w) -> np.ndarray:
    """Relative finite-difference error of every component gradient at w."""
    w = np.asarray(w, dtype=float)
    if p.f_all is None or p.grad_all is None:
        return np.array([fd_gradient_check(p, w, i) for i in range(p.n)])
    h = np.finfo(float).eps ** (1 / 3) * (1.0 + np.linalg.norm(w))
    G = p.component_grads(w)
    fd = np.empty_like(G)
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = h
        fd[:, j] = (np.asarray(p.f_all(w + e)) - np.asarray(p.f_all(w - e))) / (2 * h)
    return np.linalg.norm(fd - G, axis=1) / np.maximum(1.0, np.linalg.norm(G, axis=1))
