"""Benchmark problems, synthetic data generators and LIBSVM I/O."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import prox as P
from .problem import CompositeObjective, DomainViolation, ProblemInstance, component_variance
from .solvers import pgd_solve

log = logging.getLogger(__name__)

# max |d^2/dt^2 tanh(t)| = 4 / (3 sqrt 3)
TANH_CURVATURE = 4.0 / (3.0 * math.sqrt(3.0))


class DataError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


@dataclass
class Dataset:
    A: sp.csr_matrix
    b: np.ndarray
    provenance: str = "synthetic"
    status: str = "ok"
    header: Optional[dict] = None

    def __post_init__(self):
        if self.A.shape[0] != self.b.shape[0]:
            raise DataError("row count differs from label count")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def dense(self) -> np.ndarray:
        return self.A.toarray()


@dataclass
class KnownSolution:
    w: np.ndarray
    psi: float
    sigma2: float
    interpolating: bool


@dataclass
class BenchmarkBundle:
    """A ready-to-run problem.

    ``L`` is the step-size scale used by the experiments; it may be smaller
    than ``objective.problem.lipschitz``, which bounds every component.
    """

    objective: CompositeObjective
    L: float
    lam: float
    f_lb: float
    known_solution: Optional[KnownSolution] = None
    domain_guard: Optional[Callable[[np.ndarray], bool]] = None
    start: Optional[np.ndarray] = None
    name: str = ""
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# one-dimensional feasibility example


def make_toy_1d() -> BenchmarkBundle:
    """n = 100 components [sin(i pi/100) w^2 + log^2(w + i/10)] / 2 with phi = indicator of w >= 0.

    Components are undefined for w <= -1/10; no global gradient Lipschitz
    constant exists, so ``lipschitz`` is ``inf``.
    """
    n = 100
    idx = np.arange(1, n + 1)
    s = np.sin(idx * math.pi / n)
    shift = idx / 10.0

    def f_i(w, i):
        x = float(w[0]) + shift[i]
        if x <= 0:
            raise DomainViolation(i)
        return 0.5 * (s[i] * float(w[0]) ** 2 + math.log(x) ** 2)

    def grad_i(w, i):
        x = float(w[0]) + shift[i]
        if x <= 0:
            raise DomainViolation(i)
        return np.array([s[i] * float(w[0]) + math.log(x) / x])

    def f_all(w):
        x = w[0] + shift
        if np.any(x <= 0):
            raise DomainViolation(int(np.argmax(x <= 0)))
        return 0.5 * (s * w[0] ** 2 + np.log(x) ** 2)

    def grad_all(w):
        x = w[0] + shift
        if np.any(x <= 0):
            raise DomainViolation(int(np.argmax(x <= 0)))
        return (s * w[0] + np.log(x) / x)[:, None]

    prob = ProblemInstance(n, 1, grad_i, f_i, math.inf, 0.0, grad_all, f_all, name="toy1d")
    return BenchmarkBundle(
        CompositeObjective(prob, P.nonneg()),
        L=math.inf,
        lam=1.0,
        f_lb=0.0,
        domain_guard=lambda w: bool(w[0] <= -0.1),
        start=np.array([10.0]),
        name="toy1d",
    )


# ---------------------------------------------------------------------------
# least-squares components


def _least_squares_problem(A, b, c=None, name="lsq") -> ProblemInstance:
    """f(w, i) = (a_i^T w - b_i)^2 / 2 + c^T w."""
    A = np.ascontiguousarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n, d = A.shape
    rows = list(A)
    bl = b.tolist()
    lin = np.zeros(d) if c is None else np.asarray(c, dtype=float)
    has_lin = c is not None

    if has_lin:

        def grad_i(w, i):
            a = rows[i]
            return (a @ w - bl[i]) * a + lin

        def f_i(w, i):
            r = rows[i] @ w - bl[i]
            return 0.5 * r * r + float(lin @ w)

    else:

        def grad_i(w, i):
            a = rows[i]
            return (a @ w - bl[i]) * a

        def f_i(w, i):
            r = rows[i] @ w - bl[i]
            return 0.5 * r * r

    def grad_all(w):
        return (A @ w - b)[:, None] * A + lin

    def f_all(w):
        r = A @ w - b
        return 0.5 * r * r + float(lin @ w)

    L = float(np.max(np.einsum("ij,ij->i", A, A))) if n else 0.0
    # a nonzero linear term leaves the components unbounded below on R^d
    f_lb = -math.inf if has_lin and np.any(lin != 0) else 0.0
    return ProblemInstance(n, d, grad_i, f_i, L, f_lb, grad_all, f_all, name=name)


def sample_features(rng, shape, dist: str = "uniform") -> np.ndarray:
    if dist == "uniform":
        return rng.uniform(0.0, 1.0, size=shape)
    if dist in ("student-t", "t"):
        return student_t(rng, 1.5, shape)
    if dist == "gaussian":
        return rng.standard_normal(shape)
    raise ValueError(f"unknown distribution {dist!r}")


def student_t(rng, df: float, shape) -> np.ndarray:
    """Standard normal over sqrt(chi-square(df)/df)."""
    z = rng.standard_normal(shape)
    v = rng.chisquare(df, size=shape)
    return z / np.sqrt(v / df)


def make_simplex_interpolation(n=500, d=50, support_size=5, dist="uniform", rng=0) -> BenchmarkBundle:
    """Least squares plus a linear term over the unit simplex, with all component
    gradients equal to ``c`` at the planted solution w*."""
    if support_size > d or support_size < 1:
        raise ValueError("support_size must lie in [1, d]")
    rng = np.random.default_rng(rng)
    for _ in range(100):
        A = sample_features(rng, (n, d), dist)
        if np.linalg.matrix_rank(A.T @ A) == d:
            break
    else:
        raise RuntimeError("could not draw A with invertible A^T A in 100 attempts")
    support = np.sort(rng.choice(d, size=support_size, replace=False))
    w_star = np.zeros(d)
    w_star[support] = 1.0 / support_size
    b = A @ w_star
    c = rng.uniform(0.0, 1.0, size=d)
    c[support] = 0.0
    prob = _least_squares_problem(A, b, c, name=f"simplex-{dist}")
    L = float(np.linalg.eigvalsh(A.T @ A)[-1] / n)
    obj = CompositeObjective(prob, P.simplex())
    start = np.zeros(d)
    start[-1] = 1.0
    psi_star = obj.psi(w_star)
    sol = KnownSolution(w_star, psi_star, component_variance(prob, w_star), True)
    return BenchmarkBundle(
        obj, L=L, lam=1.0 / L, f_lb=0.0, known_solution=sol, start=start, name=prob.name,
        info={"support": support, "c": c, "A": A, "b": b},
    )


def quadratic_l1_from_data(A, b, nu: float, lam: Optional[float] = None, tol: float = 1e-12) -> BenchmarkBundle:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    prob = _least_squares_problem(A, b, name="quadratic-l1")
    obj = CompositeObjective(prob, P.l1(nu))
    L = float(np.linalg.eigvalsh(A.T @ A)[-1] / A.shape[0])
    step = 1.0 / L if lam is None else lam
    w_ref, res, _ = pgd_solve(obj, step, tol=tol)
    sol = KnownSolution(w_ref, obj.psi(w_ref), component_variance(prob, w_ref), False)
    return BenchmarkBundle(obj, L=L, lam=1.0 / L, f_lb=0.0, known_solution=sol, name="quadratic-l1",
                           info={"reference_residual": res})


def make_quadratic_l1(n=32, d=8, condition_number=10.0, nu=0.01, rng=0, noise=0.1) -> BenchmarkBundle:
    """l1-regularized least squares; A^T A / n has eigenvalues log-spaced in [1/kappa, 1]."""
    if condition_number < 1:
        raise ValueError("condition_number must be >= 1")
    if n < d:
        raise ValueError("need n >= d")
    rng = np.random.default_rng(rng)
    U, _ = np.linalg.qr(rng.standard_normal((n, d)))
    V, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = np.logspace(0.0, -math.log10(condition_number), d)
    A = math.sqrt(n) * (U * np.sqrt(eig)) @ V.T
    w_true = rng.standard_normal(d)
    b = A @ w_true + noise * rng.standard_normal(n)
    return quadratic_l1_from_data(A, b, nu)


# ---------------------------------------------------------------------------
# tanh classification


def make_tanh_classification(data: Dataset, nu: float = 0.01) -> BenchmarkBundle:
    """f(w, i) = 1 - tanh(b_i a_i^T w) with phi = nu ||w||_1."""
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    labels = np.asarray(data.b, dtype=float)
    bad = ~np.isin(labels, (-1.0, 0.0, 1.0))
    if bad.any():
        raise DataError(f"label {labels[bad][0]} outside {{-1, 0, +1}}")
    labels = np.where(labels == 0, -1.0, labels)
    A = data.dense()
    n, d = A.shape
    if n == 0:
        raise DataError("empty dataset")
    BA = labels[:, None] * A
    rows = list(BA)

    def f_i(w, i):
        return 1.0 - math.tanh(float(rows[i] @ w))

    def grad_i(w, i):
        a = rows[i]
        t = float(a @ w)
        if abs(t) > 350.0:  # sech^2 underflows to 0; math.cosh would raise
            return np.zeros_like(a)
        c = math.cosh(t)
        return (-1.0 / (c * c)) * a

    def f_all(w):
        return 1.0 - np.tanh(BA @ w)

    def grad_all(w):
        with np.errstate(over="ignore"):  # cosh overflow gives the correct limit 0
            sech2 = 1.0 / np.cosh(BA @ w) ** 2
        return -sech2[:, None] * BA

    L_comp = TANH_CURVATURE * float(np.max(np.einsum("ij,ij->i", A, A)))
    prob = ProblemInstance(n, d, grad_i, f_i, L_comp, 0.0, grad_all, f_all, name="tanh")
    L = estimate_lipschitz(data)
    return BenchmarkBundle(CompositeObjective(prob, P.l1(nu)), L=L, lam=1.0, f_lb=0.0,
                           start=np.zeros(d), name="tanh")


def synthetic_classification(n=64, d=10, rng=0, flip=0.1, dist="gaussian") -> Dataset:
    """Planted linear labels with a fraction ``flip`` of flipped signs."""
    rng = np.random.default_rng(rng)
    A = sample_features(rng, (n, d), dist)
    w_true = rng.standard_normal(d)
    y = np.where(A @ w_true >= 0, 1.0, -1.0)
    flips = rng.random(n) < flip
    y[flips] *= -1
    return Dataset(sp.csr_matrix(A), y, "synthetic")


# ---------------------------------------------------------------------------
# Lipschitz estimate


def estimate_lipschitz(data, iters: int = 200, rtol: float = 1e-10) -> float:
    """0.8 * lambda_max(A A^T) / n by power iteration on A^T A."""
    A = data.A if isinstance(data, Dataset) else data
    n = A.shape[0]
    if n < 1:
        raise DataError("need at least one row")
    x = np.random.default_rng(12345).standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = A.T @ (A @ x)
        y = np.asarray(y).ravel()
        nrm = float(np.linalg.norm(y))
        if nrm == 0.0:
            log.warning("estimate_lipschitz: A^T A vanishes on the iterate (zero matrix?)")
            return 0.0
        new = float(x @ y)
        x = y / nrm
        if abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    return 0.8 * lam / n


# ---------------------------------------------------------------------------
# LIBSVM text format


def load_libsvm(path) -> Dataset:
    """Parse ``<label> idx:val ...`` rows (1-based indices); 0/1 labels become -1/+1.

    A first line ``n d seed dist`` (four tokens, no colons) is read as a
    synthetic-data header.
    """
    text = Path(path).read_text().splitlines()
    labels: list[float] = []
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    header = None
    max_idx = 0
    for lineno, raw in enumerate(text, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if lineno == 1 and len(toks) == 4 and not any(":" in t for t in toks):
            try:
                header = {"n": int(toks[0]), "d": int(toks[1]), "seed": int(toks[2]), "dist": toks[3]}
                continue
            except ValueError:
                pass
        try:
            label = float(toks[0])
        except ValueError:
            raise ParseError(lineno, f"bad label {toks[0]!r}") from None
        seen = set()
        for tok in toks[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(lineno, f"malformed token {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(lineno, f"malformed token {tok!r}") from None
            if idx < 1:
                raise ParseError(lineno, f"index {idx} must be >= 1")
            if idx in seen:
                raise ParseError(lineno, f"duplicate index {idx}")
            seen.add(idx)
            indices.append(idx - 1)
            values.append(val)
            max_idx = max(max_idx, idx)
        labels.append(label)
        indptr.append(len(indices))
    n = len(labels)
    d = max_idx
    if header is not None:
        d = max(d, header["d"])
    A = sp.csr_matrix((np.array(values, dtype=float), np.array(indices, dtype=np.int64), np.array(indptr)),
                      shape=(n, d))
    y = np.array(labels, dtype=float)
    if n and np.all(np.isin(y, (0.0, 1.0))):
        y = np.where(y == 0, -1.0, 1.0)
    elif n:
        y = np.where(y > 0, 1.0, np.where(y < 0, -1.0, y))
    status = "ok"
    if n == 0:
        log.warning("load_libsvm: %s contains no rows", path)
        status = "empty"
    return Dataset(A, y, "libsvm-file", status, header)


def save_libsvm(data: Dataset, path, header: Optional[dict] = None) -> None:
    A = sp.csr_matrix(data.A)
    lines = []
    if header is not None:
        lines.append(f"{header['n']} {header['d']} {header['seed']} {header['dist']}")
    for r in range(A.shape[0]):
        start, end = A.indptr[r], A.indptr[r + 1]
        feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in zip(A.indices[start:end], A.data[start:end]) if v != 0)
        lab = int(data.b[r]) if float(data.b[r]).is_integer() else repr(float(data.b[r]))
        lines.append(f"{lab:+d} {feats}".rstrip() if isinstance(lab, int) else f"{lab} {feats}".rstrip())
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
