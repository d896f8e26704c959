"""Permutation streams and the without-replacement sampling law."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

MODES = ("independent", "shuffle-once", "incremental")


def epoch_rng(seed: int, epoch: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream, epoch).

    Epoch k is reproducible without replaying epochs 1..k-1.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(stream, epoch))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class PermutationStream:
    n: int
    mode: str = "independent"
    seed: int = 0
    stream: int = 0
    epoch: int = field(default=0, init=False)
    _fixed: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.mode not in MODES:
            raise ValueError(f"unknown shuffle mode {self.mode!r}")
        if self.mode == "incremental":
            self._fixed = np.arange(self.n)
        elif self.mode == "shuffle-once":
            self._fixed = epoch_rng(self.seed, 1, self.stream).permutation(self.n)

    def next_permutation(self) -> np.ndarray:
        """0-based permutation for the next epoch."""
        self.epoch += 1
        if self._fixed is not None:
            return self._fixed.copy()
        return permutation_for_epoch(self.n, self.seed, self.epoch, self.stream)


def permutation_for_epoch(n: int, seed: int, epoch: int, stream: int = 0) -> np.ndarray:
    # Generator.permutation is a Fisher-Yates shuffle
    return epoch_rng(seed, epoch, stream).permutation(n)


def expected_partial_variance(X, t: int) -> float:
    """E||mean of t draws without replacement - mean||^2 = (n-t)/(t(n-1)) sigma^2."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= t <= n:
        raise ValueError(f"t={t} outside [1, {n}]")
    if n == 1:
        return 0.0
    dev = X - X.mean(axis=0)
    sigma2 = float(np.sum(dev * dev) / n)
    return (n - t) / (t * (n - 1)) * sigma2


def enumerate_partial_variance(X, t: int) -> float:
    """Same quantity by exhaustive enumeration over all n! orderings."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    xbar = X.mean(axis=0)
    total = 0.0
    count = 0
    for perm in itertools.permutations(range(n)):
        m = X[list(perm[:t])].mean(axis=0) - xbar
        total += float(m @ m)
        count += 1
    return total / count


@dataclass
class PartialMeanEstimate:
    mean_bias: np.ndarray
    var_est: float
    var_se: float


def partial_mean_variance_mc(X, t: int, trials: int, rng) -> PartialMeanEstimate:
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= t <= n:
        raise ValueError(f"t={t} outside [1, {n}]")
    rng = np.random.default_rng(rng)
    xbar = X.mean(axis=0)
    idx = np.argsort(rng.random((trials, n)), axis=1)[:, :t]
    means = X[idx].mean(axis=1) - xbar
    sq = np.sum(means * means, axis=1)
    if t == n:
        sq = np.zeros(trials)
        means = np.zeros_like(means)
    return PartialMeanEstimate(means.mean(axis=0), float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(trials)))
