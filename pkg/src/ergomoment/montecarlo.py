"""Seeded Monte Carlo estimates of fourth moments of partial sums."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import FiniteMarkovModel, ModelError, Observable
from .systems import ChainSampler, StationarySampler

MIN_REPS = 100
UNDERPOWERED_RATIO = 0.5
THREADS_ENV = "ERGOMOMENT_THREADS"


@dataclass(frozen=True)
class MCEstimate:
    """Replicate average of ``S_n^4`` with its standard error."""

    mean: float
    stderr: float
    n: int
    reps: int
    seed: int
    underpowered: bool
    center: float = 0.0

    @property
    def upper(self) -> float:
        """Upper confidence value ``mean + 3 stderr``."""
        return self.mean + 3.0 * self.stderr

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n, "reps": self.reps,
                "seed": self.seed, "underpowered": self.underpowered, "center": self.center,
                "upper": self.upper}


def as_sampler(system, seed: int = 0) -> StationarySampler:
    if isinstance(system, StationarySampler):
        return system
    if isinstance(system, FiniteMarkovModel):
        return ChainSampler(system, seed=seed)
    raise ModelError(f"cannot sample from {type(system).__name__}")


def evaluator(sampler: StationarySampler, phi):
    """Map a block of emitted states to observable values."""
    if isinstance(phi, np.ndarray):
        table = phi
        return lambda idx: table[np.asarray(idx, dtype=np.intp)]
    if isinstance(sampler, ChainSampler) and isinstance(phi, Observable):
        if phi.is_finite:
            return phi
        return lambda idx: phi(sampler.coordinate(idx))
    return phi


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def partial_sums(sampler: StationarySampler, phi, n: int, reps: int, seed: int) -> np.ndarray:
    """``S_n`` for replicates ``0 .. reps-1``, ordered by replicate index.

    With ``ERGOMOMENT_THREADS > 1`` contiguous replicate blocks run on a
    thread pool; the values do not depend on the split.
    """
    f = evaluator(sampler, phi)
    workers = min(_threads(), max(1, reps // MIN_REPS))
    if workers == 1:
        return sampler.partial_sums(f, n, reps, seed=seed)
    edges = np.linspace(0, reps, workers + 1).astype(int)
    with ThreadPoolExecutor(workers) as pool:
        parts = pool.map(lambda ab: sampler.partial_sums(f, n, ab[1] - ab[0], seed=seed, first=ab[0]),
                         zip(edges[:-1], edges[1:]))
        return np.concatenate(list(parts))


def _summarise(values: np.ndarray, n: int, reps: int, seed: int, center: float = 0.0) -> MCEstimate:
    mean = math.fsum(values) / reps
    var = math.fsum((values - mean) ** 2) / (reps - 1)
    stderr = math.sqrt(var / reps)
    under = bool(stderr > UNDERPOWERED_RATIO * mean) if mean > 0 else bool(stderr > 0)
    return MCEstimate(mean, stderr, int(n), int(reps), int(seed), under, center)


def estimate_s4(system, phi, n: int, reps: int, seed: int) -> MCEstimate:
    """Estimate ``E[S_n^4]`` from ``reps`` independent stationary trajectories.

    ``phi`` must be centred: an :class:`Observable` carrying a centring
    record, or a plain callable the caller vouches for.
    """
    if reps < MIN_REPS:
        raise ModelError(f"reps must be >= {MIN_REPS}")
    if n < 1:
        raise ModelError("n must be >= 1")
    if isinstance(phi, Observable) and not phi.centered:
        raise ModelError("observable is not centred; centre it first")
    sampler = as_sampler(system, seed)
    S = partial_sums(sampler, phi, n, reps, seed)
    return _summarise(S ** 4, n, reps, seed)


def interval_probability(sampler: StationarySampler, s: float, t: float) -> float:
    return float(sampler.cdf(t) - sampler.cdf(s))


def estimate_indicator_s4(system, s: float, t: float, n: int, reps: int, seed: int) -> MCEstimate:
    """Fourth central moment of ``sum_i 1{s < X_i <= t}``, centred by the exact stationary CDF."""
    if reps < MIN_REPS:
        raise ModelError(f"reps must be >= {MIN_REPS}")
    sampler = as_sampler(system, seed)
    p = interval_probability(sampler, s, t)
    if p == 0.0 or p == 1.0:
        # the centred indicator vanishes almost surely
        return MCEstimate(0.0, 0.0, int(n), int(reps), int(seed), False, p)

    def phi(block):
        x = sampler.coordinate(block)
        return ((x > s) & (x <= t)).astype(float) - p

    S = partial_sums(sampler, phi, n, reps, seed)
    return _summarise(S ** 4, n, reps, seed, center=p)


__all__ = ["MCEstimate", "MIN_REPS", "as_sampler", "estimate_indicator_s4", "estimate_s4",
           "evaluator", "interval_probability", "partial_sums"]
