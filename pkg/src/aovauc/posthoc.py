"""HSD-type all-pairs comparison of group mean AUCs.

Under the global null each studentized difference is roughly standard
normal, so the largest of them behaves like the range of ``k`` iid normals
divided by sqrt(2). That reference law depends on ``k`` only and is
simulated once, then reused for every pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Hashable, Sequence

import numpy as np

from .inference import AnovaError, GroupSummary
from .numerics import RngStream

__all__ = [
    "ReferenceDistribution",
    "PairComparison",
    "PosthocTable",
    "studentized_difference",
    "reference_distribution",
    "posthoc_pvalues",
    "critical_value",
    "DEFAULT_R",
]

DEFAULT_R = 1_000_000
_CHUNK = 250_000


@dataclass(frozen=True, eq=False)
class ReferenceDistribution:
    k: int
    R: int
    sorted_max_diffs: np.ndarray
    seed: int

    def tail_probability(self, stat: float) -> float:
        """Fraction of replicates at or above ``|stat|``."""
        below = np.searchsorted(self.sorted_max_diffs, abs(stat), side="left")
        return (self.R - int(below)) / self.R

    def quantile(self, prob: float) -> float:
        """The ceil(prob * R)-th order statistic."""
        if not (0.0 < prob <= 1.0):
            raise ValueError(f"prob must lie in (0, 1], got {prob}")
        idx = max(1, math.ceil(prob * self.R - 1e-9))
        return float(self.sorted_max_diffs[idx - 1])


@dataclass(frozen=True)
class PairComparison:
    group_i: Hashable
    group_j: Hashable
    delta: float
    p_value: float


@dataclass(frozen=True)
class PosthocTable:
    pairs: tuple
    alpha: float
    critical_value: float
    R: int

    def p_value(self, gi, gj) -> float:
        for pair in self.pairs:
            if {pair.group_i, pair.group_j} == {gi, gj}:
                return pair.p_value
        raise KeyError((gi, gj))

    def rejected(self) -> list[tuple]:
        return [(p.group_i, p.group_j) for p in self.pairs if p.p_value <= self.alpha]


def studentized_difference(gi: GroupSummary, gj: GroupSummary) -> float:
    """Difference of group mean AUCs over the root of summed mean variances."""
    denom = gi.var_of_mean + gj.var_of_mean
    if not denom > 0:
        raise AnovaError(f"pair ({gi.group_id!r}, {gj.group_id!r}): both group means have zero variance")
    return (gi.mean_auc - gj.mean_auc) / math.sqrt(denom)


def _max_pair_diffs(rng: np.random.Generator, k: int, size: int) -> np.ndarray:
    v = rng.standard_normal((size, k))
    # max_{i,j} |V_i - V_j| is the sample range
    return (v.max(axis=1) - v.min(axis=1)) / math.sqrt(2.0)


@lru_cache(maxsize=32)
def _cached_reference(k: int, R: int, seed: int, stream_id: int) -> ReferenceDistribution:
    gen = RngStream(seed, stream_id).generator
    parts = []
    left = R
    while left > 0:
        size = min(_CHUNK, left)
        parts.append(_max_pair_diffs(gen, k, size))
        left -= size
    draws = np.sort(np.concatenate(parts))
    draws.setflags(write=False)
    return ReferenceDistribution(k, R, draws, seed)


def reference_distribution(k: int, R: int, rng: RngStream) -> ReferenceDistribution:
    """Simulate ``R`` replicates of the maximum absolute studentized difference.

    Results are cached per ``(k, R, seed, stream_id)`` within the process.
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if R < 1:
        raise ValueError(f"R must be positive, got {R}")
    return _cached_reference(int(k), int(R), int(rng.seed), int(rng.stream_id))


def critical_value(k: int, alpha: float, R: int = DEFAULT_R, seed: int = 0) -> float:
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    ref = reference_distribution(k, R, RngStream(seed))
    return ref.quantile(1.0 - alpha)


def posthoc_pvalues(summaries: Sequence[GroupSummary], ref: ReferenceDistribution,
                    alpha: float = 0.05) -> PosthocTable:
    """All pairwise studentized differences with Monte Carlo p-values."""
    if ref.k != len(summaries):
        raise ValueError(f"reference distribution built for k={ref.k}, got {len(summaries)} groups")
    pairs = []
    for gi, gj in combinations(summaries, 2):
        delta = studentized_difference(gi, gj)
        pairs.append(PairComparison(gi.group_id, gj.group_id, delta, ref.tail_probability(delta)))
    return PosthocTable(tuple(pairs), alpha, ref.quantile(1.0 - alpha), ref.R)
