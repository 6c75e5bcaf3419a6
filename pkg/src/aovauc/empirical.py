"""Empirical distribution machinery for per-subject AUCs.

A subject contributes two samples: pre-treatment (negative) measurements and
post-treatment (positive) measurements. The AUC is the Mann-Whitney
probability P(pre < post) with ties counted as one half, and its plug-in
variance is built from the ECDF of one sample composed with the quantile
function of the other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

__all__ = [
    "RealSample",
    "PairedSample",
    "StepFunction",
    "SmallSampleWarning",
    "ecdf_eval",
    "quantile_eval",
    "empirical_auc",
    "compose_ecdf_quantile",
    "star_norm",
    "subject_auc_variance",
    "auc_and_variance",
]


class SmallSampleWarning(UserWarning):
    """A subject has fewer than two pre or post measurements."""


@dataclass(frozen=True, eq=False)
class RealSample:
    """Finite real values, stored sorted ascending."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise ValueError("a sample needs at least one value")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.size


@dataclass(frozen=True, eq=False)
class PairedSample:
    """One subject's pre-treatment and post-treatment measurements."""

    pre: RealSample
    post: RealSample
    subject_id: Hashable = None
    group_id: Hashable = None
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not isinstance(self.pre, RealSample):
            object.__setattr__(self, "pre", RealSample(self.pre))
        if not isinstance(self.post, RealSample):
            object.__setattr__(self, "post", RealSample(self.post))
        notes = list(self.warnings)
        if self.pre.size < 2 or self.post.size < 2:
            msg = (f"subject {self.subject_id!r}: only {self.pre.size} pre and "
                   f"{self.post.size} post measurements; variance contribution degenerates")
            if msg not in notes:
                notes.append(msg)
                warnings.warn(msg, SmallSampleWarning, stacklevel=3)
        object.__setattr__(self, "warnings", tuple(notes))

    @property
    def m_pre(self) -> int:
        return self.pre.size

    @property
    def m_post(self) -> int:
        return self.post.size


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous step function on (0, 1].

    ``breakpoints[p]`` is the right end of plateau ``p``; the last breakpoint
    is 1 and the first plateau starts at 0.
    """

    breakpoints: np.ndarray
    plateau_values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        pv = np.asarray(self.plateau_values, dtype=float)
        if bp.shape != pv.shape or bp.size == 0:
            raise ValueError("need one plateau value per breakpoint interval")
        if np.any(np.diff(bp) <= 0) or bp[0] <= 0 or bp[-1] != 1.0:
            raise ValueError("breakpoints must increase strictly within (0, 1] and end at 1")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "plateau_values", pv)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints, prepend=0.0)

    def __call__(self, t: float) -> float:
        if not (0.0 < t <= 1.0):
            raise ValueError(f"step function is defined on (0, 1], got {t}")
        idx = int(np.searchsorted(self.breakpoints, t, side="left"))
        return float(self.plateau_values[idx])


def ecdf_eval(s: RealSample, t: float) -> float:
    """Fraction of sample values ``<= t``."""
    return np.searchsorted(s.values, t, side="right") / s.size


def quantile_eval(s: RealSample, p: float) -> float:
    """Generalized inverse ``inf{x : ecdf(x) >= p}``, the ceil(p*m)-th order statistic."""
    if not (0.0 < p <= 1.0):
        raise ValueError(f"p must lie in (0, 1], got {p}")
    k = math.ceil(p * s.size)
    return float(s.values[k - 1])


def _win_counts(pre_sorted: np.ndarray, post: np.ndarray) -> int:
    # twice the Mann-Whitney count: 2*#(pre < post) + #(pre == post)
    lo = np.searchsorted(pre_sorted, post, side="left")
    hi = np.searchsorted(pre_sorted, post, side="right")
    return int(np.sum(lo + hi))


def empirical_auc(ps: PairedSample) -> float:
    """Empirical AUC, P(pre < post) with cross-sample ties counted as 1/2.

    Computed from merged ranks in O((m_pre + m_post) log m_pre); the result
    is bit-identical to the explicit double sum because the count is kept
    as an integer until the final division.
    """
    twice = _win_counts(ps.pre.values, ps.post.values)
    return twice / (2.0 * ps.m_pre * ps.m_post)


def compose_ecdf_quantile(f_source: RealSample, g_source: RealSample) -> StepFunction:
    """Exact representation of ``t -> F(G^+(t))``.

    F is the ECDF of ``f_source`` and G^+ the quantile function of
    ``g_source``. G^+ equals the j-th order statistic of ``g_source`` on
    ((j-1)/m, j/m], so the composition has ``m = len(g_source)`` plateaus.
    """
    m = g_source.size
    plateaus = np.searchsorted(f_source.values, g_source.values, side="right") / f_source.size
    breakpoints = np.arange(1, m + 1) / m
    breakpoints[-1] = 1.0
    return StepFunction(breakpoints, plateaus)


def star_norm(h: StepFunction) -> float:
    """Variance of ``h`` under the uniform law on (0, 1)."""
    w = h.widths
    v = h.plateau_values
    mean = float(np.dot(w, v))
    # centred form avoids cancellation; clamp absorbs the last ulp
    return max(0.0, float(np.dot(w, (v - mean) ** 2)))


def subject_auc_variance(ps: PairedSample) -> float:
    """Plug-in variance of one subject's empirical AUC.

    ``star_norm(F o G^+) / m_pre + star_norm(G o F^+) / m_post`` where F is
    the post-treatment ECDF and G the pre-treatment ECDF.
    """
    pre, post = ps.pre, ps.post
    return (star_norm(compose_ecdf_quantile(post, pre)) / pre.size
            + star_norm(compose_ecdf_quantile(pre, post)) / post.size)


def auc_and_variance(pre: np.ndarray, post: np.ndarray) -> tuple[float, float]:
    """AUC and plug-in variance from two already-sorted float arrays.

    Fast path used by the simulation and resampling loops; skips the
    validation done by ``RealSample``.
    """
    m_n = pre.size
    m_p = post.size
    lo = np.searchsorted(pre, post, side="left")
    hi = np.searchsorted(pre, post, side="right")
    auc = int(np.sum(lo + hi)) / (2.0 * m_n * m_p)
    # G evaluated at post values, F evaluated at pre values (both right-continuous)
    g_at_post = hi / m_n
    f_at_pre = np.searchsorted(post, pre, side="right") / m_p
    var = float(np.var(f_at_pre)) / m_n + float(np.var(g_at_post)) / m_p
    return auc, var

