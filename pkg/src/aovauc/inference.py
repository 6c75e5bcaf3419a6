"""Random-effects ANOVA on per-subject AUCs.

Each group's subject AUCs are compared through a centred quadratic form
whose covariance is diagonal: per-subject plug-in variance plus a
between-subject variance estimated by the method of moments. The group
means are compared the same way, and the two sums of squares are combined
into an F ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .empirical import auc_and_variance
from .numerics import f_survival

__all__ = [
    "SubjectEstimate",
    "GroupSummary",
    "QuadraticFormInput",
    "AnovaTable",
    "AnovaError",
    "between_subject_variance",
    "centered_quadratic_form",
    "summarize_group",
    "anova_auc",
    "summaries_from_arrays",
]

RANK_TOL = 1e-10


class AnovaError(ValueError):
    """Input that the ANOVA cannot handle (too few subjects, degenerate variances)."""


@dataclass(frozen=True)
class SubjectEstimate:
    group_id: Hashable
    subject_id: Hashable
    auc: float
    variance: float
    m_pre: int = 0
    m_post: int = 0

    def __post_init__(self):
        if not (0.0 <= self.auc <= 1.0):
            raise ValueError(f"subject {self.subject_id!r}: AUC {self.auc} outside [0, 1]")
        if not self.variance >= 0.0:
            raise ValueError(f"subject {self.subject_id!r}: negative variance {self.variance}")


@dataclass(frozen=True)
class GroupSummary:
    group_id: Hashable
    n: int
    mean_auc: float
    tau2: float
    var_of_mean: float
    subject_variances: tuple = field(default=(), repr=False)
    subject_aucs: tuple = field(default=(), repr=False)


@dataclass(frozen=True, eq=False)
class QuadraticFormInput:
    values: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        d = np.asarray(self.variances, dtype=float)
        if v.ndim != 1 or v.shape != d.shape:
            raise ValueError("values and variances must be 1-d vectors of equal length")
        if np.any(d < 0):
            raise ValueError("variances must be non-negative")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "variances", d)


@dataclass(frozen=True)
class AnovaTable:
    sse: float
    df_sse: int
    ssf: float
    df_ssf: int
    mean_square_intra: float
    mean_square_inter: float
    f_stat: float
    p_value: float
    per_group: tuple = ()

    @property
    def total(self) -> float:
        return self.sse + self.ssf


def between_subject_variance(aucs: Sequence[float], variances: Sequence[float]) -> float:
    """Method-of-moments estimate of the between-subject AUC variance.

    Sample variance of the subject AUCs (divisor ``n - 1``) minus the mean
    within-subject variance, clamped at zero.

    Examples
    --------
    >>> round(between_subject_variance([0.5, 0.6, 0.7], [0, 0, 0]), 12)
    0.01
    """
    a = np.asarray(aucs, dtype=float)
    s = np.asarray(variances, dtype=float)
    if a.size < 2 or a.size != s.size:
        raise AnovaError(f"need at least two subjects with matching variances, got {a.size}")
    # shifting by a[0] keeps identical AUCs at exactly zero spread
    return max(0.0, float(np.var(a - a[0], ddof=1) - np.mean(s)))


def centered_quadratic_form(q: QuadraticFormInput) -> float:
    """``v S^+ v'`` for ``S = U diag(d) U`` and the centring matrix ``U``.

    The Moore-Penrose inverse is taken from the symmetric eigendecomposition
    of ``S``; eigenvalues at or below ``RANK_TOL`` times the largest are
    treated as zero. Constant vectors lie in the null space, so the result
    ignores a common shift of ``values``.
    """
    v, d = q.values, q.variances
    n = v.size
    if n < 2:
        raise AnovaError("quadratic form needs at least two entries")
    if not np.any(d > 0):
        raise AnovaError("all variances are zero; covariance matrix vanishes")
    # U diag(d) U without forming U: subtract row/column means
    s = np.diag(d)
    s -= d[:, None] / n
    s -= d[None, :] / n
    s += d.sum() / n**2
    evals, evecs = np.linalg.eigh(s)
    keep = evals > RANK_TOL * evals[-1]
    proj = evecs[:, keep].T @ v
    return max(0.0, float(np.sum(proj**2 / evals[keep])))


def summarize_group(estimates: Iterable[SubjectEstimate]) -> GroupSummary:
    est = list(estimates)
    if not est:
        raise AnovaError("empty group")
    gid = est[0].group_id
    if any(e.group_id != gid for e in est):
        raise AnovaError("estimates from several groups passed to summarize_group")
    n = len(est)
    if n < 2:
        raise AnovaError(f"group {gid!r} has {n} subject(s); at least 2 are required")
    aucs = np.array([e.auc for e in est])
    variances = np.array([e.variance for e in est])
    tau2 = between_subject_variance(aucs, variances)
    var_of_mean = float(np.sum(variances + tau2)) / n**2
    return GroupSummary(gid, n, float(np.mean(aucs)), tau2, var_of_mean,
                        tuple(variances.tolist()), tuple(aucs.tolist()))


def _sort_key(label):
    return (type(label).__name__, label)


def group_estimates(estimates: Iterable[SubjectEstimate]) -> dict:
    """Bucket estimates by group, keyed in sorted label order."""
    buckets: dict = {}
    for e in estimates:
        buckets.setdefault(e.group_id, []).append(e)
    return {g: buckets[g] for g in sorted(buckets, key=_sort_key)}


def _group_sse(g: GroupSummary) -> float:
    d = np.asarray(g.subject_variances) + g.tau2
    if not np.any(d > 0):
        # zero within- and between-subject variance forces identical AUCs
        return 0.0
    return centered_quadratic_form(QuadraticFormInput(np.asarray(g.subject_aucs), d))


def anova_table(summaries: Sequence[GroupSummary]) -> AnovaTable:
    """Assemble the ANOVA table from already summarized groups."""
    k = len(summaries)
    if k < 2:
        raise AnovaError(f"need at least two groups, got {k}")
    n = sum(g.n for g in summaries)
    sse = 0.0
    for g in summaries:
        sse += _group_sse(g)
    means = np.array([g.mean_auc for g in summaries])
    vom = np.array([g.var_of_mean for g in summaries])
    if not np.any(vom > 0):
        if np.ptp(means) > 0:
            raise AnovaError("every group mean has zero variance but the means differ")
        ssf = 0.0
    else:
        ssf = centered_quadratic_form(QuadraticFormInput(means, vom))
    df_sse, df_ssf = n - k, k - 1
    if df_sse < 1:
        raise AnovaError(f"no residual degrees of freedom (n={n}, k={k})")
    if sse > 0:
        f_stat = (df_sse * ssf) / (df_ssf * sse)
        p_value = f_survival(f_stat, df_ssf, df_sse)
    elif ssf > 0:
        f_stat, p_value = math.inf, 0.0
    else:
        f_stat, p_value = 0.0, 1.0
    return AnovaTable(sse, df_sse, ssf, df_ssf, sse / df_sse, ssf / df_ssf,
                      f_stat, p_value, tuple(summaries))


def anova_auc(estimates: Iterable[SubjectEstimate]) -> AnovaTable:
    """F test of equal mean AUC across the groups present in ``estimates``.

    Groups are processed in sorted label order so the reduction is
    reproducible. Every group needs at least two subjects; all offending
    groups are reported together.
    """
    groups = group_estimates(estimates)
    small = [f"{g!r} (n={len(v)})" for g, v in groups.items() if len(v) < 2]
    if small:
        raise AnovaError("groups with fewer than 2 subjects: " + ", ".join(small))
    return anova_table([summarize_group(v) for v in groups.values()])


def summaries_from_arrays(groups: Sequence[Sequence[tuple]], group_ids=None) -> list[GroupSummary]:
    """Group summaries straight from sorted (pre, post) array pairs.

    Fast path for Monte Carlo loops; group ids default to ``0..k-1``.
    """
    if group_ids is None:
        group_ids = range(len(groups))
    out = []
    for gid, subjects in zip(group_ids, groups):
        est = [auc_and_variance(pre, post) for pre, post in subjects]
        aucs = np.array([e[0] for e in est])
        variances = np.array([e[1] for e in est])
        n = aucs.size
        if n < 2:
            raise AnovaError(f"group {gid!r} has {n} subject(s); at least 2 are required")
        tau2 = between_subject_variance(aucs, variances)
        out.append(GroupSummary(gid, n, float(aucs.mean()), tau2,
                                float(np.sum(variances + tau2)) / n**2,
                                tuple(variances.tolist()), tuple(aucs.tolist())))
    return out
