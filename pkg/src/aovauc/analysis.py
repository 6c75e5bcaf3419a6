"""End-to-end analysis of a loaded dataset and the null-distribution check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import DataError, Dataset, load_csv, preprocess
from .empirical import auc_and_variance
from .inference import (AnovaError, AnovaTable, SubjectEstimate, anova_auc, anova_table,
                        summaries_from_arrays)
from .numerics import RngStream, f_cdf, ks_distance
from .posthoc import DEFAULT_R, PosthocTable, posthoc_pvalues, reference_distribution

__all__ = [
    "ReportDocument",
    "DiagnosticResult",
    "estimate_subjects",
    "analyze",
    "analyze_from_provenance",
    "resampling_diagnostic",
]


@dataclass
class ReportDocument:
    anova: AnovaTable
    posthoc: PosthocTable | None = None
    warnings: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    formula: str = ""

    @property
    def group_ids(self) -> list:
        return [g.group_id for g in self.anova.per_group]

    @property
    def tau_summary(self) -> tuple[float, list[float]]:
        """Mean of the per-group random-effect SDs, and the SDs themselves."""
        taus = [math.sqrt(g.tau2) for g in self.anova.per_group]
        return float(np.mean(taus)), taus


@dataclass
class DiagnosticResult:
    f_samples: np.ndarray
    ks_distance: float
    reference_df: tuple

    @property
    def ks_critical_1pct(self) -> float:
        return 1.63 / math.sqrt(self.f_samples.size)


def estimate_subjects(ds: Dataset) -> list[SubjectEstimate]:
    out = []
    for s in ds.subjects:
        auc, var = auc_and_variance(s.pre.values, s.post.values)
        out.append(SubjectEstimate(s.group_id, s.subject_id, auc, var, s.m_pre, s.m_post))
    return out


def _validate(ds: Dataset) -> None:
    problems = []
    sizes = {g: len(v) for g, v in ds.by_group().items()}
    if len(sizes) < 2:
        problems.append(f"need at least 2 groups, found {len(sizes)}")
    for g, n in sizes.items():
        if n < 2:
            problems.append(f"group {g!r} has {n} subject(s); at least 2 are required")
    if problems:
        raise DataError(problems)


def analyze(ds: Dataset, posthoc: bool = False, alpha: float = 0.05, R: int = DEFAULT_R,
            seed: int = 0, winsorize: bool = False, standardize: bool = False) -> ReportDocument:
    """Preprocess (optionally), estimate per-subject AUCs, run the F test and post hoc."""
    if winsorize or standardize:
        ds = preprocess(ds, winsorize=winsorize, standardize=standardize)
    _validate(ds)
    table = anova_auc(estimate_subjects(ds))
    ph = None
    if posthoc:
        ref = reference_distribution(len(table.per_group), R, RngStream(seed))
        ph = posthoc_pvalues(table.per_group, ref, alpha)
    prov = dict(ds.provenance)
    prov.update(posthoc=posthoc, alpha=alpha, R=R, seed=seed,
                winsorize=winsorize, standardize=standardize)
    cols = prov.get("columns", {})
    formula = f"{cols.get('value', 'Values')} ~ {cols.get('group', 'Group')}"
    return ReportDocument(table, ph, list(ds.warnings), prov, formula)


def analyze_from_provenance(prov: dict) -> ReportDocument:
    """Re-run an analysis from the provenance block of an exported report."""
    cols = prov["columns"]
    labels = prov.get("phase_labels", {})
    ds = load_csv(prov["source"], cols["value"], cols["group"], cols["subject"], cols["phase"],
                  labels.get("pre", "pre"), labels.get("post", "post"))
    return analyze(ds, posthoc=prov.get("posthoc", False), alpha=prov.get("alpha", 0.05),
                   R=prov.get("R", DEFAULT_R), seed=prov.get("seed", 0),
                   winsorize=prov.get("winsorize", False), standardize=prov.get("standardize", False))


def resampling_diagnostic(ds: Dataset, B: int, seed: int = 0) -> DiagnosticResult:
    """Permutation-plus-bootstrap null distribution of the F statistic.

    Each replicate shuffles the treatment labels across subjects (group
    sizes kept), resamples every subject's pre and post values with
    replacement, and recomputes F. The sample is compared with
    F(k - 1, n - k) through the Kolmogorov-Smirnov distance.
    """
    if B < 1:
        raise ValueError(f"B must be positive, got {B}")
    _validate(ds)
    groups = list(ds.groups)
    labels = np.array([groups.index(s.group_id) for s in ds.subjects])
    k, n = len(groups), len(ds.subjects)
    arrays = [(s.pre.values, s.post.values) for s in ds.subjects]
    f_samples = np.empty(B)
    for b in range(B):
        gen = RngStream(seed, b + 1).generator
        perm = gen.permutation(labels)
        buckets = [[] for _ in range(k)]
        for (pre, post), g in zip(arrays, perm):
            bpre = np.sort(pre[gen.integers(0, pre.size, pre.size)])
            bpost = np.sort(post[gen.integers(0, post.size, post.size)])
            buckets[g].append((bpre, bpost))
        try:
            f_samples[b] = anova_table(summaries_from_arrays(buckets)).f_stat
        except AnovaError as exc:
            raise AnovaError(f"replicate {b}: {exc}") from exc
    df = (k - 1, n - k)
    ks = ks_distance(f_samples, lambda x: f_cdf(x, *df))
    return DiagnosticResult(f_samples, ks, df)
