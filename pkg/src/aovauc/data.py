"""Long-format CSV ingestion and per-subject preprocessing."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .empirical import PairedSample, RealSample

__all__ = [
    "DataError",
    "DataQualityWarning",
    "Dataset",
    "load_csv",
    "winsorize_hampel",
    "standardize_by_pre",
    "preprocess",
]


class DataError(ValueError):
    """Invalid input data. ``problems`` lists every issue found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


class DataQualityWarning(UserWarning):
    pass


@dataclass
class Dataset:
    subjects: list
    groups: tuple
    provenance: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def by_group(self) -> dict:
        out = {g: [] for g in self.groups}
        for s in self.subjects:
            out[s.group_id].append(s)
        return out

    @classmethod
    def from_subjects(cls, subjects, provenance=None):
        subjects = list(subjects)
        seen = []
        for s in subjects:
            if s.group_id not in seen:
                seen.append(s.group_id)
        notes = [w for s in subjects for w in s.warnings]
        return cls(subjects, tuple(seen), dict(provenance or {}), notes)


def load_csv(path, value: str, group: str, subject: str, phase: str,
             pre_label: str = "pre", post_label: str = "post") -> Dataset:
    """Read one measurement per row into per-subject paired samples.

    Subjects appear in order of first appearance. Every problem in the file
    is collected (with its line number) and reported in a single
    ``DataError``.
    """
    path = Path(path)
    problems = []
    pre: dict = {}
    post: dict = {}
    group_of: dict = {}
    order: list = []
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in (value, group, subject, phase) if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(map(repr, missing))}; "
                            f"header has {', '.join(map(repr, header))}")
        for row in reader:
            line = reader.line_num
            sid, gid, ph, raw = row[subject], row[group], row[phase], row[value]
            try:
                x = float(raw)
            except (TypeError, ValueError):
                problems.append(f"line {line}: cannot parse {raw!r} in column {value!r} as a number")
                continue
            if not math.isfinite(x):
                problems.append(f"line {line}: non-finite value {raw!r}")
                continue
            if ph == pre_label:
                bucket = pre
            elif ph == post_label:
                bucket = post
            else:
                problems.append(f"line {line}: unknown phase {ph!r} (allowed: {pre_label!r}, {post_label!r})")
                continue
            if sid not in group_of:
                group_of[sid] = gid
                order.append(sid)
            elif group_of[sid] != gid:
                problems.append(f"line {line}: subject in two groups: {sid!r} "
                                f"under {group_of[sid]!r} and {gid!r}")
                continue
            bucket.setdefault(sid, []).append(x)
    for sid in order:
        for name, bucket in (("pre", pre), ("post", post)):
            if not bucket.get(sid):
                problems.append(f"subject {sid!r} has no {name}-treatment measurements")
    if problems:
        raise DataError(problems)
    subjects = [PairedSample(RealSample(pre[s]), RealSample(post[s]), s, group_of[s]) for s in order]
    provenance = {
        "source": str(path),
        "columns": {"value": value, "group": group, "subject": subject, "phase": phase},
        "phase_labels": {"pre": pre_label, "post": post_label},
    }
    return Dataset.from_subjects(subjects, provenance)


def winsorize_hampel(values) -> np.ndarray:
    """Clip values to median +/- 3 * MAD (unscaled MAD), preserving order.

    Examples
    --------
    >>> winsorize_hampel([1, 2, 3, 100]).tolist()
    [1.0, 2.0, 3.0, 5.5]
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("cannot winsorize an empty vector")
    med = float(np.median(x))
    mad = float(np.median(np.abs(x - med)))
    out = np.clip(x, med - 3.0 * mad, med + 3.0 * mad)
    if mad == 0.0 and np.any(out != x):
        warnings.warn("MAD is zero; values away from the median were clipped to it",
                      DataQualityWarning, stacklevel=2)
    return out


def standardize_by_pre(ps: PairedSample) -> PairedSample:
    """Centre and scale both samples by the pre-treatment mean and SD (ddof=1)."""
    if ps.m_pre < 2:
        raise DataError(f"subject {ps.subject_id!r}: need at least 2 pre-treatment values to standardize")
    mean = float(np.mean(ps.pre.values))
    sd = float(np.std(ps.pre.values, ddof=1))
    if not sd > 0:
        raise DataError(f"subject {ps.subject_id!r}: pre-treatment SD is zero")
    return replace(ps, pre=RealSample((ps.pre.values - mean) / sd),
                   post=RealSample((ps.post.values - mean) / sd))


def preprocess(ds: Dataset, winsorize: bool = False, standardize: bool = False) -> Dataset:
    """Per-subject winsorization (pre and post separately), then standardization."""
    subjects = list(ds.subjects)
    notes = list(ds.warnings)
    if winsorize:
        out = []
        for s in subjects:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DataQualityWarning)
                pre = winsorize_hampel(s.pre.values)
                post = winsorize_hampel(s.post.values)
            notes.extend(f"subject {s.subject_id!r}: {w.message}" for w in caught)
            out.append(replace(s, pre=RealSample(pre), post=RealSample(post)))
        subjects = out
    if standardize:
        problems = []
        out = []
        for s in subjects:
            try:
                out.append(standardize_by_pre(s))
            except DataError as exc:
                problems.extend(exc.problems)
        if problems:
            raise DataError(problems)
        subjects = out
    prov = dict(ds.provenance, winsorize=winsorize, standardize=standardize)
    return Dataset(subjects, ds.groups, prov, notes)
