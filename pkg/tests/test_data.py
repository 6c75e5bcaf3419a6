import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aovauc.data import (DataError, DataQualityWarning, Dataset, load_csv, preprocess,
                         standardize_by_pre, winsorize_hampel)
from aovauc.empirical import PairedSample, empirical_auc

HEADER = "id,trt,when,y\n"


def write(tmp_path, body, header=HEADER, name="d.csv"):
    p = tmp_path / name
    p.write_text(header + body, encoding="utf-8")
    return p


def load(path, **kw):
    return load_csv(path, "y", "trt", "id", "when", **kw)


class TestLoadCsv:
    def test_basic(self, tmp_path):
        p = write(tmp_path, "s1,A,pre,1.0\ns1,A,post,2.5\ns1,A,pre,0.5\ns2,B,post,3\ns2,B,pre,1e-1\n")
        ds = load(p)
        assert ds.groups == ("A", "B")
        s1, s2 = ds.subjects
        assert s1.pre.values.tolist() == [0.5, 1.0] and s1.post.values.tolist() == [2.5]
        assert s2.group_id == "B" and s2.pre.values.tolist() == [0.1]
        assert ds.provenance["columns"] == {"value": "y", "group": "trt", "subject": "id", "phase": "when"}
        assert ds.warnings

    def test_quoted_fields_and_bom(self, tmp_path):
        p = tmp_path / "q.csv"
        p.write_text('﻿id,trt,when,y\n"s,1","A",pre,"1.5"\n"s,1",A,post,2\n', encoding="utf-8")
        (s,) = load(p).subjects
        assert s.subject_id == "s,1" and s.pre.values.tolist() == [1.5]

    def test_remapped_phase_labels(self, tmp_path):
        p = write(tmp_path, "s1,A,0,1\ns1,A,1,2\n")
        (s,) = load(p, pre_label="0", post_label="1").subjects
        assert s.post.values.tolist() == [2.0]

    def test_unknown_phase(self, tmp_path):
        p = write(tmp_path, "s1,A,pre,1\ns1,A,mid,2\ns1,A,post,3\n")
        with pytest.raises(DataError) as info:
            load(p)
        msg = str(info.value)
        assert "line 3" in msg and "'mid'" in msg and "'pre'" in msg and "'post'" in msg

    def test_subject_in_two_groups(self, tmp_path):
        p = write(tmp_path, "s1,T1,pre,1\ns1,T1,post,2\ns1,T2,post,3\n")
        with pytest.raises(DataError, match="subject in two groups"):
            load(p)

    def test_missing_column(self, tmp_path):
        p = write(tmp_path, "s1,A,pre\n", header="id,trt,when\n")
        with pytest.raises(DataError, match="'y'"):
            load(p)

    def test_all_problems_reported(self, tmp_path):
        p = write(tmp_path, "s1,A,pre,abc\ns1,A,post,nan\ns2,A,pre,1\n")
        with pytest.raises(DataError) as info:
            load(p)
        problems = info.value.problems
        assert any("'abc'" in m for m in problems)
        assert any("non-finite" in m for m in problems)
        assert any("'s2'" in m and "post" in m for m in problems)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load(tmp_path / "absent.csv")


class TestWinsorize:
    def test_upper_clip(self):
        assert winsorize_hampel([1, 2, 3, 100]).tolist() == [1, 2, 3, 5.5]

    def test_lower_clip(self):
        # median 1.5, MAD 1.0, lower bound -1.5
        assert winsorize_hampel([-50, 1, 2, 3]).tolist() == [-1.5, 1, 2, 3]

    def test_order_preserved(self):
        assert winsorize_hampel([100, 3, 1, 2]).tolist() == [5.5, 3, 1, 2]

    def test_constant(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert winsorize_hampel([5, 5, 5, 5]).tolist() == [5, 5, 5, 5]

    def test_zero_mad_warns(self):
        with pytest.warns(DataQualityWarning):
            out = winsorize_hampel([5, 5, 5, 9])
        assert out.tolist() == [5, 5, 5, 5]

    def test_empty(self):
        with pytest.raises(ValueError):
            winsorize_hampel([])

    @settings(max_examples=200)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30))
    def test_bounds_and_idempotence(self, xs):
        x = np.array(xs)
        med = np.median(x)
        mad = np.median(np.abs(x - med))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DataQualityWarning)
            out = winsorize_hampel(x)
        assert out.shape == x.shape
        assert np.all(out >= med - 3 * mad) and np.all(out <= med + 3 * mad)
        inside = np.abs(x - med) <= 3 * mad
        assert np.array_equal(out[inside], x[inside])


class TestStandardize:
    def test_example(self):
        s = standardize_by_pre(PairedSample([0, 2], [3], "a", "A"))
        assert s.pre.values == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)], abs=1e-12)
        assert s.post.values == pytest.approx([2 / math.sqrt(2)], abs=1e-12)

    def test_identity(self):
        pre = np.array([-1.0, 0.0, 1.0])
        s = standardize_by_pre(PairedSample(pre, [0.3, 2.0], "a", "A"))
        assert np.allclose(s.pre.values, pre, atol=1e-12)
        assert np.allclose(s.post.values, [0.3, 2.0], atol=1e-12)

    def test_zero_sd(self):
        with pytest.raises(DataError, match="'flat'"):
            standardize_by_pre(PairedSample([1, 1], [2], "flat", "A"))

    def test_single_pre(self):
        with pytest.raises(DataError, match="'one'"):
            standardize_by_pre(PairedSample([1], [2], "one", "A"))

    @settings(max_examples=200)
    @given(st.lists(st.integers(-20, 20), min_size=2, max_size=12),
           st.lists(st.integers(-20, 20), min_size=1, max_size=12))
    def test_auc_unchanged(self, pre, post):
        if len(set(pre)) < 2:
            return
        ps = PairedSample(np.array(pre, float), np.array(post, float), "s", "A")
        assert empirical_auc(standardize_by_pre(ps)) == empirical_auc(ps)


class TestPreprocess:
    def _ds(self):
        rng = np.random.default_rng(1)
        subjects = [PairedSample(np.append(rng.normal(0, 1, 8), 40.0), rng.normal(1, 1, 9), f"s{i}", "A")
                    for i in range(3)]
        return Dataset.from_subjects(subjects)

    def test_noop(self):
        ds = self._ds()
        assert preprocess(ds).subjects == ds.subjects

    def test_winsorize_clips_outlier(self):
        out = preprocess(self._ds(), winsorize=True)
        assert all(s.pre.values.max() < 40 for s in out.subjects)

    def test_standardize_collects_all_failures(self):
        subjects = [PairedSample([1, 1], [2], "x", "A"), PairedSample([3, 3], [2], "y", "A"),
                    PairedSample([0, 1], [2], "z", "A")]
        with pytest.raises(DataError) as info:
            preprocess(Dataset.from_subjects(subjects), standardize=True)
        assert len(info.value.problems) == 2
