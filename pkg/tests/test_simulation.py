import math
from pathlib import Path

import numpy as np
import pytest

from aovauc.analysis import estimate_subjects
from aovauc.data import Dataset
from aovauc.inference import anova_auc, anova_table, summaries_from_arrays
from aovauc.numerics import RngStream, normal_cdf
from aovauc.simulation import (CSV_FIELDS, SimScenario, format_outcomes, generate_dataset,
                               load_scenarios, outcomes_to_csv, posthoc_success_count,
                               run_scenario, target_mu, with_overrides)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _bisect_mu(auc):
    lo, hi = 0.0, 20.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid / math.sqrt(2)) < auc:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestTargetMu:
    @pytest.mark.parametrize("auc, expected", [(0.65, 0.544925), (0.75, 0.953873)])
    def test_values(self, auc, expected):
        assert target_mu(auc) == pytest.approx(expected, abs=1e-5)
        assert target_mu(auc) == pytest.approx(_bisect_mu(auc), abs=1e-9)

    def test_null(self):
        assert target_mu(0.5) == 0.0

    @pytest.mark.parametrize("auc", [0.49, 1.0, 1.2])
    def test_domain(self, auc):
        with pytest.raises(ValueError):
            target_mu(auc)


class TestPosthocSuccess:
    def test_all_equal_none_rejected(self):
        assert posthoc_success_count([0.65] * 4, []) == 6

    def test_one_false_rejection(self):
        assert posthoc_success_count([0.65] * 4, [(0, 1)]) == 5

    def test_model2_perfect(self):
        aucs = [0.65, 0.65, 0.7, 0.7]
        assert posthoc_success_count(aucs, [(0, 2), (0, 3), (1, 2), (1, 3)]) == 6

    def test_pair_order_ignored(self):
        aucs = [0.65, 0.65, 0.65, 0.7]
        assert posthoc_success_count(aucs, [(3, 0)]) == posthoc_success_count(aucs, [(0, 3)]) == 4


class TestScenario:
    def test_validation(self):
        with pytest.raises(ValueError):
            SimScenario(k=3, target_aucs=(0.6, 0.6))
        with pytest.raises(ValueError):
            SimScenario(n_R=1)
        with pytest.raises(ValueError):
            SimScenario(target_aucs=(0.4, 0.6, 0.6, 0.6))
        with pytest.raises(ValueError):
            SimScenario(alpha=1.0)

    def test_overrides(self):
        s = with_overrides(SimScenario(seed=3), seed=None, iterations=7)
        assert s.seed == 3 and s.iterations == 7


class TestGenerator:
    def test_mean_subject_count(self):
        s = SimScenario(k=2, n_R=25, m_N=2, m_P=2, target_aucs=(0.65, 0.65))
        counts = []
        for i in range(2000):
            ds = generate_dataset(s, RngStream(1, i + 1))
            counts.extend(sum(1 for p in ds if p.group_id == g) for g in range(2))
        assert abs(np.mean(counts) - 25) <= 0.25
        assert min(counts) >= 2

    def test_sample_sizes_at_least_two(self):
        s = SimScenario(k=2, n_R=3, m_N=2, m_P=3, target_aucs=(0.7, 0.7))
        for i in range(50):
            for p in generate_dataset(s, RngStream(2, i + 1)):
                assert p.m_pre == 2 and p.m_post >= 2

    def test_mean_auc_matches_target(self):
        s = SimScenario(k=2, n_R=200, m_N=400, m_P=400, target_aucs=(0.85, 0.85), sigma_eps=0.0)
        est = estimate_subjects(Dataset.from_subjects(generate_dataset(s, RngStream(3, 1))))
        assert abs(np.mean([e.auc for e in est]) - 0.85) <= 0.01

    def test_generate_matches_iteration_stream(self):
        s = SimScenario(k=3, n_R=6, m_N=5, m_P=7, target_aucs=(0.6, 0.7, 0.8), seed=9)
        ds = generate_dataset(s, RngStream(s.seed, 5))
        # same draws as the fast path of iteration 4
        fast = anova_table(summaries_from_arrays(_arrays_for(ds, 3)))
        slow = anova_auc(estimate_subjects(Dataset.from_subjects(ds)))
        assert fast.f_stat == pytest.approx(slow.f_stat, rel=1e-12)
        assert fast.p_value == pytest.approx(slow.p_value, rel=1e-10, abs=1e-15)


def _arrays_for(ds, k):
    groups = [[] for _ in range(k)]
    for p in ds:
        groups[p.group_id].append((p.pre.values, p.post.values))
    return groups


class TestRunScenario:
    def test_deterministic(self):
        s = SimScenario(k=3, n_R=5, m_N=5, m_P=5, target_aucs=(0.6, 0.6, 0.8), iterations=30,
                        R_posthoc=2000, seed=4)
        assert run_scenario(s) == run_scenario(s)

    def test_workers_do_not_change_result(self):
        s = SimScenario(k=3, n_R=5, m_N=5, m_P=5, target_aucs=(0.6, 0.6, 0.8), iterations=24,
                        R_posthoc=2000, seed=5)
        assert run_scenario(s, workers=2) == run_scenario(s, workers=1)

    def test_ungated_never_fewer_rejections(self):
        s = SimScenario(k=4, n_R=6, m_N=6, m_P=6, target_aucs=(0.65,) * 4, iterations=60,
                        R_posthoc=5000, seed=6)
        gated, ungated = run_scenario(s), run_scenario(s, gated=False)
        assert gated.rejection_rate == ungated.rejection_rate
        assert ungated.posthoc_any_rejection_rate >= gated.posthoc_any_rejection_rate

    @pytest.mark.slow
    def test_exact_null_calibration(self):
        s = SimScenario(k=4, n_R=15, m_N=10, m_P=10, target_aucs=(0.7,) * 4, sigma_eps=0.3,
                        iterations=800, R_posthoc=20_000, seed=7)
        out = run_scenario(s)
        se = math.sqrt(0.05 * 0.95 / s.iterations)
        assert abs(out.rejection_rate - 0.05) <= 3 * se
        sd = out.posthoc_success_sd / math.sqrt(s.iterations)
        assert out.posthoc_success_mean >= 5.9 - 3 * sd

    @pytest.mark.slow
    def test_power_increases_with_cohort_size(self):
        rates = []
        for n_r in (10, 25, 50, 80):
            s = SimScenario(k=4, n_R=n_r, m_N=10, m_P=10, target_aucs=(0.65, 0.65, 0.65, 0.7),
                            sigma_eps=0.3, iterations=200, R_posthoc=20_000, seed=8)
            rates.append(run_scenario(s).rejection_rate)
        se = math.sqrt(0.25 / 200)
        assert all(b >= a - 2 * se for a, b in zip(rates, rates[1:]))
        assert rates[-1] > rates[0] + 0.2


class TestConfig:
    TEXT = """
[DEFAULT]
alpha = 0.05
iterations = 10
seed = 3

[cell_a]
n_R = 10
m_N = 5
m_P = 6
sigma_eps = 0.6
target_aucs = 0.65, 0.7, 0.75

[cell_b]
target_aucs = 0.7 0.7
seed = 4
"""

    def test_parse(self):
        a, b = load_scenarios(self.TEXT)
        assert a.name == "cell_a" and a.k == 3 and a.m_P == 6 and a.sigma_eps == 0.6
        assert a.target_aucs == (0.65, 0.7, 0.75) and a.iterations == 10 and a.seed == 3
        assert b.k == 2 and b.seed == 4

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown key 'n_r'"):
            load_scenarios("[x]\nn_r = 10\n")

    def test_bad_value(self):
        with pytest.raises(ValueError, match="bad value"):
            load_scenarios("[x]\nn_R = ten\n")

    @pytest.mark.parametrize("name", ["null_grid.ini", "power_models.ini"])
    def test_shipped_grids(self, name):
        cells = load_scenarios((CONFIGS / name).read_text())
        assert len(cells) == 48
        assert len({c.name for c in cells}) == 48
        assert all(c.k == 4 and c.R_posthoc == 1_000_000 for c in cells)

    def test_null_grid_is_null(self):
        for c in load_scenarios((CONFIGS / "null_grid.ini").read_text()):
            assert len(set(c.target_aucs)) == 1


class TestOutput:
    def _outcomes(self):
        s = SimScenario(k=2, n_R=4, m_N=4, m_P=4, target_aucs=(0.7, 0.7), iterations=5,
                        R_posthoc=500, seed=1, name="tiny")
        return [run_scenario(s)]

    def test_csv(self):
        text = outcomes_to_csv(self._outcomes())
        lines = text.strip().split("\n")
        assert lines[0].split(",") == CSV_FIELDS
        assert lines[1].startswith("tiny,2,4,4,4,0.7 0.7,")

    def test_table(self):
        text = format_outcomes(self._outcomes())
        assert "tiny" in text and "±" in text
