"""ANOVA-type comparison of k treatments through per-subject AUCs.

Each subject contributes pre-treatment (negative) and post-treatment
(positive) measurements; its empirical AUC and plug-in variance feed a
random-effects F test, an HSD-type post hoc procedure, and a Monte Carlo
harness for size and power studies.
"""

from .analysis import ReportDocument, analyze, resampling_diagnostic
from .data import DataError, Dataset, load_csv, standardize_by_pre, winsorize_hampel
from .empirical import (PairedSample, RealSample, StepFunction, compose_ecdf_quantile, ecdf_eval,
                        empirical_auc, quantile_eval, star_norm, subject_auc_variance)
from .inference import (AnovaError, AnovaTable, GroupSummary, QuadraticFormInput, SubjectEstimate,
                        anova_auc, between_subject_variance, centered_quadratic_form,
                        summarize_group)
from .numerics import (RngStream, f_survival, normal_cdf, normal_quantile,
                       regularized_incomplete_beta, sample_normal, sample_poisson)
from .posthoc import (PosthocTable, ReferenceDistribution, critical_value, posthoc_pvalues,
                      reference_distribution, studentized_difference)
from .simulation import (SimOutcome, SimScenario, generate_dataset, posthoc_success_count,
                         run_scenario, target_mu)

__version__ = "0.1.0"
