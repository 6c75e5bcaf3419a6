"""Monte Carlo size and power studies.

Data follow a binormal model: pre-treatment values are N(0, 1) and
post-treatment values N(mu_i + eps_ij, 1), where ``mu_i`` is chosen so the
treatment AUC is ``Phi(mu_i / sqrt(2))`` and ``eps_ij`` is a subject random
effect. Cohort and sample sizes are ``Poisson(expected - 2) + 2``.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .empirical import PairedSample
from .inference import AnovaError, anova_table, summaries_from_arrays
from .numerics import RngStream, normal_quantile
from .posthoc import DEFAULT_R, ReferenceDistribution, reference_distribution, studentized_difference

__all__ = [
    "SimScenario",
    "SimOutcome",
    "target_mu",
    "generate_dataset",
    "run_scenario",
    "posthoc_success_count",
    "load_scenarios",
    "outcomes_to_csv",
    "format_outcomes",
]

# stream 0 is reserved for the post hoc reference distribution
_REFERENCE_STREAM = 0


@dataclass(frozen=True)
class SimScenario:
    k: int = 4
    n_R: int = 25
    m_N: int = 25
    m_P: int = 25
    target_aucs: tuple = (0.65, 0.65, 0.65, 0.65)
    sigma_eps: float = 0.3
    alpha: float = 0.05
    iterations: int = 5000
    R_posthoc: int = DEFAULT_R
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "target_aucs", tuple(float(a) for a in self.target_aucs))
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if len(self.target_aucs) != self.k:
            raise ValueError(f"expected {self.k} target AUCs, got {len(self.target_aucs)}")
        for key in ("n_R", "m_N", "m_P"):
            if getattr(self, key) < 2:
                raise ValueError(f"{key} must be at least 2, got {getattr(self, key)}")
        for a in self.target_aucs:
            if not (0.5 <= a < 1.0):
                raise ValueError(f"target AUC {a} outside [0.5, 1)")
        if self.sigma_eps < 0:
            raise ValueError("sigma_eps must be non-negative")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.iterations < 1 or self.R_posthoc < 1:
            raise ValueError("iterations and R_posthoc must be positive")


@dataclass(frozen=True)
class SimOutcome:
    rejection_rate: float
    posthoc_success_mean: float
    posthoc_success_sd: float
    iterations_run: int
    scenario: SimScenario
    posthoc_any_rejection_rate: float = 0.0


def target_mu(auc: float) -> float:
    """Binormal location shift giving ``auc`` for N(0,1) against N(mu,1)."""
    if not (0.5 <= auc < 1.0):
        raise ValueError(f"AUC must lie in [0.5, 1), got {auc}")
    if auc == 0.5:
        return 0.0
    return math.sqrt(2.0) * normal_quantile(auc)


def _draw_arrays(s: SimScenario, gen: np.random.Generator, mus: Sequence[float]):
    # yields (group index, sorted pre, sorted post) for every simulated subject
    for i, mu in enumerate(mus):
        n_subj = int(gen.poisson(s.n_R - 2)) + 2
        m_pre = gen.poisson(s.m_N - 2, n_subj) + 2
        m_post = gen.poisson(s.m_P - 2, n_subj) + 2
        eps = gen.normal(0.0, s.sigma_eps, n_subj) if s.sigma_eps > 0 else np.zeros(n_subj)
        for j in range(n_subj):
            pre = np.sort(gen.standard_normal(m_pre[j]))
            post = np.sort(gen.standard_normal(m_post[j]) + (mu + eps[j]))
            yield i, pre, post


def generate_dataset(s: SimScenario, rng: RngStream) -> list[PairedSample]:
    """One simulated study as a flat list of subjects (group ids are 0..k-1)."""
    mus = [target_mu(a) for a in s.target_aucs]
    out = []
    counters = [0] * s.k
    for i, pre, post in _draw_arrays(s, rng.generator, mus):
        out.append(PairedSample(pre, post, subject_id=f"g{i}s{counters[i]}", group_id=i))
        counters[i] += 1
    return out


def posthoc_success_count(true_aucs: Sequence[float], decisions: Iterable[tuple]) -> int:
    """Pairs classified correctly: equal and not rejected, or different and rejected.

    ``decisions`` holds the rejected pairs as index tuples ``(i, j)``.
    """
    rejected = {tuple(sorted(p)) for p in decisions}
    k = len(true_aucs)
    good = 0
    for i, j in combinations(range(k), 2):
        equal = true_aucs[i] == true_aucs[j]
        if equal != ((i, j) in rejected):
            good += 1
    return good


def _one_iteration(s: SimScenario, index: int, mus, ref: ReferenceDistribution, gated: bool):
    gen = RngStream(s.seed, index + 1).generator
    groups = [[] for _ in range(s.k)]
    for i, pre, post in _draw_arrays(s, gen, mus):
        groups[i].append((pre, post))
    try:
        summaries = summaries_from_arrays(groups)
        table = anova_table(summaries)
    except AnovaError as exc:
        raise RuntimeError(f"iteration {index} of scenario {s.name or asdict(s)} failed: {exc}") from exc
    reject = table.p_value <= s.alpha
    rejected_pairs = []
    if reject or not gated:
        for (i, gi), (j, gj) in combinations(enumerate(summaries), 2):
            delta = studentized_difference(gi, gj)
            if ref.tail_probability(delta) <= s.alpha:
                rejected_pairs.append((i, j))
    success = posthoc_success_count(s.target_aucs, rejected_pairs)
    return reject, success, bool(rejected_pairs)


def _run_chunk(args):
    s, start, stop, gated = args
    mus = [target_mu(a) for a in s.target_aucs]
    ref = reference_distribution(s.k, s.R_posthoc, RngStream(s.seed, _REFERENCE_STREAM))
    return [_one_iteration(s, i, mus, ref, gated) for i in range(start, stop)]


def run_scenario(s: SimScenario, workers: int = 1, gated: bool = True) -> SimOutcome:
    """Estimate rejection rate and post hoc pair-classification success.

    Iteration ``i`` draws from substream ``i + 1`` of the scenario seed, so
    the outcome does not depend on ``workers``. With ``gated=True`` the post
    hoc test only runs after the global test rejects and every pair counts as
    not rejected otherwise; ``gated=False`` runs it on every iteration.
    """
    n = s.iterations
    if workers <= 1:
        results = _run_chunk((s, 0, n, gated))
    else:
        step = math.ceil(n / (workers * 4))
        jobs = [(s, a, min(n, a + step), gated) for a in range(0, n, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for chunk in pool.map(_run_chunk, jobs) for r in chunk]
    rejects = np.array([r[0] for r in results], dtype=float)
    success = np.array([r[1] for r in results], dtype=float)
    any_pair = np.array([r[2] for r in results], dtype=float)
    sd = float(success.std(ddof=1)) if n > 1 else 0.0
    return SimOutcome(float(rejects.mean()), float(success.mean()), sd, n, s, float(any_pair.mean()))


_INT_KEYS = {"k", "n_R", "m_N", "m_P", "iterations", "R_posthoc", "seed"}
_FLOAT_KEYS = {"sigma_eps", "alpha"}


def _parse_block(name: str, section) -> SimScenario:
    known = {f.name for f in fields(SimScenario)}
    kwargs = {"name": name}
    for key, raw in section.items():
        if key not in known or key == "name":
            raise ValueError(f"[{name}] unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            else:
                kwargs[key] = tuple(float(t) for t in raw.replace(",", " ").split())
        except ValueError as exc:
            raise ValueError(f"[{name}] bad value for {key}: {raw!r}") from exc
    if "target_aucs" in kwargs and "k" not in kwargs:
        kwargs["k"] = len(kwargs["target_aucs"])
    return SimScenario(**kwargs)


def load_scenarios(text: str) -> list[SimScenario]:
    """Parse scenario blocks.

    One ``[name]`` block per scenario with ``key = value`` lines using the
    ``SimScenario`` field names; ``target_aucs`` is a comma or space separated
    list. Keys in a ``[DEFAULT]`` block apply to every scenario.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)
    return [_parse_block(name, parser[name]) for name in parser.sections()]


CSV_FIELDS = ["name", "k", "n_R", "m_N", "m_P", "target_aucs", "sigma_eps", "alpha",
              "iterations", "R_posthoc", "seed", "rejection_rate",
              "posthoc_success_mean", "posthoc_success_sd"]


def outcomes_to_csv(outcomes: Sequence[SimOutcome]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for o in outcomes:
        s = o.scenario
        writer.writerow([s.name, s.k, s.n_R, s.m_N, s.m_P,
                         " ".join(f"{a:g}" for a in s.target_aucs), s.sigma_eps, s.alpha,
                         o.iterations_run, s.R_posthoc, s.seed, repr(o.rejection_rate),
                         repr(o.posthoc_success_mean), repr(o.posthoc_success_sd)])
    return buf.getvalue()


def format_outcomes(outcomes: Sequence[SimOutcome]) -> str:
    w = max([len("scenario")] + [len(o.scenario.name) for o in outcomes]) + 2
    head = f"{'scenario':<{w}}{'n_R':>5}{'m_N':>5}{'m_P':>5}{'sig_eps':>8}  {'AUCs':<24}{'AV (%)':>8}  PH"
    lines = [head, "-" * len(head)]
    for o in outcomes:
        s = o.scenario
        aucs = "/".join(f"{a:g}" for a in s.target_aucs)
        lines.append(f"{s.name:<{w}}{s.n_R:>5}{s.m_N:>5}{s.m_P:>5}{s.sigma_eps:>8.2f}  {aucs:<24}"
                     f"{100 * o.rejection_rate:>8.2f}  {o.posthoc_success_mean:.2f}"
                     f"\u00b1{o.posthoc_success_sd:.2f}")
    return "\n".join(lines)


def with_overrides(s: SimScenario, **kw) -> SimScenario:
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(s, **kw)
