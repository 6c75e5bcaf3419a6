"""Command-line front end: ``aovauc analyze | simulate | thresholds | diagnose``.

Exit codes: 0 success, 1 usage or validation error, 2 I/O error. The
``AOVAUC_SEED`` environment variable provides the default seed.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import report
from .analysis import analyze, resampling_diagnostic
from .data import DataError, load_csv
from .inference import AnovaError
from .numerics import f_survival
from .posthoc import DEFAULT_R, critical_value
from .simulation import format_outcomes, load_scenarios, outcomes_to_csv, run_scenario, with_overrides

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _default_seed() -> int:
    raw = os.environ.get("AOVAUC_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"AOVAUC_SEED must be an integer, got {raw!r}")


def _add_data_args(p):
    p.add_argument("--data", required=True, help="long-format CSV, one measurement per row")
    p.add_argument("--value", required=True, help="column with the measurements")
    p.add_argument("--group", required=True, help="column with the treatment label")
    p.add_argument("--subject", required=True, help="column with the subject id")
    p.add_argument("--phase", required=True, help="column with the pre/post indicator")
    p.add_argument("--pre-label", default="pre")
    p.add_argument("--post-label", default="post")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aovauc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="F test (and optional post hoc) on a dataset",
                       description="ANOVA-type test of equal treatment AUCs. The random-effects line "
                                   "lists sqrt(tau^2) per group and their unweighted mean.")
    _add_data_args(a)
    a.add_argument("--posthoc", action="store_true")
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--R", type=int, default=DEFAULT_R, help="post hoc reference replicates")
    a.add_argument("--seed", type=int, default=None)
    a.add_argument("--winsorize", action="store_true", help="per-subject Hampel clipping (median +/- 3 MAD)")
    a.add_argument("--standardize", action="store_true", help="scale by each subject's pre-treatment mean/SD")
    a.add_argument("--json", type=Path, help="also write the machine-readable report here")

    s = sub.add_parser("simulate", help="run Monte Carlo scenarios from a config file")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--cell", action="append", help="run only the named scenario (repeatable)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--iterations", type=int, default=None, help="override every scenario's iterations")
    s.add_argument("--R", type=int, default=None, help="override every scenario's R_posthoc")
    s.add_argument("--ungated", action="store_true", help="run the post hoc even when the F test does not reject")
    s.add_argument("--out", type=Path, help="CSV output path")

    t = sub.add_parser("thresholds", help="post hoc critical values")
    t.add_argument("--k", type=int, nargs="+", required=True)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--R", type=int, default=DEFAULT_R)
    t.add_argument("--seed", type=int, default=None)

    d = sub.add_parser("diagnose", help="permutation + bootstrap null distribution of F")
    _add_data_args(d)
    d.add_argument("--B", type=int, required=True)
    d.add_argument("--seed", type=int, default=None)
    d.add_argument("--json", type=Path)
    return parser


def _cmd_analyze(args) -> int:
    ds = load_csv(args.data, args.value, args.group, args.subject, args.phase,
                  args.pre_label, args.post_label)
    doc = analyze(ds, posthoc=args.posthoc, alpha=args.alpha, R=args.R, seed=args.seed,
                  winsorize=args.winsorize, standardize=args.standardize)
    sys.stdout.write(report.render_report(doc))
    if args.json:
        args.json.write_text(report.dumps(doc) + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    scenarios = load_scenarios(args.config.read_text(encoding="utf-8"))
    if args.cell:
        names = {sc.name for sc in scenarios}
        unknown = [c for c in args.cell if c not in names]
        if unknown:
            raise UsageError(f"unknown cell(s): {', '.join(unknown)}; available: {', '.join(sorted(names))}")
        scenarios = [sc for sc in scenarios if sc.name in args.cell]
    outcomes = []
    for sc in scenarios:
        sc = with_overrides(sc, seed=args.seed, iterations=args.iterations, R_posthoc=args.R)
        outcomes.append(run_scenario(sc, workers=args.workers, gated=not args.ungated))
        print(f"done {sc.name}", file=sys.stderr)
    print(format_outcomes(outcomes))
    if args.out:
        args.out.write_text(outcomes_to_csv(outcomes), encoding="utf-8")
    return EXIT_OK


def _cmd_thresholds(args) -> int:
    for k in args.k:
        cv = critical_value(k, args.alpha, args.R, args.seed)
        print(f"k={k} alpha={args.alpha:g} R={args.R} seed={args.seed}: {cv:.3f}")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    ds = load_csv(args.data, args.value, args.group, args.subject, args.phase,
                  args.pre_label, args.post_label)
    res = resampling_diagnostic(ds, args.B, args.seed)
    d1, d2 = res.reference_df
    f = res.f_samples
    print(f"Resampled F statistics: B={f.size}, reference F({d1}, {d2})")
    print(f"KS distance {res.ks_distance:.4f} (1% critical value {res.ks_critical_1pct:.4f})")
    print("empirical upper-tail rates vs nominal:")
    for q in (0.10, 0.05, 0.01):
        rate = float(np.mean([f_survival(x, d1, d2) <= q for x in f]))
        print(f"  {q:.2f}: {rate:.4f}")
    if args.json:
        args.json.write_text(json.dumps({
            "B": int(f.size), "reference_df": [d1, d2], "ks_distance": res.ks_distance,
            "f_samples": f.tolist()}, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


_COMMANDS = {
    "analyze": _cmd_analyze,
    "simulate": _cmd_simulate,
    "thresholds": _cmd_thresholds,
    "diagnose": _cmd_diagnose,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "seed", None) is None and args.command != "simulate":
            args.seed = _default_seed()
        if args.command == "simulate" and args.seed is None and "AOVAUC_SEED" in os.environ:
            args.seed = _default_seed()
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (DataError, AnovaError, ValueError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
