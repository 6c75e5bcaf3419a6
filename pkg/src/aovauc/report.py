"""Text and JSON rendering of analysis results."""

from __future__ import annotations

import json
import math

from .analysis import ReportDocument
from .inference import AnovaTable, GroupSummary
from .posthoc import PairComparison, PosthocTable

__all__ = [
    "P_FLOOR",
    "format_pvalue",
    "signif_code",
    "render_anova",
    "render_posthoc",
    "render_report",
    "report_to_dict",
    "report_from_dict",
    "dumps",
    "loads",
]

P_FLOOR = 2.2e-16
LEGEND = "Signif. codes:  0 `***' 0.001 `**' 0.01 `*' 0.05 `.'  0.1 ` ' 1"


def format_pvalue(p: float) -> str:
    if p < P_FLOOR:
        return "< 2.2e-16"
    if p >= 1e-4:
        return f"{p:.4f}"
    return f"{p:.3e}"


def signif_code(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    if p < 0.1:
        return "."
    return ""


def _num(x: float) -> str:
    if math.isinf(x):
        return "Inf"
    return f"{x:.2f}"


def _grid(rows: list[list[str]], right: list[bool]) -> list[str]:
    # first column left-aligned, the rest aligned per ``right``, single-space gaps
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    out = []
    for r in rows:
        cells = [r[0].ljust(widths[0])]
        for c in range(1, len(r)):
            cells.append(r[c].rjust(widths[c]) if right[c] else r[c].ljust(widths[c]))
        out.append(" ".join(cells))
    return out


def render_anova(t: AnovaTable) -> list[str]:
    rows = [
        ["", "Sum Square", "DF", "Mean Square", "F-Snedecor", "p-value", ""],
        ["Intra-group", _num(t.sse), str(t.df_sse), _num(t.mean_square_intra), _num(t.f_stat),
         format_pvalue(t.p_value), signif_code(t.p_value)],
        ["Inter-groups", _num(t.ssf), str(t.df_ssf), _num(t.mean_square_inter), "", "", ""],
        ["Total", _num(t.total), "", "", "", "", ""],
    ]
    # the signif column is padded to three characters like the header gap
    rows = [r[:-1] + [r[-1].ljust(3)] for r in rows]
    return _grid(rows, [True, True, True, True, True, True, False])


def _ph_cell(p: float, R: int) -> str:
    if p == 0.0:
        return f"< {1.0 / R:.3g}"
    return format_pvalue(p)


def render_posthoc(ph: PosthocTable, group_ids: list) -> list[str]:
    labels = [str(g) for g in group_ids]
    rows = [[""] + labels + [""]]
    for i, gi in enumerate(group_ids[:-1]):
        cells, ps = [], []
        for j, gj in enumerate(group_ids):
            if j <= i:
                cells.append("")
                continue
            p = ph.p_value(gi, gj)
            ps.append(p)
            cells.append(_ph_cell(p, ph.R))
        rows.append([labels[i]] + cells + [signif_code(min(ps))])
    rows = [r[:-1] + [r[-1].ljust(3)] for r in rows]
    return _grid(rows, [True] * (len(labels) + 1) + [False])


def render_report(doc: ReportDocument) -> str:
    mean_tau, taus = doc.tau_summary
    lines = ["Call:", doc.formula, ""]
    lines += render_anova(doc.anova)
    lines += ["---", LEGEND, ""]
    lines.append(f"Average random-effects standard error of {mean_tau:.3f} "
                 f"({', '.join(f'{t:.3f}' for t in taus)})")
    if doc.posthoc is not None:
        lines += ["", "-" * 70, "", "Post hoc test (p-values)", ""]
        lines += render_posthoc(doc.posthoc, doc.group_ids)
        lines += ["---", LEGEND]
    if doc.warnings:
        lines += ["", "Warnings:"]
        lines += [f"  - {w}" for w in doc.warnings]
    return "\n".join(lines) + "\n"


def report_to_dict(doc: ReportDocument) -> dict:
    t = doc.anova
    mean_tau, taus = doc.tau_summary
    out = {
        "formula": doc.formula,
        "anova": {
            "sse": t.sse, "df_sse": t.df_sse, "ssf": t.ssf, "df_ssf": t.df_ssf,
            "mean_square_intra": t.mean_square_intra, "mean_square_inter": t.mean_square_inter,
            "f_stat": t.f_stat, "p_value": t.p_value, "total": t.total,
        },
        "groups": [
            {"group_id": g.group_id, "n": g.n, "mean_auc": g.mean_auc, "tau2": g.tau2,
             "var_of_mean": g.var_of_mean, "subject_aucs": list(g.subject_aucs),
             "subject_variances": list(g.subject_variances)}
            for g in t.per_group
        ],
        "random_effects": {"mean_sd": mean_tau, "per_group_sd": taus},
        "posthoc": None,
        "warnings": list(doc.warnings),
        "provenance": dict(doc.provenance),
    }
    if doc.posthoc is not None:
        ph = doc.posthoc
        out["posthoc"] = {
            "alpha": ph.alpha, "critical_value": ph.critical_value, "R": ph.R,
            "pairs": [{"group_i": p.group_i, "group_j": p.group_j, "delta": p.delta,
                       "p_value": p.p_value} for p in ph.pairs],
        }
    return out


def report_from_dict(d: dict) -> ReportDocument:
    groups = tuple(
        GroupSummary(g["group_id"], g["n"], g["mean_auc"], g["tau2"], g["var_of_mean"],
                     tuple(g["subject_variances"]), tuple(g["subject_aucs"]))
        for g in d["groups"]
    )
    a = d["anova"]
    table = AnovaTable(a["sse"], a["df_sse"], a["ssf"], a["df_ssf"], a["mean_square_intra"],
                       a["mean_square_inter"], a["f_stat"], a["p_value"], groups)
    ph = None
    if d.get("posthoc"):
        p = d["posthoc"]
        pairs = tuple(PairComparison(x["group_i"], x["group_j"], x["delta"], x["p_value"])
                      for x in p["pairs"])
        ph = PosthocTable(pairs, p["alpha"], p["critical_value"], p["R"])
    return ReportDocument(table, ph, list(d.get("warnings", [])), dict(d.get("provenance", {})),
                          d.get("formula", ""))


def dumps(doc: ReportDocument) -> str:
    return json.dumps(report_to_dict(doc), indent=2)


def loads(text: str) -> ReportDocument:
    return report_from_dict(json.loads(text))
