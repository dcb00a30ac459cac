"""Renderers for experiment reports: phase table (markdown), JSON and long CSV."""

from __future__ import annotations

import csv
import io
import json

from .engine import ExperimentReport

HEADER_CORNER = "Dataset/Incremental Training"


def pct(x: float) -> str:
    return f"{100.0 * x:.2f}%"


def table_rows(r: ExperimentReport) -> list[list[str]]:
    """Header plus one row per phase test set and a final Validation row.

    The "Average/Learner" column holds the mean accuracy of the phase's new
    hypotheses; "Training i" holds the ensemble accuracy after phase i.
    """
    k = len(r.phases)
    header = [HEADER_CORNER, "Average/Learner"] + [f"Training{i}" for i in range(1, k + 1)]
    rows = [header]
    for j, p in enumerate(r.phases):
        cells = [""] * k
        cells[j] = pct(p.q_ensemble)
        rows.append([f"Q{p.phase}", pct(p.q_mean_individual)] + cells)
    v_all = [s.accuracy for p in r.phases for s in p.v_individual]
    rows.append(
        ["Validation", pct(sum(v_all) / len(v_all))] + [pct(p.v_ensemble) for p in r.phases]
    )
    return rows


def render_markdown(r: ExperimentReport) -> str:
    rows = table_rows(r)
    lines = ["| " + " | ".join(rows[0]) + " |", "|" + "---|" * len(rows[0])]
    lines += ["| " + " | ".join(row) + " |" for row in rows[1:]]
    return "\n".join(lines) + "\n"


def render_json(r: ExperimentReport) -> str:
    return json.dumps(r.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_json(text: str) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(text))


CSV_HEADER = ("phase", "metric", "subject", "set", "value")


def csv_records(r: ExperimentReport) -> list[tuple]:
    out = []
    for p in r.phases:
        q = f"Q{p.phase}"
        for s in p.q_individual:
            out.append((p.phase, "individual_accuracy", str(s.id), q, s.accuracy))
        for s in p.v_individual:
            out.append((p.phase, "individual_accuracy", str(s.id), "V", s.accuracy))
        out.append((p.phase, "mean_individual_accuracy", "ensemble", q, p.q_mean_individual))
        out.append((p.phase, "mean_individual_accuracy", "ensemble", "V", p.v_mean_individual))
        out.append((p.phase, "ensemble_accuracy", "ensemble", q, p.q_ensemble))
        out.append((p.phase, "ensemble_accuracy", "ensemble", "V", p.v_ensemble))
        if p.retention is not None:
            out.append((p.phase, "retention_accuracy", "ensemble", f"Q{p.phase - 1}", p.retention))
    return out


def render_csv(r: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for phase, metric, subject, set_name, value in csv_records(r):
        w.writerow((phase, metric, subject, set_name, repr(float(value))))
    return buf.getvalue()
