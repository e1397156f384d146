# /core/export.py
"""Deterministic CSV/JSON renderers for regions, planner rows and Monte Carlo summaries."""
from __future__ import annotations

import csv
import io
import json

from core.planner import FAMILY_NOTE, ComparisonRow, SweepPoint
from core.protocol import MonteCarloSummary
from core.regions import RateRegion, polygon

SCHEMA_VERSION = 1
REGION_HEADER = ["scheme", "kind", "index", "a1_or_r1", "a2_or_r2", "b"]
PLANNER_HEADER = ["sweep_value", "scheme", "max_sum_rate", "sym_r1", "sym_r2", "max_r1", "max_r2", "eta"]


def fmt(x: float | None, digits: int = 9) -> str:
    """Locale-independent %g formatting; -0 and sub-1e-12 noise print as 0."""
    if x is None:
        return ""
    x = float(x)
    if abs(x) < 1e-12:
        x = 0.0
    return f"{x:.{digits}g}"


def _writer(buf: io.StringIO, comments: list[str]) -> csv.writer:
    for line in comments:
        buf.write(f"# {line}\n")
    return csv.writer(buf, lineterminator="\n")


def regions_csv(regions: list[RateRegion], digits: int = 9) -> str:
    buf = io.StringIO()
    w = _writer(buf, [f"schema_version={SCHEMA_VERSION}"])
    w.writerow(REGION_HEADER)
    for region in regions:
        for i, c in enumerate(region.constraints):
            w.writerow([region.name, "constraint", i, fmt(c.a1, digits), fmt(c.a2, digits), fmt(c.b, digits)])
        for i, (r1, r2) in enumerate(polygon(region)):
            w.writerow([region.name, "vertex", i, fmt(r1, digits), fmt(r2, digits), ""])
    return buf.getvalue()


def _planner_rows(w: csv.writer, sweep_value: float | None, rows: list[ComparisonRow], digits: int) -> None:
    for r in rows:
        w.writerow([
            fmt(sweep_value, digits),
            r.label,
            fmt(r.max_sum_rate, digits),
            fmt(r.sym_r1, digits),
            fmt(r.sym_r2, digits),
            fmt(r.max_r1, digits),
            fmt(r.max_r2, digits),
            fmt(r.eta, digits),
        ])


def planner_csv(rows: list[ComparisonRow], digits: int = 9) -> str:
    buf = io.StringIO()
    w = _writer(buf, [f"schema_version={SCHEMA_VERSION}", FAMILY_NOTE])
    w.writerow(PLANNER_HEADER)
    _planner_rows(w, None, rows, digits)
    return buf.getvalue()


def sweep_csv(points: list[SweepPoint], param: str, digits: int = 9) -> str:
    buf = io.StringIO()
    w = _writer(buf, [f"schema_version={SCHEMA_VERSION}", f"sweep={param}", FAMILY_NOTE])
    w.writerow(PLANNER_HEADER)
    for point in points:
        _planner_rows(w, point.value, point.rows, digits)
    return buf.getvalue()


def simulation_dict(summary: MonteCarloSummary) -> dict:
    cfg = summary.config
    m1, _ = cfg.packets
    return {
        "schema_version": SCHEMA_VERSION,
        "params": {
            "delta_n": cfg.params.delta_n,
            "delta_s": cfg.params.delta_s,
            "delta_d": cfg.params.delta_d,
        },
        "eta": cfg.resolved_eta,
        "n": cfg.n,
        "m": m1,
        "trials": summary.trials,
        "per_trial": [r.to_dict() for r in summary.results],
        "mean_sum_rate": summary.mean_sum_rate,
        "std_sum_rate": summary.std_sum_rate,
        "mean_eta1": summary.mean_eta1,
        "mean_eta2": summary.mean_eta2,
    }


def simulation_json(summary: MonteCarloSummary) -> str:
    return json.dumps(simulation_dict(summary), indent=2) + "\n"
