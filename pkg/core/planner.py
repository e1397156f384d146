# /core/planner.py
"""
Scheme comparison, eta choice and parameter sweeps.

Only the implemented association family is searched: no RIS, one RIS per
user, both RISs to one user, and the dynamic association with eta1 = eta2.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Literal

import numpy as np

from core.channel import ChannelParams
from core.errors import ParameterError
from core.protocol import optimal_eta
from core.regions import (
    RateRegion,
    both_to_user_region,
    max_r1,
    max_r2,
    max_sum_rate,
    max_weighted,
    neutral_region,
    no_ris_region,
    outer_region,
    symmetric_point,
    windowed_dynamic_region,
)

logger = logging.getLogger(__name__)

FAMILY_NOTE = "search restricted to the implemented association family"
SweepParam = Literal["delta_n", "delta_s", "delta_d", "eta"]
TIE_TOL = 1e-12


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    scheme: str
    max_sum_rate: float
    sym_r1: float
    sym_r2: float
    max_r1: float
    max_r2: float
    eta: float | None
    region: RateRegion


@dataclass(frozen=True)
class Objective:
    w1: float = 1.0
    w2: float = 1.0
    name: str = "sum"

    @classmethod
    def parse(cls, text: str) -> "Objective":
        """'sum' or 'weighted:w1,w2'."""
        text = text.strip().lower()
        if text == "sum":
            return cls()
        match = re.fullmatch(r"weighted[:(]\s*([0-9.eE+-]+)\s*,\s*([0-9.eE+-]+)\s*\)?", text)
        if not match:
            raise ParameterError("objective", f"expected 'sum' or 'weighted:w1,w2', got {text!r}")
        w1, w2 = float(match.group(1)), float(match.group(2))
        if w1 < 0 or w2 < 0 or w1 + w2 == 0:
            raise ParameterError("objective", "weights must be nonnegative and not both zero")
        return cls(w1, w2, "weighted")


@dataclass(frozen=True)
class BestSchedule:
    label: str
    scheme: str
    eta: float | None
    value: float


def _row(label: str, scheme: str, region: RateRegion, eta: float | None) -> ComparisonRow:
    _, total = max_sum_rate(region)
    r1, r2 = symmetric_point(region)
    return ComparisonRow(label, scheme, total, r1, r2, max_r1(region), max_r2(region), eta, region)


def compare_all(params: ChannelParams, eta: float | None = None) -> list[ComparisonRow]:
    eta = optimal_eta(params) if eta is None else eta
    return [
        _row("noris", "noris", no_ris_region(params), None),
        _row("neutral", "neutral", neutral_region(params), None),
        _row("user1", "user1", both_to_user_region(params, 1), None),
        _row("user2", "user2", both_to_user_region(params, 2), None),
        _row("dynamic_outer", "dynamic", outer_region(params, eta, eta), eta),
        _row("dynamic_achievable", "dynamic", windowed_dynamic_region(params, eta), eta),
    ]


def best_schedule(params: ChannelParams, objective: Objective | str = "sum") -> BestSchedule:
    if isinstance(objective, str):
        objective = Objective.parse(objective)
    best: BestSchedule | None = None
    for row in compare_all(params):
        p = max_weighted(row.region, objective.w1, objective.w2)
        value = objective.w1 * p[0] + objective.w2 * p[1]
        # Strict improvement only: ties keep the earlier scheme
        if best is None or value > best.value + TIE_TOL:
            best = BestSchedule(row.label, row.scheme, row.eta, value)
    logger.info("best schedule (%s objective): %s value=%.6f", objective.name, best.label, best.value)
    return best


@dataclass(frozen=True)
class SweepPoint:
    value: float
    rows: list[ComparisonRow]


def sweep(
    params: ChannelParams,
    varying: SweepParam,
    start: float,
    stop: float,
    steps: int,
    eta: float | None = None,
) -> list[SweepPoint]:
    if steps < 2:
        raise ParameterError("steps", f"must be >= 2, got {steps}")
    lo, hi = (0.0, 0.5) if varying == "eta" else (0.0, 1.0)
    if varying not in ("delta_n", "delta_s", "delta_d", "eta"):
        raise ParameterError("param", f"cannot sweep {varying!r}")
    for name, v in (("from", start), ("to", stop)):
        if not (lo < v < hi):
            raise ParameterError(name, f"{varying} must stay in ({lo}, {hi}), got {v}")

    points = []
    for value in np.linspace(start, stop, steps):
        value = float(value)
        if varying == "eta":
            rows = compare_all(params, value)
        else:
            swept = ChannelParams(**{**params.model_dump(), varying: value})
            rows = compare_all(swept, eta)
        points.append(SweepPoint(value, rows))
    return points
