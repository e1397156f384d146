# /core/regions.py
"""
Rate regions in the (R1, R2) plane.

A region is a list of half-planes a1*R1 + a2*R2 <= b (a1, a2, b >= 0) plus the
implicit R1, R2 >= 0. Vertices are derived on demand.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from core.channel import AssociationSchedule, ChannelParams, Scheme
from core.errors import ParameterError, RegionError

logger = logging.getLogger(__name__)

TOL = 1e-12


class Constraint(NamedTuple):
    a1: float
    a2: float
    b: float

    def value(self, r1: float, r2: float) -> float:
        return self.a1 * r1 + self.a2 * r2

    def normalized(self) -> "Constraint":
        """Scaled so the R2 coefficient is 1 (or R1 when a2 == 0)."""
        s = self.a2 if self.a2 > 0 else self.a1
        return Constraint(self.a1 / s, self.a2 / s, self.b / s)


@dataclass(frozen=True)
class RateRegion:
    name: str
    constraints: tuple[Constraint, ...]

    def __post_init__(self):
        for c in self.constraints:
            if min(c) < 0:
                raise RegionError(f"{self.name}: constraint {c} has a negative entry")
        if not any(c.a1 > 0 for c in self.constraints) or not any(c.a2 > 0 for c in self.constraints):
            raise RegionError(f"{self.name}: region is unbounded")

    def normalized_constraints(self) -> list[Constraint]:
        return sorted(c.normalized() for c in self.constraints)


@dataclass(frozen=True)
class DerivedParams:
    beta: float
    delta_bar_1: float
    delta_bar_2: float
    first_branch: bool


Point = tuple[float, float]


# ---------------- Derived quantities ----------------

def beta_threshold(params: ChannelParams) -> float:
    dn, dd = params.delta_n, params.delta_d
    return dn * (1.0 - dd) / (1.0 - dn)


def is_first_branch(params: ChannelParams) -> bool:
    return params.delta_s <= beta_threshold(params)


def beta_branches(params: ChannelParams) -> tuple[float, float]:
    dn, ds, dd = params.as_tuple()
    return ((1.0 - dd * dn) / (1.0 - dn), 1.0 + ds)


def beta(params: ChannelParams) -> float:
    first, second = beta_branches(params)
    return first if is_first_branch(params) else second


def _check_eta(name: str, eta: float) -> None:
    if not (0.0 < eta < 0.5):
        raise ParameterError(name, f"must be in (0, 1/2), got {eta}")


def delta_bars(params: ChannelParams, eta1: float, eta2: float) -> tuple[float, float]:
    _check_eta("eta1", eta1)
    _check_eta("eta2", eta2)
    dn, ds, dd = params.as_tuple()
    rest = 1.0 - eta1 - eta2
    return (
        eta1 * dd + eta2 * dn + rest * ds,
        eta1 * dn + eta2 * dd + rest * ds,
    )


def derived_params(params: ChannelParams, eta1: float, eta2: float) -> DerivedParams:
    db1, db2 = delta_bars(params, eta1, eta2)
    return DerivedParams(
        beta=beta(params), delta_bar_1=db1, delta_bar_2=db2, first_branch=is_first_branch(params)
    )


# ---------------- Regions ----------------

def _two_user(name: str, k12: float, b1: float, k21: float, b2: float) -> RateRegion:
    # R1 + k12*R2 <= b1 ; k21*R1 + R2 <= b2
    return RateRegion(name, (Constraint(1.0, k12, b1), Constraint(k21, 1.0, b2)))


def outer_region(params: ChannelParams, eta1: float, eta2: float) -> RateRegion:
    d = derived_params(params, eta1, eta2)
    return _two_user(
        "dynamic_outer", d.beta, d.beta * (1.0 - d.delta_bar_2), d.beta, d.beta * (1.0 - d.delta_bar_1)
    )


def _symmetric_erasure_region(name: str, delta: float) -> RateRegion:
    k, b = 1.0 + delta, 1.0 - delta * delta
    return _two_user(name, k, b, k, b)


def no_ris_region(params: ChannelParams) -> RateRegion:
    return _symmetric_erasure_region("noris", params.delta_n)


def neutral_region(params: ChannelParams) -> RateRegion:
    return _symmetric_erasure_region("neutral", params.delta_s)


def both_to_user_region(params: ChannelParams, user: int) -> RateRegion:
    if user not in (1, 2):
        raise ParameterError("user", f"must be 1 or 2, got {user}")
    dn, dd = params.delta_n, params.delta_d
    b = 1.0 - dd * dn
    k_weak, k_strong = b / (1.0 - dn), b / (1.0 - dd)
    if user == 1:
        return _two_user("user1", k_weak, b, k_strong, b)
    return _two_user("user2", k_strong, b, k_weak, b)


def dynamic_delta_bar(params: ChannelParams, eta: float) -> float:
    _check_eta("eta", eta)
    dn, ds, dd = params.as_tuple()
    return eta * (dd + dn) + (1.0 - 2.0 * eta) * ds


def dynamic_achievable_region(params: ChannelParams, eta: float) -> RateRegion:
    dn, dd = params.delta_n, params.delta_d
    k = (1.0 - dd * dn) / (1.0 - dn)
    b = k * (1.0 - dynamic_delta_bar(params, eta))
    return _two_user("dynamic_achievable", k, b, k, b)


def windowed_per_user_rate(params: ChannelParams, eta: float) -> float:
    """
    Per-user rate of the symmetric three-phase protocol run in nominal windows
    of eta*n, eta*n and (1-2*eta)*n slots: direct deliveries in the user's own
    window plus the combined packets the last window can carry.
    """
    _check_eta("eta", eta)
    dn, ds, dd = params.as_tuple()
    overheard = dd * (1.0 - dn) * eta
    carried = (1.0 - ds) * (1.0 - 2.0 * eta)
    return (1.0 - dd) * eta + min(overheard, carried)


def windowed_dynamic_region(params: ChannelParams, eta: float) -> RateRegion:
    """Achievable region at a fixed eta: the balanced region capped by what the windows can carry."""
    base = dynamic_achievable_region(params, eta)
    cap = Constraint(1.0, 1.0, 2.0 * windowed_per_user_rate(params, eta))
    return RateRegion("dynamic_achievable", base.constraints + (cap,))


def region_for(schedule: AssociationSchedule, params: ChannelParams) -> RateRegion:
    if schedule.scheme is Scheme.NO_RIS:
        return no_ris_region(params)
    if schedule.scheme is Scheme.NEUTRAL:
        return neutral_region(params)
    if schedule.scheme is Scheme.BOTH_TO_USER:
        return both_to_user_region(params, schedule.user)
    return outer_region(params, schedule.eta1, schedule.eta2)


# ---------------- Geometry ----------------

def _snap(x: float) -> float:
    return 0.0 if abs(x) < TOL else x + 0.0


def _all_halfplanes(region: RateRegion) -> list[Constraint]:
    # Nonnegativity as -R1 <= 0, -R2 <= 0 (only used internally)
    return list(region.constraints) + [Constraint(-1.0, 0.0, 0.0), Constraint(0.0, -1.0, 0.0)]


def contains(region: RateRegion, point: Point, tol: float = TOL) -> bool:
    r1, r2 = point
    if r1 < -tol or r2 < -tol:
        return False
    return all(c.value(r1, r2) <= c.b + tol for c in region.constraints)


def polygon(region: RateRegion) -> list[Point]:
    """Vertices in counterclockwise order, starting from the one nearest the origin."""
    planes = _all_halfplanes(region)
    points: list[Point] = []
    for c, d in itertools.combinations(planes, 2):
        A = np.array([[c.a1, c.a2], [d.a1, d.a2]])
        if abs(np.linalg.det(A)) < TOL:
            continue
        r1, r2 = np.linalg.solve(A, np.array([c.b, d.b]))
        p = (_snap(float(r1)), _snap(float(r2)))
        if not contains(region, p, tol=1e-12 * max(1.0, max(abs(p[0]), abs(p[1])))):
            continue
        if any(abs(p[0] - q[0]) <= TOL and abs(p[1] - q[1]) <= TOL for q in points):
            continue
        points.append(p)
    if len(points) < 3:
        raise RegionError(f"{region.name}: degenerate region with {len(points)} vertices")
    logger.debug("%s: %d vertices from %d half-planes", region.name, len(points), len(planes))

    cx = sum(p[0] for p in points) / len(points)
    cy = sum(p[1] for p in points) / len(points)
    points.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
    start = min(range(len(points)), key=lambda i: points[i][0] ** 2 + points[i][1] ** 2)
    return points[start:] + points[:start]


def max_weighted(region: RateRegion, w1: float, w2: float) -> Point:
    """Optimal vertex for w1*R1 + w2*R2; ties go to larger R1, then larger R2."""
    best: Point | None = None
    best_val = -math.inf
    for p in polygon(region):
        val = w1 * p[0] + w2 * p[1]
        if val > best_val + TOL:
            best, best_val = p, val
        elif abs(val - best_val) <= TOL and (p[0], p[1]) > best:
            best = p
    return best


def max_sum_rate(region: RateRegion) -> tuple[Point, float]:
    p = max_weighted(region, 1.0, 1.0)
    return p, p[0] + p[1]


def symmetric_point(region: RateRegion) -> Point:
    t = min(c.b / (c.a1 + c.a2) for c in region.constraints if c.a1 + c.a2 > 0)
    return (t, t)


def max_r1(region: RateRegion) -> float:
    return min(c.b / c.a1 for c in region.constraints if c.a1 > 0)


def max_r2(region: RateRegion) -> float:
    return min(c.b / c.a2 for c in region.constraints if c.a2 > 0)


def time_share(p: Point, q: Point, lam: float) -> Point:
    """Operate at p for a fraction lam of the block and at q for the rest."""
    if not (0.0 <= lam <= 1.0):
        raise ParameterError("lam", f"must be in [0, 1], got {lam}")
    return (lam * p[0] + (1.0 - lam) * q[0], lam * p[1] + (1.0 - lam) * q[1])
