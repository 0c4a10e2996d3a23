"""Moderate / negligible classification of function nets and the zero-order
reduction check (C^0 negligibility of a moderate net gives negligibility of
every derivative), by direct measurement and by replaying the Taylor step.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import Const, Mul, NetExpr, Sub, depends_on_lambda
from .scale import (
    Monomial, SampledNet, ScaleElement, ScaleFamily, Status, Verdict, as_element,
    element_values, in_ideal, in_ring, invert,
)
from .seminorm import Box, Grid, SampledSeminormNet, derivative_net, multi_indices, seminorm, \
    seminorm_l, seminorm_net

# Omega = R^d, so delta = min(1, dist(K, boundary)) = 1 and the fattening radius is 1/2.
DELTA = 1.0


class Overall(enum.Enum):
    MODERATE = "moderate"
    NEGLIGIBLE = "negligible"
    NOT_CERTIFIED = "not-certified"


@dataclass(frozen=True)
class OrderCheck:
    box: Box
    order: int
    net: SampledSeminormNet
    verdict: Verdict


@dataclass
class ClassificationReport:
    kind: str  # "moderate" or "negligible"
    degree: int
    checks: list[OrderCheck]
    overall: Overall
    # in_ring verdicts backing a Negligible result (N is inside M)
    ring_checks: list[OrderCheck] = field(default_factory=list)

    @property
    def witnesses(self) -> list:
        return [c.verdict.witness for c in self.checks if c.verdict.holds]

    @property
    def status(self) -> Status:
        if self.overall is not Overall.NOT_CERTIFIED:
            return Status.HOLDS
        if any(c.verdict.fails for c in self.checks):
            return Status.FAILS
        return Status.UNKNOWN

    def first_failure(self) -> OrderCheck | None:
        return next((c for c in self.checks if not c.verdict.holds), None)


def _classify(kind: str, u: NetExpr, boxes: Sequence[Box], L: int, family: ScaleFamily,
              degree: int, grid: Grid, full_schedule: bool, stop_on_failure: bool) -> ClassificationReport:
    if L < 0:
        raise ValueError("order must be >= 0")
    if not boxes:
        raise ValueError("at least one box is required")
    test = in_ring if kind == "moderate" else in_ideal
    checks: list[OrderCheck] = []
    stopped = False
    for l in range(L + 1):
        for K in boxes:
            net = seminorm_net(u, K, l, family, grid, tail_only=not full_schedule)
            checks.append(OrderCheck(K, l, net, test(net, family, degree)))
        if stop_on_failure and not all(c.verdict.holds for c in checks):
            stopped = True
            break
    checks.sort(key=lambda c: (boxes.index(c.box), c.order))
    ok = not stopped and all(c.verdict.holds for c in checks)
    if not ok:
        overall = Overall.NOT_CERTIFIED
    else:
        overall = Overall.MODERATE if kind == "moderate" else Overall.NEGLIGIBLE
    report = ClassificationReport(kind, degree, checks, overall)
    if kind == "negligible" and ok:
        report.ring_checks = [OrderCheck(c.box, c.order, c.net, in_ring(c.net, family, degree))
                              for c in checks]
    return report


def is_moderate(u: NetExpr, boxes: Sequence[Box], L: int, family: ScaleFamily, degree: int = 10,
                grid: Grid = Grid(), full_schedule: bool = False,
                stop_on_failure: bool = False) -> ClassificationReport:
    """Every P_{K,l}(u), K in boxes, l <= L, in the ring (up to frontier degree D)."""
    return _classify("moderate", u, list(boxes), L, family, degree, grid, full_schedule, stop_on_failure)


def is_negligible(u: NetExpr, boxes: Sequence[Box], L: int, family: ScaleFamily, degree: int = 10,
                  grid: Grid = Grid(), full_schedule: bool = False,
                  stop_on_failure: bool = False) -> ClassificationReport:
    """Every P_{K,l}(u), K in boxes, l <= L, in the canonical ideal (to degree D)."""
    return _classify("negligible", u, list(boxes), L, family, degree, grid, full_schedule, stop_on_failure)


# ---------------------------------------------------------- proof replay

def normalize_witness(beta: ScaleElement | Monomial, family: ScaleFamily) -> ScaleElement:
    """g_1^-1 + beta: still dominates beta, and tends to +infinity."""
    return invert(Monomial.gauge(0, family.k)) + as_element(beta)


def combine_gauges(a: ScaleElement | Monomial, c: ScaleElement | Monomial) -> ScaleElement:
    """a*c / (a + c), which sits below both a and c."""
    a, c = as_element(a), as_element(c)
    return ScaleElement(a.numerator * c.numerator,
                        a.numerator * c.denominator + c.numerator * a.denominator)


def taylor_derivative_bound(u: NetExpr, K: Box, axis: int, b: float, beta: float, lam: float,
                            grid: Grid = Grid()) -> float:
    """2 (beta/b) P_{L,0}(u) + (b/beta)/2 P_{L,2}(u) with L = K fattened by delta/2.

    With step h = b/beta <= delta/2 every x + h e_i (x in K) stays in L, and
    Taylor's formula bounds |d_i u| on K by this quantity.
    """
    if not 1 <= axis <= u.dimension:
        raise ValueError(f"axis {axis} outside 1..{u.dimension}")
    if b <= 0 or beta <= 0:
        raise ValueError("b and beta must be positive")
    step = b / beta
    if step > DELTA / 2:
        raise ValueError(f"step b/beta = {step:.6g} exceeds delta/2 = {DELTA / 2:g}")
    fat = K.fattened(DELTA / 2)
    p0 = seminorm_l(u, fat, 0, lam, grid)
    p2 = seminorm_l(u, fat, 2, lam, grid)
    return 2.0 * (beta / b) * p0 + 0.5 * step * p2


@dataclass
class ReplayStep:
    """One Taylor step: bound d_axis(d^alpha u) on K from d^alpha u on the fattened box."""

    box: Box
    order: int
    alpha: tuple[int, ...]
    axis: int
    beta: ScaleElement | None = None
    c: Monomial | None = None
    b: ScaleElement | None = None
    step_ok: bool = False
    beta_covers: bool = False
    sharpened: bool = False
    measured: tuple[float, ...] = ()
    bound: tuple[float, ...] = ()
    dominated: bool = False
    bound_verdict: Verdict | None = None
    failure: str = ""

    @property
    def ok(self) -> bool:
        return (not self.failure and self.step_ok and self.dominated
                and self.bound_verdict is not None and self.bound_verdict.holds)


@dataclass
class TheoremReport:
    net: str
    degree: int
    order: int
    moderate: ClassificationReport | None = None
    c0: ClassificationReport | None = None
    direct: ClassificationReport | None = None
    replay: list[ReplayStep] = field(default_factory=list)
    aborted: str = ""

    @property
    def agreement(self) -> bool:
        if self.aborted or self.direct is None:
            return False
        direct_ok = all(c.verdict.holds for c in self.direct.checks if c.order >= 1)
        return direct_ok and bool(self.replay) and all(s.ok for s in self.replay)

    @property
    def status(self) -> Status:
        if self.agreement:
            return Status.HOLDS
        if self.moderate is not None and self.moderate.overall is Overall.NOT_CERTIFIED \
                and not (self.c0 is not None and self.c0.status is Status.FAILS):
            return Status.UNKNOWN
        return Status.FAILS


def _replay_step(u: NetExpr, K: Box, order: int, alpha: tuple[int, ...], axis: int,
                 family: ScaleFamily, degree: int, grid: Grid) -> ReplayStep:
    step = ReplayStep(K, order, alpha, axis)
    v = derivative_net(u, alpha)
    fat = K.fattened(DELTA / 2)
    tail = family.tail_schedule

    p2 = seminorm_net(v, fat, 2, family, grid, tail_only=True)
    ring = in_ring(p2, family, degree)
    if not ring.holds:
        step.failure = f"no moderateness witness for P[L,2] up to degree {degree}"
        return step
    step.beta = normalize_witness(ring.witness, family)

    p0 = seminorm_net(v, fat, 0, family, grid, tail_only=True)
    ideal = in_ideal(p0, family, degree)
    if not ideal.holds:
        step.failure = f"P[L,0] not in the ideal (fails at n={ideal.failing_n})"
        return step
    step.c = Monomial.gauge(0, family.k, ideal.degree)
    step.b = combine_gauges(Monomial.gauge(0, family.k), step.c)

    b = element_values(step.b, family, tail_only=True)
    beta = element_values(step.beta, family, tail_only=True)
    p0v, p2v = np.asarray(p0.values), np.asarray(p2.values)
    step.step_ok = bool(np.all(b / beta <= DELTA / 2))
    step.beta_covers = bool(np.all(beta >= p2v))
    step.sharpened = bool(np.all(p0v <= 0.25 * b * b / beta))
    if not step.step_ok:
        step.failure = "step b/beta exceeds delta/2 on the tail"
        return step

    e_i = tuple(1 if j == axis - 1 else 0 for j in range(u.dimension))
    step.measured = tuple(seminorm(v, K, e_i, lam, grid) for lam in tail)
    step.bound = tuple(2.0 * (bj / bb) * q0 + 0.5 * (bb / bj) * q2
                       for bb, bj, q0, q2 in zip(b, beta, p0v, p2v))
    step.dominated = all(m <= bd for m, bd in zip(step.measured, step.bound))
    step.bound_verdict = in_ideal(SampledNet(tail, step.bound, "taylor bound"), family, degree)
    return step


def zero_order_reduction(u: NetExpr, boxes: Sequence[Box], L: int, family: ScaleFamily,
                         degree: int = 10, grid: Grid = Grid(), full_schedule: bool = False) -> TheoremReport:
    """Check that a moderate, C^0-negligible net is negligible at orders 1..L.

    Hypotheses: moderateness up to order L+2 and P_{K,0} in the ideal.  If one
    fails the report is aborted.  Otherwise each order is checked directly and
    by the Taylor replay on K fattened by delta/2.
    """
    boxes = list(boxes)
    report = TheoremReport(str(u), degree, L)
    report.moderate = is_moderate(u, boxes, L + 2, family, degree, grid, full_schedule, stop_on_failure=True)
    report.c0 = is_negligible(u, boxes, 0, family, degree, grid, full_schedule)
    reasons = []
    if report.moderate.overall is not Overall.MODERATE:
        bad = report.moderate.first_failure()
        reasons.append(f"moderateness not certified at order {bad.order} on {bad.box} (degree {degree})")
    if report.c0.overall is not Overall.NEGLIGIBLE:
        bad = report.c0.first_failure()
        reasons.append(f"C0 estimate fails on {bad.box} at n={bad.verdict.failing_n}")
    if reasons:
        report.aborted = "; ".join(reasons)
        return report

    report.direct = is_negligible(u, boxes, L, family, degree, grid, full_schedule)
    for K in boxes:
        for order in range(1, L + 1):
            for alpha in multi_indices(u.dimension, order - 1):
                for axis in range(1, u.dimension + 1):
                    report.replay.append(_replay_step(u, K, order, alpha, axis, family, degree, grid))
    return report


# ------------------------------------------------- embedding and equality

def embedding_injectivity_check(f: NetExpr, boxes: Sequence[Box], family: ScaleFamily, degree: int = 10,
                                grid: Grid = Grid()) -> bool:
    """The constant net (f) is certified negligible only when f vanishes on every box."""
    if depends_on_lambda(f.expr):
        raise ValueError(f"{f} depends on lambda")
    report = is_negligible(f, boxes, 0, family, degree, grid)
    lam = family.schedule[0]
    vanishes = all(seminorm(f, K, (0,) * f.dimension, lam, grid) == 0 for K in boxes)
    return report.overall is not Overall.NEGLIGIBLE or vanishes


def difference_net(u: NetExpr, v: NetExpr) -> NetExpr:
    if u.dimension != v.dimension:
        raise ValueError("nets of different dimensions")
    return NetExpr(Sub(u.expr, v.expr), u.dimension)


def equality_in_algebra(u: NetExpr, v: NetExpr, boxes: Sequence[Box], L: int, family: ScaleFamily,
                        degree: int = 10, grid: Grid = Grid()) -> Verdict:
    """[u] = [v] in the factor algebra iff u - v is negligible."""
    report = is_negligible(difference_net(u, v), boxes, L, family, degree, grid)
    if report.overall is Overall.NEGLIGIBLE:
        return Verdict(Status.HOLDS, degree=degree,
                       lambda0=min((c.verdict.lambda0 for c in report.checks), default=None))
    bad = report.first_failure()
    return Verdict(Status.FAILS, counterexamples=bad.verdict.counterexamples, degree=degree,
                   failing_n=bad.verdict.failing_n,
                   detail=f"difference not negligible on {bad.box} at order {bad.order}")


def product_net(u: NetExpr, v: NetExpr) -> NetExpr:
    return NetExpr(Mul(u.expr, v.expr), u.dimension)


def scaled_net(u: NetExpr, c: Fraction) -> NetExpr:
    return NetExpr(Mul(Const(Fraction(c)), u.expr), u.dimension)
