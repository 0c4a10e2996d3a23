"""Overgenerated scale rings over the index set (0, 1], lambda -> 0.

Elements of the generating set are ratios of posynomials in the base gauges
g_1..g_k (positive rational coefficients, rational exponents).  Eventual
domination ``a << b`` is decided symbolically on that normal form when every
gauge vanishes along the schedule, and by tail sampling otherwise.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .expr import (
    Add, Const, Div, EvalDomainError, Expr, Lam, Mul, Pow, evaluate, parse_expr, to_text, variables,
)


class ScaleError(ValueError):
    pass


# ------------------------------------------------------------ normal form

@dataclass(frozen=True)
class Monomial:
    """c * g_1^q_1 * ... * g_k^q_k with c > 0."""

    coefficient: Fraction
    exponents: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficient", Fraction(self.coefficient))
        object.__setattr__(self, "exponents", tuple(Fraction(q) for q in self.exponents))
        if self.coefficient <= 0:
            raise ScaleError("monomial coefficient must be positive")

    @classmethod
    def gauge(cls, index: int, k: int, exponent=1) -> "Monomial":
        exps = [Fraction(0)] * k
        exps[index] = Fraction(exponent)
        return cls(Fraction(1), tuple(exps))

    @classmethod
    def one(cls, k: int) -> "Monomial":
        return cls(Fraction(1), (Fraction(0),) * k)

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.coefficient * other.coefficient,
                        tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def __pow__(self, n) -> "Monomial":
        n = Fraction(n)
        if n.denominator != 1 and self.coefficient != 1:
            raise ScaleError("fractional power of a monomial needs coefficient 1")
        coeff = self.coefficient ** n.numerator if n.denominator == 1 else Fraction(1)
        return Monomial(coeff, tuple(q * n for q in self.exponents))


@dataclass(frozen=True)
class Posynomial:
    """Finite sum of monomials, leading (fastest-growing) term first."""

    terms: tuple[Monomial, ...]

    def __post_init__(self):
        if not self.terms:
            raise ScaleError("posynomial needs at least one term")
        merged: dict[tuple, Fraction] = {}
        for m in self.terms:
            merged[m.exponents] = merged.get(m.exponents, Fraction(0)) + m.coefficient
        terms = tuple(Monomial(c, e) for e, c in sorted(merged.items()))
        object.__setattr__(self, "terms", terms)

    @classmethod
    def of(cls, *terms: Monomial) -> "Posynomial":
        return cls(tuple(terms))

    @property
    def k(self) -> int:
        return len(self.terms[0].exponents)

    def __add__(self, other: "Posynomial") -> "Posynomial":
        return Posynomial(self.terms + other.terms)

    def __mul__(self, other: "Posynomial") -> "Posynomial":
        return Posynomial(tuple(a * b for a in self.terms for b in other.terms))


@dataclass(frozen=True)
class ScaleElement:
    numerator: Posynomial
    denominator: Posynomial

    @classmethod
    def from_monomial(cls, m: Monomial) -> "ScaleElement":
        return cls(Posynomial.of(m), Posynomial.of(Monomial.one(len(m.exponents))))

    @classmethod
    def one(cls, k: int) -> "ScaleElement":
        return cls.from_monomial(Monomial.one(k))

    @property
    def k(self) -> int:
        return self.numerator.k

    def __add__(self, other: "ScaleElement") -> "ScaleElement":
        if self.denominator == other.denominator:
            return ScaleElement(self.numerator + other.numerator, self.denominator)
        return ScaleElement(self.numerator * other.denominator + other.numerator * self.denominator,
                            self.denominator * other.denominator)

    def __mul__(self, other: "ScaleElement") -> "ScaleElement":
        return ScaleElement(self.numerator * other.numerator, self.denominator * other.denominator)

    def __truediv__(self, other: "ScaleElement") -> "ScaleElement":
        return self * invert(other)

    def __pow__(self, n: int) -> "ScaleElement":
        if int(n) != n:
            raise ScaleError("only integer powers of scale elements")
        base = self if n >= 0 else invert(self)
        result = ScaleElement.one(self.k)
        for _ in range(abs(int(n))):
            result = result * base
        return result

    def as_monomial(self) -> Monomial | None:
        """The element as a single monomial, when it is one."""
        if len(self.numerator.terms) == 1 and len(self.denominator.terms) == 1:
            n, d = self.numerator.terms[0], self.denominator.terms[0]
            return Monomial(n.coefficient / d.coefficient,
                            tuple(a - b for a, b in zip(n.exponents, d.exponents)))
        return None


ScaleLike = Union[ScaleElement, Monomial]


def as_element(x: ScaleLike) -> ScaleElement:
    return ScaleElement.from_monomial(x) if isinstance(x, Monomial) else x


def invert(e: ScaleLike) -> ScaleElement:
    e = as_element(e)
    return ScaleElement(e.denominator, e.numerator)


# --------------------------------------------------------------- families

def geometric_schedule(start: float = 0.5, ratio: float = 0.5, count: int = 40) -> tuple[float, ...]:
    """start, start*ratio, ..., start*ratio^(count-1)."""
    if not 0 < start <= 1:
        raise ScaleError(f"schedule start {start} not in (0, 1]")
    if not 0 < ratio < 1:
        raise ScaleError(f"schedule ratio {ratio} not in (0, 1)")
    if count < 2:
        raise ScaleError("schedule needs at least two points")
    return tuple(start * ratio ** j for j in range(count))


@dataclass(frozen=True)
class ScaleFamily:
    """Base gauges (fastest-decaying first), a decreasing lambda schedule and
    the tail length that stands for "eventually"."""

    gauges: tuple[Expr, ...]
    schedule: tuple[float, ...]
    tail: int
    values: np.ndarray = field(repr=False, compare=False)

    @property
    def k(self) -> int:
        return len(self.gauges)

    @property
    def tail_schedule(self) -> tuple[float, ...]:
        return self.schedule[-self.tail:]

    @property
    def tail_values(self) -> np.ndarray:
        return self.values[:, -self.tail:]

    @cached_property
    def symbolic(self) -> bool:
        """Whether the lexicographic hierarchy order is meaningful: every
        gauge is below 1 and strictly decreasing on the tail."""
        tv = self.tail_values
        return bool(np.all(tv < 1) and np.all(np.diff(tv, axis=1) < 0))

    def gauge_text(self, i: int) -> str:
        return to_text(self.gauges[i])

    def with_tail(self, tail: int) -> "ScaleFamily":
        return declare_scale(self.gauges, self.schedule, tail)


def declare_scale(gauges: Sequence[Expr | str], schedule: Sequence[float], tail: int = 10) -> ScaleFamily:
    """Validate base gauges against a schedule and build the family."""
    exprs = tuple(parse_expr(g, 0) if isinstance(g, str) else g for g in gauges)
    schedule = tuple(float(s) for s in schedule)
    if not exprs:
        raise ScaleError("at least one base gauge is required")
    for g in exprs:
        if variables(g):
            raise ScaleError(f"gauge {to_text(g)} depends on x")
    if len(schedule) < 2:
        raise ScaleError("schedule needs at least two points")
    if any(not 0 < s <= 1 for s in schedule):
        raise ScaleError("schedule points must lie in (0, 1]")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ScaleError("schedule must be strictly decreasing")
    if not 1 <= tail <= len(schedule):
        raise ScaleError(f"tail {tail} must be between 1 and {len(schedule)}")

    values = np.empty((len(exprs), len(schedule)))
    for i, g in enumerate(exprs):
        for j, lam in enumerate(schedule):
            try:
                v = evaluate(g, lam)
            except EvalDomainError as err:
                raise ScaleError(f"gauge {to_text(g)} undefined at lambda={lam:.6g}: {err}") from err
            if not (v > 0 and math.isfinite(v)):
                raise ScaleError(f"gauge {to_text(g)} is not positive at lambda={lam:.6g} (value {v!r})")
            values[i, j] = v

    tv = values[:, -tail:]
    # "tends to 0" on a finite schedule: strictly decreasing on the tail and
    # at most half its first value at the end
    vanishing = [i for i in range(len(exprs))
                 if values[i, -1] <= values[i, 0] / 2 and np.all(np.diff(tv[i]) < 0)]
    if not vanishing:
        raise ScaleError("no base gauge decreases to 0 along the schedule")

    for i, j in itertools.combinations(range(len(exprs)), 2):
        for a, b in itertools.product((1, 2), repeat=2):
            bad = np.nonzero(tv[i] ** a > tv[j] ** b)[0]
            if bad.size:
                lam = schedule[len(schedule) - tail + int(bad[0])]
                raise ScaleError(
                    f"hierarchy violation: ({to_text(exprs[i])})^{a} > ({to_text(exprs[j])})^{b} "
                    f"at lambda={lam:.6g}")

    values.setflags(write=False)
    return ScaleFamily(exprs, schedule, tail, values)


# -------------------------------------------------------------- sampling

@dataclass(frozen=True)
class SampledNet:
    """A real net known only on (part of) a schedule."""

    lambdas: tuple[float, ...]
    values: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        if len(self.lambdas) != len(self.values):
            raise ScaleError("lambdas and values differ in length")

    def __abs__(self) -> "SampledNet":
        return SampledNet(self.lambdas, tuple(abs(v) for v in self.values), self.label)

    def _combine(self, other: "SampledNet", op, label: str) -> "SampledNet":
        if self.lambdas != other.lambdas:
            raise ScaleError("sampled nets live on different schedules")
        return SampledNet(self.lambdas, tuple(op(a, b) for a, b in zip(self.values, other.values)), label)

    def __add__(self, other: "SampledNet") -> "SampledNet":
        return self._combine(other, lambda a, b: a + b, f"({self.label} + {other.label})")

    def __mul__(self, other: "SampledNet") -> "SampledNet":
        return self._combine(other, lambda a, b: a * b, f"({self.label} * {other.label})")


def _monomial_values(m: Monomial, gauge_values: np.ndarray) -> np.ndarray:
    out = np.full(gauge_values.shape[1], float(m.coefficient))
    with np.errstate(over="ignore", under="ignore"):
        for q, g in zip(m.exponents, gauge_values):
            if q:
                out = out * np.power(g, float(q))
    return out


def _posynomial_values(p: Posynomial, gauge_values: np.ndarray) -> np.ndarray:
    return np.sum([_monomial_values(m, gauge_values) for m in p.terms], axis=0)


def element_values(x: ScaleLike, family: ScaleFamily, tail_only: bool = False) -> np.ndarray:
    gv = family.tail_values if tail_only else family.values
    if isinstance(x, Monomial):
        return _monomial_values(x, gv)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        return _posynomial_values(x.numerator, gv) / _posynomial_values(x.denominator, gv)


def sample(x: ScaleLike, family: ScaleFamily, label: str = "") -> SampledNet:
    return SampledNet(family.schedule, tuple(float(v) for v in element_values(x, family)), label)


def sample_gauge(g: Expr | str, family: ScaleFamily) -> SampledNet:
    """Evaluate a gauge expression at every schedule point."""
    label = g if isinstance(g, str) else to_text(g)
    if isinstance(g, str):
        g = parse_expr(g, 0)
    return SampledNet(family.schedule, tuple(evaluate(g, lam) for lam in family.schedule), label)


def _tail_samples(x, family: ScaleFamily) -> np.ndarray:
    if isinstance(x, SampledNet):
        t = family.tail
        if len(x.values) < t or tuple(x.lambdas[-t:]) != family.tail_schedule:
            raise ScaleError("sampled net does not cover the family's tail")
        return np.asarray(x.values[-t:], dtype=float)
    return element_values(x, family, tail_only=True)


# --------------------------------------------------------------- verdicts

class Status(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Verdict:
    """Outcome of an eventual-domination or membership question.

    ``numeric`` marks a Holds that rests on tail sampling only.  ``degree``
    is the frontier degree searched (membership questions) and ``failing_n``
    the first ideal exponent refuted.
    """

    status: Status
    witness: ScaleLike | None = None
    lambda0: float | None = None
    counterexamples: tuple[float, ...] = ()
    numeric: bool = False
    degree: int | None = None
    failing_n: int | None = None
    detail: str = ""

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is Status.FAILS

    @property
    def unknown(self) -> bool:
        return self.status is Status.UNKNOWN


def _eventually_le(p1: Posynomial, p2: Posynomial) -> bool:
    """p1 <= p2 as lambda -> 0 under the hierarchy order."""
    t1, t2 = p1.terms, p2.terms
    i = j = 0
    while True:
        if i == len(t1):
            return True
        if j == len(t2):
            return False
        m1, m2 = t1[i], t2[j]
        if m1.exponents != m2.exponents:
            # lexicographically smaller exponents grow faster
            return m1.exponents > m2.exponents
        if m1.coefficient != m2.coefficient:
            return m1.coefficient < m2.coefficient
        i += 1
        j += 1


def _difference_signs(p1: Posynomial, p2: Posynomial, family: ScaleFamily) -> np.ndarray:
    """Sign of p2 - p1 on the schedule, after exact cancellation of common terms."""
    diff: dict[tuple, Fraction] = {}
    for m in p2.terms:
        diff[m.exponents] = diff.get(m.exponents, Fraction(0)) + m.coefficient
    for m in p1.terms:
        diff[m.exponents] = diff.get(m.exponents, Fraction(0)) - m.coefficient
    rows = []
    for exps, c in diff.items():
        if c:
            rows.append(float(c) * _monomial_values(Monomial(1, exps), family.values))
    if not rows:
        return np.zeros(len(family.schedule))
    stacked = np.array(rows)
    return np.sign([math.fsum(col) for col in stacked.T])


def _threshold(ok: np.ndarray, schedule: Sequence[float]) -> float | None:
    """Largest schedule point from which the check holds all the way down."""
    if not ok[-1]:
        return None
    j = len(ok) - 1
    while j > 0 and ok[j - 1]:
        j -= 1
    return schedule[j]


# Relative slack for sampled comparisons: a net and its witness computed
# along different float paths (cos(0)/lambda vs lambda^-1) may differ by an ulp.
SAMPLE_SLACK = 1e-12


def dominates(a, b, family: ScaleFamily) -> Verdict:
    """Decide a << b (a <= b eventually) for scale elements or sampled nets.

    Scale elements are compared in normal form under the hierarchy order and
    the verdict is confirmed against exact-cancellation signs on the tail.
    When the two disagree the crossover lies outside the schedule and the
    answer is UNKNOWN.  Sampled nets are compared point by point on the tail.
    """
    symbolic = (not isinstance(a, SampledNet) and not isinstance(b, SampledNet)
                and family.symbolic)
    witness = None if isinstance(b, SampledNet) else b
    tail = family.tail_schedule
    if symbolic:
        ea, eb = as_element(a), as_element(b)
        p1 = ea.numerator * eb.denominator
        p2 = eb.numerator * ea.denominator
        ok = _difference_signs(p1, p2, family) >= 0
        tail_ok = ok[-family.tail:]
        bad = tuple(lam for lam, good in zip(tail, tail_ok) if not good)
        if _eventually_le(p1, p2):
            if not bad:
                return Verdict(Status.HOLDS, witness=witness, lambda0=_threshold(ok, family.schedule))
            return Verdict(Status.UNKNOWN, counterexamples=bad,
                           detail="holds asymptotically but not yet on the tail")
        if bad:
            return Verdict(Status.FAILS, counterexamples=bad)
        # the crossover lies beyond the schedule
        return Verdict(Status.UNKNOWN, detail="fails asymptotically but holds on the whole tail")
    av, bv = _tail_samples(a, family), _tail_samples(b, family)
    ok = av <= bv * (1 + SAMPLE_SLACK)
    if np.all(ok):
        return Verdict(Status.HOLDS, witness=witness, lambda0=tail[0], numeric=True)
    return Verdict(Status.FAILS, counterexamples=tuple(lam for lam, good in zip(tail, ok) if not good))


# ------------------------------------------------------ ring and ideal

def frontier(family: ScaleFamily, degree: int) -> list[Monomial]:
    """Coefficient-1 monomials with integer exponents in [-D, D]^k, largest growth first."""
    if degree < 1:
        raise ScaleError("degree must be >= 1")
    rng = range(-degree, degree + 1)
    return [Monomial(1, exps) for exps in itertools.product(rng, repeat=family.k)]


def _magnitude(a):
    return abs(a) if isinstance(a, SampledNet) else a


def in_ring(a, family: ScaleFamily, degree: int = 10) -> Verdict:
    """Semi-decide membership in the overgenerated ring: |a| << w for some
    frontier monomial w, searched from the smallest growth upward."""
    mag = _magnitude(a)
    for w in reversed(frontier(family, degree)):
        v = dominates(mag, w, family)
        if v.holds:
            return Verdict(Status.HOLDS, witness=w, lambda0=v.lambda0, numeric=v.numeric, degree=degree)
    return Verdict(Status.UNKNOWN, degree=degree,
                   detail=f"no frontier witness up to degree {degree}")


def in_ideal(a, family: ScaleFamily, degree: int = 10) -> Verdict:
    """Certify |a| << g_1^n for n = 1..D (g_1 the fastest-decaying gauge)."""
    mag = _magnitude(a)
    lambda0 = None
    numeric = False
    for n in range(1, degree + 1):
        g = Monomial.gauge(0, family.k, n)
        v = dominates(mag, g, family)
        if not v.holds:
            return Verdict(Status.FAILS, counterexamples=v.counterexamples, degree=degree, failing_n=n,
                           detail=f"not dominated by {format_monomial(g, family)}")
        numeric = numeric or v.numeric
        if v.lambda0 is not None:
            lambda0 = v.lambda0 if lambda0 is None else min(lambda0, v.lambda0)
    return Verdict(Status.HOLDS, witness=Monomial.gauge(0, family.k, degree), lambda0=lambda0,
                   numeric=numeric, degree=degree)


# ----------------------------------------------------------- normalize

def normalize(g: Expr | str, family: ScaleFamily) -> ScaleElement | None:
    """Posynomial-ratio normal form of a gauge expression in the base gauges.

    Returns None when ``g`` is not syntactically a rational function with
    positive coefficients of the base gauges.
    """
    if isinstance(g, str):
        g = parse_expr(g, 0)
    return _to_element(g, family)


def _match_gauge(e: Expr, family: ScaleFamily) -> ScaleElement | None:
    k = family.k
    for i, g in enumerate(family.gauges):
        if e == g:
            return ScaleElement.from_monomial(Monomial.gauge(i, k))
    for i, g in enumerate(family.gauges):
        if isinstance(g, Div) and g.left == Const(1) and e == g.right:
            return ScaleElement.from_monomial(Monomial.gauge(i, k, -1))
        if isinstance(g, Pow) and e == g.base:
            return ScaleElement.from_monomial(Monomial.gauge(i, k, 1 / g.exponent))
    return None


def _to_element(e: Expr, family: ScaleFamily) -> ScaleElement | None:
    hit = _match_gauge(e, family)
    if hit is not None:
        return hit
    k = family.k
    if isinstance(e, Const):
        if e.value > 0:
            return ScaleElement.from_monomial(Monomial(e.value, (0,) * k))
        return None
    if isinstance(e, (Add, Mul, Div)):
        left, right = _to_element(e.left, family), _to_element(e.right, family)
        if left is None or right is None:
            return None
        if isinstance(e, Add):
            return left + right
        if isinstance(e, Mul):
            return left * right
        return left * invert(right)
    if isinstance(e, Pow):
        base = _to_element(e.base, family)
        if base is None:
            return None
        q = e.exponent
        m = base.as_monomial()
        if m is not None and (q.denominator == 1 or m.coefficient == 1):
            return ScaleElement.from_monomial(m ** q)
        if q.denominator == 1:
            return base ** q.numerator
        return None
    # Sub, Func and bare lambda (when lambda is not a base gauge) fall outside the class
    return None


# ------------------------------------------------------------ formatting

def format_monomial(m: Monomial, family: ScaleFamily | None = None) -> str:
    parts = []
    if m.coefficient != 1 or all(q == 0 for q in m.exponents):
        parts.append(str(m.coefficient))
    for i, q in enumerate(m.exponents):
        if q == 0:
            continue
        if family is None:
            name = f"g{i + 1}"
        elif isinstance(family.gauges[i], Lam):
            name = "lambda"
        else:
            name = f"({family.gauge_text(i)})"
        if q == 1:
            parts.append(name)
        elif q > 0 and q.denominator == 1:
            parts.append(f"{name}^{q}")
        else:
            parts.append(f"{name}^({q})")
    return "*".join(parts)


def format_element(x: ScaleLike, family: ScaleFamily | None = None) -> str:
    if isinstance(x, Monomial):
        return format_monomial(x, family)
    num = " + ".join(format_monomial(m, family) for m in x.numerator.terms)
    if x.denominator == Posynomial.of(Monomial.one(x.k)):
        return num
    den = " + ".join(format_monomial(m, family) for m in x.denominator.terms)
    return f"({num})/({den})"


def scale_element_expr(x: ScaleLike, family: ScaleFamily) -> Expr:
    """Expression tree in lambda for a scale element (used in reports and tests)."""
    def mono(m: Monomial) -> Expr:
        e: Expr = Const(m.coefficient)
        for g, q in zip(family.gauges, m.exponents):
            if q:
                e = Mul(e, g if q == 1 else Pow(g, q))
        return e

    def poly(p: Posynomial) -> Expr:
        out = mono(p.terms[0])
        for m in p.terms[1:]:
            out = Add(out, mono(m))
        return out

    x = as_element(x)
    return Div(poly(x.numerator), poly(x.denominator))

