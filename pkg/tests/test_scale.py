import math
from fractions import Fraction

import pytest
from hypothesis import given, settings

from cepnets.scale import (
    Monomial, Posynomial, SampledNet, ScaleElement, ScaleError, declare_scale, dominates, element_values,
    frontier, geometric_schedule, in_ideal, in_ring, invert, normalize, sample, sample_gauge,
)
from generators import elements

LAM = Monomial.gauge(0, 1)


def lam(p, c=1):
    return Monomial(c, (Fraction(p),))


def poly(*terms):
    return Posynomial(tuple(terms))


# --- declaration

def test_colombeau_family(colombeau):
    assert colombeau.k == 1 and len(colombeau.schedule) == 40 and colombeau.tail == 10
    assert colombeau.schedule[-1] == 2.0 ** -40
    assert colombeau.symbolic


def test_log_family_is_valid(loglam):
    assert loglam.k == 2


def test_reversed_hierarchy_is_rejected():
    with pytest.raises(ScaleError, match=r"hierarchy violation.*log.*lambda=") as info:
        declare_scale(["1/log(1/lambda)", "lambda"], geometric_schedule(), 10)
    assert "lambda" in str(info.value)


@pytest.mark.parametrize("gauges, match", [
    (["lambda - 1/2"], "not positive"),
    (["1 + lambda"], "decreases to 0"),
    (["log(lambda)"], "not positive"),
    (["x1"], "exceeds dimension"),
])
def test_bad_gauges(gauges, match):
    with pytest.raises(Exception, match=match):
        declare_scale(gauges, geometric_schedule(), 10)


@pytest.mark.parametrize("schedule, tail", [((0.5, 0.5, 0.25), 2), ((0.5, 0.25), 3), ((2.0, 0.5), 1)])
def test_bad_schedules(schedule, tail):
    with pytest.raises(ScaleError):
        declare_scale(["lambda"], schedule, tail)


def test_geometric_schedule_rejects_ratio_one():
    with pytest.raises(ScaleError, match="ratio"):
        geometric_schedule(0.5, 1.0, 40)


# --- normal form

def test_posynomial_merges_terms():
    p = poly(lam(1, 2), lam(-1), lam(1, 3))
    assert p.terms == (lam(-1), lam(1, 5))


def test_normalize_posynomial(colombeau):
    e = normalize("lambda^(-2) + 3*lambda", colombeau)
    assert e.numerator == poly(lam(-2), lam(1, 3))
    assert e.denominator == poly(lam(0))


def test_normalize_ratio(colombeau):
    e = normalize("1/(lambda + lambda^2)", colombeau)
    assert e.numerator == poly(lam(0))
    assert e.denominator == poly(lam(1), lam(2))


@pytest.mark.parametrize("text", ["exp(-1/lambda)", "lambda - lambda^2", "sin(lambda)", "-lambda"])
def test_normalize_not_in_class(colombeau, text):
    assert normalize(text, colombeau) is None


def test_normalize_matches_reciprocal_gauge(loglam):
    e = normalize("lambda^2*log(1/lambda)", loglam)
    assert e.as_monomial() == Monomial(1, (Fraction(2), Fraction(-1)))


def test_normalize_values_agree(colombeau):
    e = normalize("(2*lambda + lambda^(1/2))/(lambda^3 + 1)", colombeau)
    direct = sample_gauge("(2*lambda + lambda^(1/2))/(lambda^3 + 1)", colombeau).values
    assert element_values(e, colombeau) == pytest.approx(direct, rel=1e-12)


# --- domination

def test_square_below_identity(colombeau):
    v = dominates(lam(2), lam(1), colombeau)
    assert v.holds and not v.numeric
    assert v.lambda0 == colombeau.schedule[0]


def test_identity_not_below_square(colombeau):
    v = dominates(lam(1), lam(2), colombeau)
    assert v.fails
    assert set(v.counterexamples) == set(colombeau.tail_schedule)


def test_log_factor_by_sampling(colombeau):
    v = dominates(sample_gauge("lambda", colombeau), sample_gauge("lambda*log(1/lambda)", colombeau), colombeau)
    assert v.holds and v.numeric
    assert v.lambda0 <= math.exp(-1)


def test_equal_leading_terms_compare_coefficients(colombeau):
    a = ScaleElement(poly(lam(1), lam(2, 5)), poly(lam(0)))
    b = ScaleElement(poly(lam(1), lam(2, 6)), poly(lam(0)))
    assert dominates(a, b, colombeau).holds
    assert dominates(b, a, colombeau).fails
    assert dominates(lam(1, 2), lam(1), colombeau).fails


def test_two_gauge_order(loglam):
    # lambda << l^5 and l^-3 * lambda << 1
    assert dominates(Monomial(1, (1, 0)), Monomial(1, (0, 5)), loglam).holds
    assert dominates(Monomial(1, (1, -3)), Monomial(1, (0, 0)), loglam).holds
    assert dominates(Monomial(1, (0, 1)), Monomial(1, (1, -4)), loglam).fails


@settings(max_examples=200, deadline=None)
@given(elements(1))
def test_reflexive(colombeau, a):
    assert dominates(a, a, colombeau).holds


@settings(max_examples=200, deadline=None)
@given(elements(2), elements(2), elements(2))
def test_transitive(loglam, a, b, c):
    if dominates(a, b, loglam).holds and dominates(b, c, loglam).holds:
        assert dominates(a, c, loglam).holds


def test_sampled_net_must_reach_the_tail(colombeau):
    short = SampledNet(colombeau.schedule[:20], (1.0,) * 20)
    with pytest.raises(ScaleError):
        dominates(short, LAM, colombeau)


# --- frontier and membership

def test_frontier_degree_one(colombeau):
    assert frontier(colombeau, 1) == [lam(-1), lam(0), lam(1)]


def test_frontier_sizes(colombeau, loglam):
    assert len(frontier(colombeau, 2)) == 5
    assert len(frontier(loglam, 1)) == 9


def test_in_ring_self_witness(colombeau):
    v = in_ring(lam(-3), colombeau, 3)
    assert v.holds and v.witness == lam(-3)


def test_in_ring_exponentially_small(catalog):
    a = sample_gauge("exp(-1/lambda)", catalog)
    v = in_ring(a, catalog, 1)
    # smallest-growth witness first; the constant 1 is a witness too
    assert v.holds and v.witness == lam(1)
    assert dominates(a, lam(0), catalog).holds


def test_in_ring_exponentially_large(catalog):
    v = in_ring(sample_gauge("exp(1/lambda)", catalog), catalog, 6)
    assert v.unknown and v.degree == 6


def test_in_ideal_exponentially_small(catalog):
    v = in_ideal(sample_gauge("exp(-1/lambda)", catalog), catalog, 10)
    assert v.holds and v.degree == 10


def test_in_ideal_fails_on_lambda(colombeau):
    v = in_ideal(lam(1), colombeau, 2)
    assert v.fails and v.failing_n == 2 and v.counterexamples


def test_zero_is_in_the_ideal(colombeau):
    zero = SampledNet(colombeau.schedule, (0.0,) * 40)
    for d in (1, 5, 25):
        assert in_ideal(zero, colombeau, d).holds


@settings(max_examples=100, deadline=None)
@given(elements(1))
def test_ideal_nets_tend_to_zero(colombeau, a):
    if in_ideal(a, colombeau, 3).holds:
        assert element_values(a, colombeau)[-1] <= colombeau.values[0, -1]


# --- inversion

def test_invert_examples():
    assert invert(LAM) == ScaleElement(poly(lam(0)), poly(lam(1)))
    e = ScaleElement(poly(lam(1), lam(2)), poly(lam(0)))
    assert invert(e) == ScaleElement(poly(lam(0)), poly(lam(1), lam(2)))


@settings(max_examples=200, deadline=None)
@given(elements(2))
def test_invert_is_an_involution(loglam, e):
    assert invert(invert(e)) == e
    assert element_values(invert(e), loglam) * element_values(e, loglam) == pytest.approx(1.0, rel=1e-9)


def test_sample_matches_values(colombeau):
    s = sample(lam(2, 3), colombeau)
    assert s.values[0] == 3 * 0.25
