import math
from fractions import Fraction

import pytest
from hypothesis import given, settings

from cepnets.classifier import (
    Overall, combine_gauges, embedding_injectivity_check, equality_in_algebra, is_moderate, is_negligible,
    normalize_witness, product_net, taylor_derivative_bound, zero_order_reduction,
)
from cepnets.expr import NetExpr
from cepnets.scale import Monomial, dominates, element_values
from cepnets.seminorm import Box, Grid, seminorm
from generators import elements

K = Box(((0, 1),), "K")


def net(text, d=1):
    return NetExpr.parse(text, d)


def lam(p, c=1):
    return Monomial(c, (Fraction(p),))


# --- moderate

def test_oscillation_is_moderate(colombeau):
    rep = is_moderate(net("sin(x1/lambda)"), [K], 2, colombeau, 3)
    assert rep.overall is Overall.MODERATE
    assert rep.witnesses == [lam(0), lam(-1), lam(-2)]


def test_lambda_free_net_is_moderate(colombeau):
    rep = is_moderate(net("x1^2"), [K, Box(((-1, 0.5),))], 3, colombeau, 3)
    assert rep.overall is Overall.MODERATE
    # P_{K,0} = 1 is its own witness; the constant 2 = P_{K,1} needs lambda^-1
    # since the frontier only holds coefficient-1 monomials
    assert rep.checks[0].verdict.witness == lam(0)
    assert all(w in (lam(0), lam(-1)) for w in rep.witnesses)


def test_exponential_growth_not_certified(catalog):
    rep = is_moderate(net("exp(1/lambda)*x1"), [K], 0, catalog, 6)
    assert rep.overall is Overall.NOT_CERTIFIED
    assert rep.checks[0].verdict.unknown and rep.checks[0].verdict.degree == 6


# --- negligible

def test_zero_is_negligible(colombeau):
    rep = is_negligible(net("0"), [K], 4, colombeau)
    assert rep.overall is Overall.NEGLIGIBLE
    assert len(rep.checks) == 5


def test_damped_oscillation_is_negligible(catalog):
    rep = is_negligible(net("exp(-1/lambda)*sin(x1/lambda)"), [K], 1, catalog, 10)
    assert rep.overall is Overall.NEGLIGIBLE
    assert [c.order for c in rep.checks] == [0, 1]
    assert all(c.verdict.degree == 10 for c in rep.checks)


def test_lambda_oscillation_is_not_negligible(catalog):
    rep = is_negligible(net("lambda*sin(x1/lambda)"), [K], 0, catalog, 2)
    assert rep.overall is Overall.NOT_CERTIFIED
    assert rep.first_failure().verdict.failing_n == 2


def test_negligible_implies_moderate(catalog):
    rep = is_negligible(net("exp(-1/lambda)*(x1^2 + 1)"), [K], 2, catalog, 10)
    assert rep.overall is Overall.NEGLIGIBLE
    assert rep.ring_checks and all(c.verdict.holds for c in rep.ring_checks)
    assert is_moderate(net("exp(-1/lambda)*(x1^2 + 1)"), [K], 2, catalog, 10).overall is Overall.MODERATE


def test_ideal_times_moderate(catalog):
    u = net("exp(-1/lambda)*sin(x1/lambda)")
    v = net("cos(x1)/lambda")
    assert is_negligible(u, [K], 0, catalog, 10).overall is Overall.NEGLIGIBLE
    ring = is_moderate(v, [K], 0, catalog, 10)
    assert ring.witnesses == [lam(-1)]
    # a witness lambda^-1 costs one degree
    assert is_negligible(product_net(u, v), [K], 0, catalog, 9).overall is Overall.NEGLIGIBLE


def test_classification_arguments(colombeau):
    with pytest.raises(ValueError):
        is_moderate(net("x1"), [], 0, colombeau)
    with pytest.raises(ValueError):
        is_moderate(net("x1"), [K], -1, colombeau)


# --- proof replay

def test_zero_order_reduction_example(catalog):
    rep = zero_order_reduction(net("exp(-1/lambda)*sin(x1/lambda)"), [K], 1, catalog, 10)
    assert rep.agreement
    assert rep.moderate.overall is Overall.MODERATE and rep.c0.overall is Overall.NEGLIGIBLE
    step = rep.replay[0]
    assert step.ok and step.beta_covers
    assert all(m <= b for m, b in zip(step.measured, step.bound))


def test_reduction_aborts_without_c0(catalog):
    rep = zero_order_reduction(net("lambda*sin(x1/lambda)"), [K], 1, catalog, 10)
    assert not rep.agreement
    assert "C0" in rep.aborted and "n=2" in rep.aborted


def test_reduction_aborts_without_moderateness(catalog):
    rep = zero_order_reduction(net("exp(-1/lambda)*sin(x1*exp(1/lambda))"), [K], 1, catalog, 10)
    assert not rep.agreement
    assert rep.aborted.startswith("moderateness not certified at order 2")
    assert rep.replay == []


def test_taylor_bound_zero_net():
    assert taylor_derivative_bound(net("0"), K, 1, 0.01, 1.0, 0.3) == 0.0


def test_taylor_bound_example():
    u = net("exp(-1/lambda)*sin(x1/lambda)")
    lam_, b, beta = 0.05, 2.5e-3, 400.0
    bound = taylor_derivative_bound(u, K, 1, b, beta, lam_, Grid(2001))
    assert bound == pytest.approx(6.6e-4, rel=0.01)
    measured = seminorm(u, K, (1,), lam_, Grid(2001))
    assert measured == pytest.approx(math.exp(-20) / 0.05, rel=1e-6)
    assert measured <= bound


def test_taylor_step_too_large():
    with pytest.raises(ValueError, match="exceeds"):
        taylor_derivative_bound(net("x1"), K, 1, 0.6, 1.0, 0.5)


def test_normalize_witness(colombeau):
    one = normalize_witness(lam(0), colombeau)
    assert element_values(one, colombeau) == pytest.approx([1 / x + 1 for x in colombeau.schedule], rel=1e-14)
    w = normalize_witness(lam(-2), colombeau)
    assert dominates(w, lam(-2, 2), colombeau).holds and dominates(lam(-2), w, colombeau).holds
    values = element_values(w, colombeau)
    assert values[-1] > values[0]


def test_combine_gauges_examples(colombeau):
    half = combine_gauges(lam(1), lam(1))
    assert element_values(half, colombeau) == pytest.approx([x / 2 for x in colombeau.schedule], rel=1e-14)
    b = combine_gauges(lam(1), lam(0))
    assert dominates(b, lam(1), colombeau).holds


@settings(max_examples=200, deadline=None)
@given(elements(1), elements(1))
def test_combine_below_both(colombeau, a, c):
    b = element_values(combine_gauges(a, c), colombeau)
    av, cv = element_values(a, colombeau), element_values(c, colombeau)
    for bj, aj, cj in zip(b, av, cv):
        if math.isfinite(aj) and math.isfinite(cj) and aj > 0 and cj > 0:
            assert bj <= min(aj, cj) * (1 + 1e-12)


# --- embedding and equality

@pytest.mark.parametrize("text", ["1", "sin(x1)", "x1^2", "0"])
def test_embedding_is_injective(catalog, text):
    assert embedding_injectivity_check(net(text), [K], catalog)


def test_embedding_verdicts(catalog):
    one = is_negligible(net("1"), [K], 0, catalog).first_failure().verdict
    assert one.failing_n == 1
    sine = is_negligible(net("sin(x1)"), [K], 0, catalog).checks[0]
    assert sine.net.values[0] == pytest.approx(math.sin(1), rel=1e-12)
    assert sine.verdict.fails
    assert is_negligible(net("0"), [K], 0, catalog).overall is Overall.NEGLIGIBLE


def test_embedding_rejects_lambda():
    with pytest.raises(ValueError, match="depends on lambda"):
        embedding_injectivity_check(net("lambda*x1"), [K], None)


def test_equality_examples(catalog):
    u = net("sin(x1/lambda)")
    assert equality_in_algebra(u, net("sin(x1/lambda) + exp(-1/lambda)"), [K], 2, catalog).holds
    assert equality_in_algebra(u, u, [K], 2, catalog).holds
    v = equality_in_algebra(u, net("sin(x1/lambda) + lambda"), [K], 0, catalog)
    assert v.fails and v.failing_n == 2


def test_equality_is_symmetric(catalog):
    pairs = [("sin(x1/lambda)", "sin(x1/lambda) + exp(-1/lambda)*x1"),
             ("x1", "x1 + lambda^2"), ("cos(x1)", "cos(x1)*(1 + exp(-2/lambda))")]
    for a, b in pairs:
        ab = equality_in_algebra(net(a), net(b), [K], 1, catalog)
        ba = equality_in_algebra(net(b), net(a), [K], 1, catalog)
        assert ab.status is ba.status
