"""Asymptotic scale rings, moderate/negligible nets and the zero-order reduction check."""

from .classifier import (
    ClassificationReport, Overall, TheoremReport, combine_gauges, embedding_injectivity_check,
    equality_in_algebra, is_moderate, is_negligible, normalize_witness, taylor_derivative_bound,
    zero_order_reduction,
)
from .expr import NetExpr, differentiate, evaluate, parse_expr, to_text
from .scale import (
    Monomial, Posynomial, SampledNet, ScaleElement, ScaleFamily, Status, Verdict, declare_scale,
    dominates, frontier, geometric_schedule, in_ideal, in_ring, invert, normalize, sample, sample_gauge,
)
from .seminorm import (
    Box, Grid, SampledSeminormNet, cover_subadditivity_check, restriction_check, seminorm, seminorm_net,
)

__all__ = [
    "Box", "ClassificationReport", "Grid", "Monomial", "NetExpr", "Overall", "Posynomial",
    "SampledNet", "SampledSeminormNet", "ScaleElement", "ScaleFamily", "Status", "TheoremReport",
    "Verdict", "combine_gauges", "cover_subadditivity_check", "declare_scale", "differentiate",
    "dominates", "embedding_injectivity_check", "equality_in_algebra", "evaluate", "frontier",
    "geometric_schedule", "in_ideal", "in_ring", "invert", "is_moderate", "is_negligible",
    "normalize", "normalize_witness", "parse_expr", "restriction_check", "sample", "sample_gauge",
    "seminorm", "seminorm_net",
    "taylor_derivative_bound", "to_text", "zero_order_reduction",
]
