"""Seminorms P_{K,l}(u) = sup_{|alpha| <= l} sup_{x in K} |d^alpha u(x)| on boxes.

Suprema are taken over a uniform grid, so every value is a lower bound of
the true supremum.  Grid points are placed at a + (b - a) * (k / (n - 1)),
which makes the grid for ``2n - 1`` points an exact superset of the grid for
``n`` points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .expr import EvalDomainError, Expr, NetExpr, differentiate, evaluate_many
from .scale import SampledNet, ScaleFamily

CHUNK = 1 << 15


@dataclass(frozen=True)
class Box:
    """Closed box [a_1, b_1] x ... x [a_d, b_d]."""

    intervals: tuple[tuple[float, float], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        intervals = tuple((float(a), float(b)) for a, b in self.intervals)
        if not intervals:
            raise ValueError("box needs at least one interval")
        for a, b in intervals:
            if not (np.isfinite(a) and np.isfinite(b)) or a > b:
                raise ValueError(f"bad interval [{a}, {b}]")
        object.__setattr__(self, "intervals", intervals)

    @classmethod
    def cube(cls, a: float, b: float, d: int, name: str = "") -> "Box":
        return cls(((a, b),) * d, name)

    @property
    def d(self) -> int:
        return len(self.intervals)

    def contains(self, other: "Box") -> bool:
        return other.d == self.d and all(
            a1 <= a2 and b2 <= b1 for (a1, b1), (a2, b2) in zip(self.intervals, other.intervals))

    def fattened(self, r: float) -> "Box":
        """The box grown by r on every side (sup-norm ball of radius r around it)."""
        return Box(tuple((a - r, b + r) for a, b in self.intervals),
                   f"{self.name}+{r:g}" if self.name else "")

    def points(self, grid: "Grid") -> np.ndarray:
        axes = [axis_points(a, b, grid.n) for a, b in self.intervals]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        lo = np.array([a for a, _ in self.intervals])
        hi = np.array([b for _, b in self.intervals])
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def __str__(self) -> str:
        body = " x ".join(f"[{a:g}, {b:g}]" for a, b in self.intervals)
        return f"{self.name}={body}" if self.name else body


@dataclass(frozen=True)
class Grid:
    n: int = 401

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("a grid needs at least 2 points per axis")

    def refined(self) -> "Grid":
        """Halve the spacing; the result contains every current point."""
        return Grid(2 * self.n - 1)


def axis_points(a: float, b: float, n: int) -> np.ndarray:
    return a + (b - a) * (np.arange(n) / (n - 1))


@dataclass(frozen=True)
class SampledSeminormNet(SampledNet):
    """(P_{K,l}(u_lambda))_lambda on a schedule, with its provenance."""

    box: Box | None = None
    order: int | None = None
    net: str = ""

    def __post_init__(self):
        super().__post_init__()
        if any(v < 0 for v in self.values):
            raise ValueError("seminorm values are nonnegative")


def multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    """All alpha in N^d with |alpha| == order, lexicographically descending."""
    return [a for a in itertools.product(range(order, -1, -1), repeat=d) if sum(a) == order]


@lru_cache(maxsize=4096)
def partial_expr(u: NetExpr, alpha: tuple[int, ...]) -> Expr:
    """d^alpha u, built by differentiating d^(alpha - e_i) for the last nonzero i."""
    if not any(alpha):
        return u.expr
    i = max(j for j, a in enumerate(alpha) if a)
    parent = list(alpha)
    parent[i] -= 1
    return differentiate(partial_expr(u, tuple(parent)), i + 1)


def derivative_net(u: NetExpr, alpha: Sequence[int]) -> NetExpr:
    return NetExpr(partial_expr(u, tuple(alpha)), u.dimension)


def _pointwise_max_abs(exprs: Sequence[Expr], lam: float, pts: np.ndarray) -> np.ndarray:
    """max over exprs of |e(lam, x)| for every row x of pts (chunked)."""
    out = np.zeros(len(pts))
    for start in range(0, len(pts), CHUNK):
        chunk = pts[start:start + CHUNK]
        try:
            values = evaluate_many(exprs, lam, chunk)
        except EvalDomainError as err:
            point = tuple(float(c) for c in chunk[err.index])
            err.point = point
            err.args = (f"{err.args[0]} at x={point}, lambda={lam!r}",)
            raise
        out[start:start + CHUNK] = np.max(np.abs(values), axis=0)
    return out


def _check_dims(u: NetExpr, K: Box):
    if K.d != u.dimension:
        raise ValueError(f"box of dimension {K.d} for a net of dimension {u.dimension}")


@lru_cache(maxsize=65536)
def _order_sup(u: NetExpr, K: Box, order: int, lam: float, n: int) -> float:
    """max_{|alpha| == order} P_{K,alpha}(u_lam) on the n-point grid."""
    exprs = [partial_expr(u, a) for a in multi_indices(u.dimension, order)]
    return float(np.max(_pointwise_max_abs(exprs, lam, K.points(Grid(n)))))


def seminorm(u: NetExpr, K: Box, alpha: Sequence[int], lam: float, grid: Grid = Grid()) -> float:
    """P_{K,alpha}(u_lam) = max over grid points of |d^alpha u(lam, x)|."""
    _check_dims(u, K)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != u.dimension or any(a < 0 for a in alpha):
        raise ValueError(f"bad multi-index {alpha}")
    if not 0 < lam <= 1:
        raise ValueError(f"lambda={lam} outside (0, 1]")
    return float(np.max(_pointwise_max_abs([partial_expr(u, alpha)], lam, K.points(grid))))


def seminorm_l(u: NetExpr, K: Box, l: int, lam: float, grid: Grid = Grid()) -> float:
    """P_{K,l}(u_lam) = max_{|alpha| <= l} P_{K,alpha}(u_lam)."""
    _check_dims(u, K)
    if l < 0:
        raise ValueError("order must be >= 0")
    return max(_order_sup(u, K, j, float(lam), grid.n) for j in range(l + 1))


def seminorm_net(u: NetExpr, K: Box, l: int, family: ScaleFamily, grid: Grid = Grid(),
                 tail_only: bool = False) -> SampledSeminormNet:
    """P_{K,l}(u_lambda) at every schedule point (or only on the tail)."""
    lambdas = family.tail_schedule if tail_only else family.schedule
    values = tuple(seminorm_l(u, K, l, lam, grid) for lam in lambdas)
    return SampledSeminormNet(tuple(lambdas), values, label=f"P[{K.name or K},{l}]({u})",
                              box=K, order=l, net=str(u))


@dataclass(frozen=True)
class RestrictedNet:
    """u viewed as an element of E(domain)."""

    net: NetExpr
    domain: Box


def restrict(u: NetExpr, domain: Box) -> RestrictedNet:
    _check_dims(u, domain)
    return RestrictedNet(u, domain)


def restricted_seminorm(r: RestrictedNet, K: Box, l: int, lam: float, grid: Grid = Grid()) -> float:
    if not r.domain.contains(K):
        raise ValueError(f"{K} is not inside the domain {r.domain}")
    return _sup_on_points(r.net, K.points(grid), l, lam)


def _sup_on_points(u: NetExpr, pts: np.ndarray, l: int, lam: float) -> float:
    return float(np.max(_per_point(u, pts, l, lam))) if len(pts) else 0.0


def _per_point(u: NetExpr, pts: np.ndarray, l: int, lam: float) -> np.ndarray:
    exprs = [partial_expr(u, a) for j in range(l + 1) for a in multi_indices(u.dimension, j)]
    return _pointwise_max_abs(exprs, lam, pts)


def restriction_check(u: NetExpr, inner: Box, outer: Box, l: int, lam: float, grid: Grid = Grid()) -> bool:
    """Restriction compatibility for inner ⊆ outer.

    Checks P_{inner,l} <= P_{outer,l}, the outer supremum being taken over
    the outer grid together with the inner grid so both range over nested
    point sets, and that the seminorm of u restricted to ``outer`` agrees
    with the seminorm of u itself on ``inner``.
    """
    _check_dims(u, outer)
    if not outer.contains(inner):
        raise ValueError(f"{inner} is not contained in {outer}")
    inner_pts = inner.points(grid)
    p_inner = _sup_on_points(u, inner_pts, l, lam)
    p_outer = _sup_on_points(u, np.concatenate([outer.points(grid), inner_pts]), l, lam)
    via_restriction = restricted_seminorm(restrict(u, outer), inner, l, lam, grid)
    return p_inner <= p_outer and via_restriction == p_inner


def cover_subadditivity_check(u: NetExpr, K: Box, cover: Sequence[Box], l: int, lam: float,
                              grid: Grid = Grid()) -> bool:
    """P_{K,l}(u) <= sum_i P_{K ∩ K_i, l}(u) on the grid of K."""
    _check_dims(u, K)
    if not cover:
        raise ValueError("empty cover")
    pts = K.points(grid)
    masks = [c.contains_points(pts) for c in cover]
    covered = np.any(masks, axis=0)
    if not np.all(covered):
        gap = tuple(float(c) for c in pts[int(np.argmin(covered))])
        raise ValueError(f"cover does not contain K: grid point {gap} is uncovered")
    values = _per_point(u, pts, l, lam)
    total = float(np.max(values))
    parts = [float(np.max(values[m])) if np.any(m) else 0.0 for m in masks]
    return total <= sum(parts)
