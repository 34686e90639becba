"""Weighted Lebesgue norms, exponent bookkeeping, and the damped solution norm.

Sampled fields live on uniform midpoint tensor grids of a truncated
half-space (the height axis never touches x_N = 0, so the boundary weight
h(x_N)^{-alpha} is always finite).  Infinite exponents are represented by
``math.inf`` with 1/inf = 0 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .kernels import validate_dimension

INF = math.inf


def inv_exponent(x: float) -> float:
    """1/x with the convention 1/inf = 0."""
    if x == INF:
        return 0.0
    if x <= 0:
        raise ValueError(f"exponent must be positive or inf, got {x}")
    return 1.0 / x


def weight_h(x_height):
    """Boundary weight h(x_N) = x_N / (x_N + 1) in [0, 1)."""
    x = np.asarray(x_height, dtype=float)
    if np.any(x < 0):
        raise ValueError("heights must be >= 0")
    return x / (x + 1.0)


def alpha_of(n: int, q: float, r: float) -> float:
    """Weight exponent alpha(r) = (N-1)(1/q - 1/r) + 1/q."""
    n = validate_dimension(n)
    if not 1.0 <= q <= r:
        raise ValueError(f"need 1 <= q <= r, got q={q}, r={r}")
    return (n - 1) * (inv_exponent(q) - inv_exponent(r)) + inv_exponent(q)


@dataclass(frozen=True)
class WeightedExponentSet:
    """Admissible exponent tuple (N, q, p, r) with alpha(r) attached."""

    n: int
    q: float
    p: float
    r: float
    alpha_r: float

    def __post_init__(self):
        validate_dimension(self.n)
        if not 1.0 <= self.q:
            raise ValueError("q must be >= 1")
        if self.q == INF:
            if self.p != INF:
                raise ValueError("p must be inf when q is inf")
        elif self.p != INF and self.p <= self.n * self.q / (self.n - 1):
            raise ValueError(
                f"p must exceed Nq/(N-1) = {self.n * self.q / (self.n - 1):g}"
            )
        if not self.q <= self.r <= self.p:
            raise ValueError("need q <= r <= p")
        expected = alpha_of(self.n, self.q, self.r)
        if not math.isclose(self.alpha_r, expected, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"alpha_r={self.alpha_r} inconsistent, expected {expected}")

    @property
    def alpha_p(self) -> float:
        return alpha_of(self.n, self.q, self.p)


def exponent_set(n: int, q: float, p: float, r: float | None = None) -> WeightedExponentSet:
    """Build a WeightedExponentSet, defaulting r to p."""
    if r is None:
        r = p
    return WeightedExponentSet(n=n, q=float(q), p=float(p), r=float(r),
                               alpha_r=alpha_of(n, q, r))


def membership_criterion(lam: float, exps: WeightedExponentSet) -> bool:
    """Whether data behaving like x_N^lam near the boundary lie in L^q_{alpha(p)}.

    Strict inequality: lam exactly at the threshold is excluded.
    """
    return lam > (exps.n - 1) * (inv_exponent(exps.q) - inv_exponent(exps.p))


# ---------------------------------------------------------------------------
# Sampled fields on midpoint tensor grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampledField:
    """Half-space field sampled on a uniform midpoint tensor grid.

    ``axes`` holds the per-axis node vectors, tangential axes first and the
    height axis last; ``values`` has the matching tensor shape.
    """

    axes: tuple
    values: np.ndarray
    spacings: tuple

    def __post_init__(self):
        shape = tuple(len(a) for a in self.axes)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def heights(self) -> np.ndarray:
        return self.axes[-1]

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def truncation_box(self):
        return tuple((float(a[0] - d / 2), float(a[-1] + d / 2))
                     for a, d in zip(self.axes, self.spacings))


@dataclass(frozen=True)
class SampledBoundaryField:
    """Boundary-hyperplane field on a uniform midpoint tensor grid."""

    axes: tuple
    values: np.ndarray
    spacings: tuple

    def __post_init__(self):
        shape = tuple(len(a) for a in self.axes)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))


def midpoint_axis(extent: float, nodes: int, centered: bool = True):
    """Midpoint nodes of ``nodes`` uniform cells on [-extent, extent] or [0, extent]."""
    if centered:
        d = 2.0 * extent / nodes
        return -extent + d * (np.arange(nodes) + 0.5), d
    d = extent / nodes
    return d * (np.arange(nodes) + 0.5), d


@dataclass(frozen=True)
class HalfSpaceGrid:
    """Uniform midpoint grid of a truncated half-space slab (N = 2).

    Tangential axis spans [-tangential_extent, tangential_extent]; the
    height axis spans (0, height_extent] through cell midpoints, so the
    first node sits at half a spacing above the boundary.
    """

    tangential_extent: float
    tangential_nodes: int
    height_extent: float
    height_nodes: int

    @property
    def tangential_axis(self) -> np.ndarray:
        return midpoint_axis(self.tangential_extent, self.tangential_nodes)[0]

    @property
    def height_axis(self) -> np.ndarray:
        return midpoint_axis(self.height_extent, self.height_nodes, centered=False)[0]

    @property
    def tangential_spacing(self) -> float:
        return 2.0 * self.tangential_extent / self.tangential_nodes

    @property
    def height_spacing(self) -> float:
        return self.height_extent / self.height_nodes

    def field(self, values: np.ndarray) -> SampledField:
        return SampledField(axes=(self.tangential_axis, self.height_axis),
                            values=np.asarray(values, dtype=float),
                            spacings=(self.tangential_spacing, self.height_spacing))

    def boundary_field(self, values: np.ndarray) -> SampledBoundaryField:
        return SampledBoundaryField(axes=(self.tangential_axis,),
                                    values=np.asarray(values, dtype=float),
                                    spacings=(self.tangential_spacing,))


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def lp_norm(f, r: float) -> float:
    """Lebesgue norm over the truncated grid (sup norm at r = inf)."""
    if r == INF:
        return float(np.max(np.abs(f.values))) if f.values.size else 0.0
    if r < 1:
        raise ValueError("r must be >= 1")
    return float((np.sum(np.abs(f.values) ** r) * f.cell_volume) ** (1.0 / r))


def weighted_lq_norm(f: SampledField, q: float, alpha: float) -> float:
    """Weighted norm with boundary weight h(x_N)^{-alpha} (plain sup at q = inf)."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if q == INF:
        return lp_norm(f, INF)
    if q < 1:
        raise ValueError("q must be >= 1")
    w = weight_h(f.heights) ** (-alpha * q)
    integrand = np.abs(f.values) ** q * w
    bad = ~np.isfinite(integrand) & (np.abs(f.values) > 0)
    if np.any(bad):
        idx = tuple(np.argwhere(bad)[0])
        raise OverflowError(
            f"weighted integrand overflows at grid index {idx}, "
            f"height {f.heights[idx[-1]]:g}"
        )
    integrand = np.where(np.isfinite(integrand), integrand, 0.0)
    return float((np.sum(integrand) * f.cell_volume) ** (1.0 / q))


@dataclass(frozen=True)
class TimeSliceNorms:
    """Per-time norm record consumed by the energy functional."""

    v_lp: float
    dv_lp: float
    flux_lr: Mapping  # r -> |d_{x_N} v(t)|_{L^r(boundary)}


def default_r_values(exps: WeightedExponentSet) -> tuple:
    """Finite realization of the sup over r in [q, p]: {q, (q+p)/2, p}.

    With p = inf the midpoint coincides with p and the set collapses to
    {q, inf}.
    """
    mid = INF if exps.p == INF else 0.5 * (exps.q + exps.p)
    return tuple(sorted({exps.q, mid, exps.p}))


def energy_functional(norms: TimeSliceNorms, t: float, exps: WeightedExponentSet) -> float:
    """E[v](t): time-weighted interior norms plus the boundary-flux sup over r.

    The sup over r in [q, p] runs over the finite r-set carried by the
    record; an empty set is a configuration error.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if not norms.flux_lr:
        raise ValueError("flux_lr must contain at least one r value")
    sigma = (exps.n / 2.0) * (inv_exponent(exps.q) - inv_exponent(exps.p))
    interior = t ** sigma * (norms.v_lp + math.sqrt(t) * norms.dv_lp)
    boundary = max(math.sqrt(t) * v for v in norms.flux_lr.values())
    return interior + boundary


@dataclass(frozen=True)
class DampedNormParams:
    """Horizon and damping weight of the solution norm sup e^{-Mt} E(t)."""

    horizon_T: float
    damping_M: float

    def __post_init__(self):
        if self.horizon_T <= 0:
            raise ValueError("horizon_T must be positive")
        # M >= 1 in the solver; M = 0 is allowed here for diagnostics only
        if self.damping_M < 0:
            raise ValueError("damping_M must be >= 0")


def xtm_norm(trajectory_energies: Sequence, params: DampedNormParams) -> float:
    """sup over sampled times of e^{-Mt} E(t) for (t, E) pairs in (0, T]."""
    if len(trajectory_energies) == 0:
        raise ValueError("trajectory_energies must be nonempty")
    best = 0.0
    for t, e in trajectory_energies:
        if not 0.0 < t <= params.horizon_T * (1 + 1e-12):
            raise ValueError(f"sample time {t} outside (0, T]")
        best = max(best, math.exp(-params.damping_M * t) * e)
    return best
