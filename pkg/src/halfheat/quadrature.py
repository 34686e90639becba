"""Numerical integration over the half-space, the boundary, and singular time.

Three integral families cover every operator application:

* ``integrate_halfspace`` -- Gaussian-windowed integrals of heat-kernel type
  integrands over a truncated box around the evaluation point;
* ``integrate_boundary`` -- tangential-hyperplane integrals with geometric
  panels and an optional algebraic tail correction for Poisson-type
  integrands (those decay only like |y'|^{-N}, so pure truncation would bias
  normalization);
* ``integrate_time_singular`` -- Duhamel integrals with endpoint weights
  s^{-a} (t-s)^{-b}, removed by the square-root substitutions s = t u^2 and
  s = t (1 - u^2).

Node sets are deterministic functions of the spec; reductions use a fixed
summation order so identical specs give bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .kernels import poisson_constant

_SCHEMES = ("trapezoid", "gauss_legendre_composite")

# per-panel Gauss-Legendre rule used by the singular-time substitutions
_TIME_NODES_PER_PANEL = 6


@dataclass(frozen=True)
class SpatialQuadratureSpec:
    """Truncation and node budget for spatial integrals.

    ``truncation_radius_sigmas`` counts Gaussian standard deviations
    sqrt(2t) (or P-kernel scales) kept beyond the evaluation point;
    ``nodes_per_dimension`` is the per-axis node budget.
    """

    truncation_radius_sigmas: float = 8.0
    nodes_per_dimension: int = 32
    scheme: str = "gauss_legendre_composite"

    def __post_init__(self):
        if self.truncation_radius_sigmas < 6:
            raise ValueError("truncation_radius_sigmas must be >= 6")
        if self.nodes_per_dimension < 16:
            raise ValueError("nodes_per_dimension must be >= 16")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}")


@dataclass(frozen=True)
class SingularTimeSpec:
    """Endpoint-singularity strengths and panel budget for time integrals.

    ``panels`` is the total transformed-panel count, split between the two
    endpoint substitutions; each panel carries a 6-point Gauss-Legendre rule.
    ``grading_ratio`` < 1 grades panel edges geometrically toward the
    substituted endpoint (needed only for integrands with interior layers,
    e.g. e^{-M s} at large M); 1.0 keeps panels uniform.
    """

    left_exponent: float = 0.5
    right_exponent: float = 0.5
    panels: int = 8
    grading_ratio: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.left_exponent < 1.0 and 0.0 <= self.right_exponent < 1.0):
            raise ValueError("endpoint exponents must lie in [0, 1)")
        if self.left_exponent + self.right_exponent > 1.0 + 1e-12:
            raise ValueError("left_exponent + right_exponent must be <= 1")
        if self.panels < 8:
            raise ValueError("panels must be >= 8")
        if not (0.0 < self.grading_ratio <= 1.0):
            raise ValueError("grading_ratio must lie in (0, 1]")


class NonFiniteSampleError(ArithmeticError):
    """An integrand returned a non-finite value; carries the sample location."""

    def __init__(self, where):
        self.where = np.asarray(where)
        super().__init__(f"integrand is non-finite at sample {self.where}")


# ---------------------------------------------------------------------------
# 1-d rule builders
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _leggauss(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre_panel(lo: float, hi: float, m: int):
    """m-point Gauss-Legendre nodes/weights on [lo, hi]."""
    x, w = _leggauss(m)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def composite_rule(edges, m: int):
    """Concatenated m-point Gauss-Legendre rules over consecutive edges."""
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(m)
    lo = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    nodes = lo + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def axis_rule(lo: float, hi: float, spec: SpatialQuadratureSpec):
    """Per-axis rule on [lo, hi] according to the spec's scheme."""
    if spec.scheme == "trapezoid":
        x = np.linspace(lo, hi, spec.nodes_per_dimension)
        w = np.full(spec.nodes_per_dimension, (hi - lo) / (spec.nodes_per_dimension - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return x, w
    m = 12
    panels = max(1, int(round(spec.nodes_per_dimension / m)))
    edges = np.linspace(lo, hi, panels + 1)
    return composite_rule(edges, m)


def refined_edges(lo: float, hi: float, width: float, splits=()):
    """Panel edges on [lo, hi] of size ~ ``width``, geometrically refined at splits.

    Splits mark kinks or integrable singularities of the integrand; each one
    gets a cascade of halving panels so Gauss-Legendre panels keep spectral
    accuracy away from it.
    """
    count = max(2, min(64, int(math.ceil((hi - lo) / width))))
    edges = set(np.linspace(lo, hi, count + 1))
    for s in splits:
        if lo <= s <= hi:
            step = width
            for _ in range(10):
                step *= 0.5
                for e in (s - step, s + step):
                    if lo < e < hi:
                        edges.add(e)
            if lo < s < hi:
                edges.add(s)
    return np.array(sorted(edges))


def graded_edges(center: float, scale: float, radius: float, sign: int):
    """Geometric panel edges from ``center`` outward to ``center + sign*radius``.

    Edge offsets double from ``scale`` so each panel resolves the local
    structure of a kernel whose width is ~ scale near the center.
    """
    offs = [0.0]
    step = scale
    while offs[-1] < radius:
        offs.append(min(offs[-1] + step, radius))
        step *= 2.0
    return center + sign * np.asarray(offs)


def graded_axis_rule(center: float, scale: float, radius: float, m: int = 12):
    """Two-sided geometrically graded composite rule around ``center``."""
    left = graded_edges(center, scale, radius, -1)[::-1]
    right = graded_edges(center, scale, radius, +1)
    edges = np.concatenate([left[:-1], right])
    return composite_rule(edges, m)


# ---------------------------------------------------------------------------
# Half-space integrals
# ---------------------------------------------------------------------------

def _check_finite(values, points):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = tuple(np.argwhere(bad)[0])
        raise NonFiniteSampleError(points[idx])


def integrate_halfspace(f, center, t: float, spec: SpatialQuadratureSpec,
                        axis_splits=None) -> float:
    """Integrate ``f`` over the truncated half-space around ``center``.

    The domain is the bounding box of {|y - center| <= R(t), y_N > 0} with
    R(t) = truncation_radius_sigmas * sqrt(2 t); for heat-kernel integrands
    the omitted tail is below the 1e-14 scale by the Gaussian bound.

    ``f`` must accept a stacked array of points with shape (..., N) and
    return values of shape (...).  ``axis_splits`` optionally lists, per
    axis, coordinates where the integrand has kinks (honored by the
    Gauss-Legendre scheme; the trapezoid scheme stays uniform).
    """
    center = np.asarray(center, dtype=float)
    n = center.size
    radius = spec.truncation_radius_sigmas * math.sqrt(2.0 * t)
    if axis_splits is None:
        axis_splits = [()] * n
    los = [c - radius for c in center[:-1]] + [max(0.0, center[-1] - radius)]
    his = [c + radius for c in center[:-1]] + [center[-1] + radius]
    rules = []
    for lo, hi, splits in zip(los, his, axis_splits):
        if spec.scheme == "gauss_legendre_composite" and splits:
            width = (hi - lo) / max(1, int(round(spec.nodes_per_dimension / 12)))
            rules.append(composite_rule(refined_edges(lo, hi, width, splits), 12))
        else:
            rules.append(axis_rule(lo, hi, spec))
    meshes = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    points = np.stack(meshes, axis=-1)
    values = np.asarray(f(points), dtype=float)
    _check_finite(values, points)
    for _, w in reversed(rules):
        values = values @ w
    return float(values)


def poisson_tail_mass(radius: float, scale: float, n: int) -> float:
    """Mass of the asymptotic kernel C_N s^{1-N} (|y'|/s)^{-N} outside the box.

    Closed forms for the box exterior: 2 C_N s / R in one tangential
    dimension, 4 sqrt(2) C_N s / R in two.
    """
    if n == 2:
        return 2.0 * poisson_constant(2) * scale / radius
    if n == 3:
        return 4.0 * math.sqrt(2.0) * poisson_constant(3) * scale / radius
    raise ValueError("tail correction implemented for N in {2, 3}")


def integrate_boundary(
    g,
    center,
    scale: float,
    spec: SpatialQuadratureSpec,
    tail_coefficient: float = 0.0,
) -> float:
    """Integrate ``g`` over the truncated boundary hyperplane around ``center``.

    Panels are geometrically graded outward from ``center`` with the first
    panel of width ``scale``, out to truncation_radius_sigmas * scale, so
    algebraically decaying kernels of width ~ scale are resolved at every
    radius.  ``tail_coefficient`` is the far-field constant level of the
    non-kernel factor of the integrand; when nonzero, the analytic mass of
    the asymptotic Poisson kernel beyond the box is added back, scaled by it.

    ``g`` must be vectorized: one tangential dimension maps arrays of shape
    (...) -> (...); two map (..., 2) -> (...).
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    dim = center.size
    if scale <= 0:
        raise ValueError("scale must be positive")
    radius = spec.truncation_radius_sigmas * scale
    if spec.scheme == "trapezoid":
        rules = [axis_rule(c - radius, c + radius, spec) for c in center]
    else:
        rules = [graded_axis_rule(c, scale, radius) for c in center]
    if dim == 1:
        points = rules[0][0]
        values = np.asarray(g(points), dtype=float)
    elif dim == 2:
        mx, my = np.meshgrid(rules[0][0], rules[1][0], indexing="ij")
        points = np.stack([mx, my], axis=-1)
        values = np.asarray(g(points), dtype=float)
    else:
        raise ValueError("boundary integrals support one or two tangential dimensions")
    _check_finite(values, points)
    for _, w in reversed(rules):
        values = values @ w
    total = float(values)
    if tail_coefficient != 0.0:
        total += tail_coefficient * poisson_tail_mass(radius, scale, dim + 1)
    return total


# ---------------------------------------------------------------------------
# Singular-in-time integrals
# ---------------------------------------------------------------------------

def _side_edges(spec: SingularTimeSpec, panels: int):
    u_max = 1.0 / math.sqrt(2.0)
    if spec.grading_ratio >= 1.0:
        return np.linspace(0.0, u_max, panels + 1)
    # geometric edges toward u = 0: [0, r^{k-1} u, ..., r u, u]
    edges = u_max * spec.grading_ratio ** np.arange(panels, -1, -1.0)
    edges[0] = 0.0
    return edges


def singular_time_rule(t: float, spec: SingularTimeSpec):
    """Nodes and weights for integrals over (0, t) with endpoint singularities.

    Applies s = t u^2 on (0, t/2] and s = t (1 - u^2) on [t/2, t); both
    transformed integrands are integrated by composite Gauss-Legendre panels
    on u in (0, 1/sqrt 2].  Nodes never touch s = 0 or s = t.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    left_panels = spec.panels - spec.panels // 2
    right_panels = spec.panels // 2
    ul, wl = composite_rule(_side_edges(spec, left_panels), _TIME_NODES_PER_PANEL)
    ur, wr = composite_rule(_side_edges(spec, right_panels), _TIME_NODES_PER_PANEL)
    s_left = t * ul * ul
    w_left = 2.0 * t * ul * wl
    s_right = t * (1.0 - ur * ur)
    w_right = 2.0 * t * ur * wr
    nodes = np.concatenate([s_left, s_right])
    weights = np.concatenate([w_left, w_right])
    return nodes, weights


def integrate_time_singular(h, t: float, spec: SingularTimeSpec) -> float:
    """Integral of ``h`` over (0, t) where h may carry s^{-a}, (t-s)^{-b} weights.

    ``h`` must accept an array of interior times.  Deterministic for a fixed
    spec.
    """
    nodes, weights = singular_time_rule(t, spec)
    values = np.asarray(h(nodes), dtype=float)
    _check_finite(values, nodes)
    return float(values @ weights)
