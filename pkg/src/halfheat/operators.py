"""Integral operators of the half-space problem: S1, its normal derivative,
the boundary semigroup S2, and the coupling operator F.

Two evaluation styles coexist:

* point APIs (``apply_S1``, ``apply_dxN_S1``, ``apply_S2``, ``apply_F``)
  integrate kernels against callables or boundary trajectories through the
  quadrature module, one evaluation point at a time;
* grid machinery (convolution matrices with analytic window-mass fixups,
  one-dimensional window convolutions for separable data) that the Picard
  solver composes into fields.

All kernels separate into a tangential convolution and a height factor, so
half-space applications on tensor grids are pairs of matrix products.
Matrices are rescaled row-wise so each row carries the analytic mass of its
kernel over the grid window (erf / arctan closed forms); rows whose kernels
change sign only get the fixup when the discrete and analytic masses agree
within a factor two.  Times below the grid-resolution scale are clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import erf

from . import kernels as kn
from . import quadrature as quad
from .datum import InitialDatum
from .kernels import HalfSpacePoint, point_as_array

# ---------------------------------------------------------------------------
# analytic window masses
# ---------------------------------------------------------------------------


def _gauss_window_mass(x, lo, hi, t):
    """integral of Gamma_1(x - y, t) over y in [lo, hi]."""
    s = 2.0 * math.sqrt(t)
    return 0.5 * (erf((x - lo) / s) - erf((x - hi) / s))


def _gauss_plus_window_mass(x, hi, t):
    """integral of Gamma_1(x + y, t) over y in [0, hi]."""
    s = 2.0 * math.sqrt(t)
    return 0.5 * (erf((x + hi) / s) - erf(x / s))


def _poisson_window_mass(a, lo, hi, scale):
    """integral of the N=2 boundary kernel P(a - y, scale) over y in [lo, hi]."""
    return (np.arctan((hi - a) / scale) - np.arctan((lo - a) / scale)) / math.pi


def _dt_poisson_window_mass(a, lo, hi, scale):
    """d/dscale of the boundary-kernel window mass (N = 2)."""
    u, v = hi - a, lo - a
    return (-u / (scale * scale + u * u) + v / (scale * scale + v * v)) / math.pi


# ---------------------------------------------------------------------------
# convolution matrices on midpoint grids
#
# Every matrix entry is the exact integral of its kernel over the source
# cell (product integration against piecewise-constant data), using the
# closed-form antiderivatives: erf for Gaussian factors, Gamma_1 itself for
# the derivative kernel, arctan and a rational function for the boundary
# kernel and its time derivative.  Masses are exact at every scale, so
# marginally resolved kernels never spike, and S1(tau) tends to the
# identity matrix organically as tau -> 0.
# ---------------------------------------------------------------------------


def _cells(sources, weight):
    sources = np.asarray(sources, dtype=float)
    return sources - weight / 2.0, sources + weight / 2.0


def gauss_conv_matrix(targets, sources, weight, t, window=None):
    """Free-space convolution matrix: cell masses of Gamma_1(x - ., t)."""
    lo, hi = _cells(sources, weight)
    return _gauss_window_mass(np.asarray(targets)[:, None], lo[None, :],
                              hi[None, :], t)


def dirichlet_conv_matrix(theights, sheights, weight, t, height_cap=None):
    """Height-factor matrix of the Dirichlet kernel (image charge per cell)."""
    lo, hi = _cells(sheights, weight)
    x = np.asarray(theights)[:, None]
    minus = _gauss_window_mass(x, lo[None, :], hi[None, :], t)
    s = 2.0 * math.sqrt(t)
    plus = 0.5 * (erf((x + hi[None, :]) / s) - erf((x + lo[None, :]) / s))
    return minus - plus


def deriv_conv_matrix(theights, sheights, weight, t, height_cap=None):
    """Height-factor matrix of the normal-derivative kernel K, per cell.

    Cell integrals follow from d/dy Gamma_1(x -+ y, t) = +-(x -+ y)/(2t)
    Gamma_1, so each entry is a difference of Gamma_1 values at the cell
    edges.
    """
    lo, hi = _cells(sheights, weight)
    x = np.asarray(theights)[:, None]
    minus = kn.gauss1d(x - lo[None, :], t) - kn.gauss1d(x - hi[None, :], t)
    plus = kn.gauss1d(x + lo[None, :], t) - kn.gauss1d(x + hi[None, :], t)
    return minus + plus


def trace_vector(sheights, weight, t, height_cap=None):
    """Boundary-trace weights: cell masses of (y/t) Gamma_1(y, t)."""
    lo, hi = _cells(sheights, weight)
    return 2.0 * (kn.gauss1d(lo, t) - kn.gauss1d(hi, t))


def poisson_conv_matrix(targets, sources, weight, scale, window=None):
    """Boundary-kernel convolution matrix at fixed scale (N = 2).

    Rows are exact cell masses (arctan differences), hence positive with
    row sums strictly below one on any truncated window: grid contraction
    of the boundary semigroup holds exactly.
    """
    lo, hi = _cells(sources, weight)
    return _poisson_window_mass(np.asarray(targets)[:, None], lo[None, :],
                                hi[None, :], scale)


def poisson_conv_tensor(targets, sources, weight, scales, window=None):
    """Stack of boundary-kernel matrices over per-height scales: (m, nt, ns)."""
    lo, hi = _cells(sources, weight)
    scales = np.asarray(scales, dtype=float)[:, None, None]
    return _poisson_window_mass(np.asarray(targets)[None, :, None],
                                lo[None, None, :], hi[None, None, :], scales)


def dt_poisson_conv_tensor(targets, sources, weight, scales, window=None):
    """Stack of time-derivative boundary-kernel matrices over scales."""
    lo, hi = _cells(sources, weight)
    scales = np.asarray(scales, dtype=float)[:, None, None]
    return _dt_poisson_window_mass(np.asarray(targets)[None, :, None],
                                   lo[None, None, :], hi[None, None, :], scales)


# ---------------------------------------------------------------------------
# windowed one-dimensional convolutions (separable semi-exact path)
# ---------------------------------------------------------------------------

_panel_edges = quad.refined_edges


def window_convolve_1d(kernel, targets, window, scale, splits=(), m=12):
    """evaluate integral of kernel(x, y) dy over the window, per target x.

    ``kernel(x, y_array)`` must vectorize over y; the y-window is clipped to
    ``window`` intersected with x +- 12 scale, and panels resolve structure
    of size ``scale`` with geometric refinement at each split point.
    """
    out = np.empty(len(targets))
    lo_w, hi_w = window
    for i, x in enumerate(targets):
        lo = max(lo_w, x - 12.0 * scale)
        hi = min(hi_w, x + 12.0 * scale)
        if hi <= lo:
            out[i] = 0.0
            continue
        edges = _panel_edges(lo, hi, scale, splits=tuple(splits) + (x,))
        nodes, weights = quad.composite_rule(edges, m)
        out[i] = float(kernel(x, nodes) @ weights)
    return out


def evolve_free_1d(profile, t, targets, support, splits=()):
    """Heat evolution of a 1-d profile on the full line, windowed quadrature."""
    sigma = math.sqrt(2.0 * t)
    return window_convolve_1d(
        lambda x, y: kn.gauss1d(x - y, t) * profile(y),
        np.asarray(targets, dtype=float), support, sigma, splits)


def evolve_dirichlet_1d(profile, t, targets, support, splits=()):
    """Dirichlet heat evolution of a 1-d height profile on (0, inf)."""
    sigma = math.sqrt(2.0 * t)
    lo, hi = max(0.0, support[0]), support[1]
    return window_convolve_1d(
        lambda x, y: kn.dirichlet_height_factor(x, y, t) * profile(y),
        np.asarray(targets, dtype=float), (lo, hi), sigma, splits)


def evolve_dirichlet_deriv_1d(profile, t, targets, support, splits=()):
    """Normal derivative of the Dirichlet evolution of a height profile."""
    sigma = math.sqrt(2.0 * t)
    lo, hi = max(0.0, support[0]), support[1]
    return window_convolve_1d(
        lambda x, y: kn.height_derivative_factor(x, y, t) * profile(y),
        np.asarray(targets, dtype=float), (lo, hi), sigma, splits)


def trace_moment(profile, t, support, splits=()):
    """integral of (y/t) Gamma_1(y, t) profile(y) over (0, support_hi)."""
    sigma = math.sqrt(2.0 * t)
    lo, hi = max(0.0, support[0]), min(support[1], 14.0 * sigma)
    if hi <= lo:
        return 0.0
    edges = _panel_edges(lo, hi, sigma, splits=tuple(splits) + (0.0,))
    nodes, weights = quad.composite_rule(edges, 12)
    vals = (nodes / t) * kn.gauss1d(nodes, t) * profile(nodes)
    return float(vals @ weights)


# ---------------------------------------------------------------------------
# boundary trajectories
# ---------------------------------------------------------------------------

@dataclass
class BoundaryTrajectory:
    """Time-indexed boundary flux samples with log-time interpolation.

    ``values`` has shape (n_times, n_tangential) on the midpoint axis
    ``axis``; queries below the first sample fall back to ``early_model``
    when given, else clamp to the first slice.
    """

    times: np.ndarray
    values: np.ndarray
    axis: np.ndarray
    spacing: float
    early_model: Optional[Callable] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.times[0] <= 0:
            raise ValueError("first sample time must be positive")
        if self.values.shape[0] != self.times.size:
            raise ValueError("values first axis must match times")

    def at(self, s: float) -> np.ndarray:
        """Flux slice at time s, interpolated linearly in log t."""
        if s <= 0:
            raise ValueError("query time must be positive")
        t = self.times
        if s < t[0]:
            if self.early_model is not None:
                return np.asarray(self.early_model(s), dtype=float)
            return self.values[0]
        if s >= t[-1]:
            return self.values[-1]
        j = int(np.searchsorted(t, s, side="right")) - 1
        lt, rt = math.log(t[j]), math.log(t[j + 1])
        w = (math.log(s) - lt) / (rt - lt)
        return (1.0 - w) * self.values[j] + w * self.values[j + 1]


def log_interp_stack(times, stack, s, envelope_below: bool = False):
    """Interpolate a (n_times, ...) stack linearly in log time.

    Below the first sample either clamps or, with ``envelope_below``, scales
    the first slice by sqrt(t_0 / s) -- the worst-case early-time envelope of
    the coupling fields.
    """
    times = np.asarray(times, dtype=float)
    if s <= 0:
        raise ValueError("query time must be positive")
    if s < times[0]:
        first = stack[0]
        return first * math.sqrt(times[0] / s) if envelope_below else first
    if s >= times[-1]:
        return stack[-1]
    j = int(np.searchsorted(times, s, side="right")) - 1
    lt, rt = math.log(times[j]), math.log(times[j + 1])
    w = (math.log(s) - lt) / (rt - lt)
    return (1.0 - w) * stack[j] + w * stack[j + 1]


# ---------------------------------------------------------------------------
# point APIs
# ---------------------------------------------------------------------------

_DEFAULT_SPATIAL = quad.SpatialQuadratureSpec()


def _datum_splits(phi, n: int):
    # kink/singularity hints for the height axis (splits only matter there)
    if isinstance(phi, InitialDatum):
        return [()] * (n - 1) + [tuple(phi.height_splits) + (0.0,)]
    return None


def apply_S1(phi, t: float, x, spec: quad.SpatialQuadratureSpec = _DEFAULT_SPATIAL) -> float:
    """[S1(t) phi](x): Dirichlet-kernel integral of the datum over the half-space."""
    xa = point_as_array(x)
    if xa[-1] == 0.0:
        return 0.0  # the kernel vanishes on the boundary
    f = phi.evaluator if isinstance(phi, InitialDatum) else phi

    def integrand(points):
        return kn.dirichlet_heat_kernel(xa, points, t) * f(points)

    return quad.integrate_halfspace(integrand, xa, t, spec,
                                    axis_splits=_datum_splits(phi, xa.size))


def apply_dxN_S1(phi, t: float, x, spec: quad.SpatialQuadratureSpec = _DEFAULT_SPATIAL) -> float:
    """d/dx_N of [S1(t) phi](x) by differentiation under the integral."""
    xa = point_as_array(x)
    f = phi.evaluator if isinstance(phi, InitialDatum) else phi

    def integrand(points):
        return kn.normal_derivative_kernel(xa, points, t) * f(points)

    return quad.integrate_halfspace(integrand, xa, t, spec,
                                    axis_splits=_datum_splits(phi, xa.size))


def apply_S2(psi, t: float, x, spec: quad.SpatialQuadratureSpec = _DEFAULT_SPATIAL,
             psi_tail: float = 0.0) -> float:
    """[S2(t) psi](x) through the shift identity: the x_N-slice at shifted time.

    The boundary kernel depends on (x_N, t) only through x_N + t, so the
    value at (x', x_N, t) is the boundary evaluation at time t + x_N.
    ``psi_tail`` is psi's far-field constant level for the tail correction.
    """
    xa = point_as_array(x)
    xt, xh = xa[:-1], xa[-1]
    scale = t + xh
    if xt.size == 1:
        xt = float(xt[0])

    def integrand(yt):
        z = xt - yt
        return kn.boundary_kernel_scale(z, scale, n=xa.size) * psi(yt)

    return quad.integrate_boundary(integrand, xt, scale, spec,
                                   tail_coefficient=psi_tail)


def apply_S2_direct(psi, t: float, x, spec: quad.SpatialQuadratureSpec,
                    psi_tail: float = 0.0) -> float:
    """[S2(t) psi](x) by direct quadrature of the defining integral.

    Cross-check partner of :func:`apply_S2`; uses the kernel in its
    (x_N, t) form and a quadrature layout scaled by t alone.
    """
    xa = point_as_array(x)
    xt, xh = xa[:-1], xa[-1]
    if xt.size == 1:
        xt = float(xt[0])

    def integrand(yt):
        return kn.boundary_kernel(xt - yt, xh, t, n=xa.size) * psi(yt)

    return quad.integrate_boundary(integrand, xt, t + xh, spec,
                                   tail_coefficient=psi_tail)


def apply_F(flux: BoundaryTrajectory, x, t: float,
            time_spec: quad.SingularTimeSpec | None = None) -> float:
    """Coupling operator F[v](x, t) from the boundary-flux trajectory.

    First term: boundary-kernel smoothing of the current flux at scale x_N
    (regular for x_N > 0).  Second term: Duhamel integral of the kernel's
    time derivative against the flux history, endpoint exponents (1/2, 1/2).
    Evaluation at x_N = 0 is rejected: the first term's kernel is singular
    there, and F is only ever integrated against kernels vanishing on the
    boundary.
    """
    xa = point_as_array(x)
    if xa.size != 2:
        raise NotImplementedError("apply_F is implemented for N = 2")
    xt, xh = float(xa[0]), float(xa[1])
    if xh <= 0.0:
        raise ValueError("apply_F requires x_N > 0 (open half-space)")
    if time_spec is None:
        time_spec = quad.SingularTimeSpec(0.5, 0.5, panels=8)
    a, w, L = flux.axis, flux.spacing, float(flux.axis[-1] + flux.spacing / 2)
    window = (-L, L)
    row1 = poisson_conv_matrix(np.array([xt]), a, w, xh, window)[0]
    term1 = float(row1 @ flux.at(t))

    def hist(s_nodes):
        vals = np.empty_like(s_nodes)
        for i, s in enumerate(s_nodes):
            row = dt_poisson_conv_tensor(np.array([xt]), a, w,
                                         np.array([xh + (t - s)]), window)[0, 0]
            vals[i] = row @ flux.at(s)
        return vals

    term2 = quad.integrate_time_singular(hist, t, time_spec)
    return term1 + term2


def compute_w(flux: BoundaryTrajectory, x, t: float,
              time_spec: quad.SingularTimeSpec | None = None) -> float:
    """Boundary-generated part w(x, t): time integral of S2 against the flux.

    Endpoint exponents (1/2, 0): the flux may carry the s^{-1/2} early-time
    envelope while the boundary semigroup is contractive near s = t.
    """
    xa = point_as_array(x)
    if xa.size != 2:
        raise NotImplementedError("compute_w is implemented for N = 2")
    xt, xh = float(xa[0]), float(xa[1])
    if time_spec is None:
        time_spec = quad.SingularTimeSpec(0.5, 0.0, panels=8)
    a, w, L = flux.axis, flux.spacing, float(flux.axis[-1] + flux.spacing / 2)
    window = (-L, L)

    def hist(s_nodes):
        vals = np.empty_like(s_nodes)
        for i, s in enumerate(s_nodes):
            row = poisson_conv_matrix(np.array([xt]), a, w,
                                      xh + (t - s), window)[0]
            vals[i] = row @ flux.at(s)
        return vals

    return quad.integrate_time_singular(hist, t, time_spec)
