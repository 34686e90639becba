"""Picard fixed-point solver producing the solution pair (v, w) and u = v + w.

The iteration is v^0 = S1(t) phi, v^{k+1} = S1(t) phi - D[v^k], carried on a
tensor half-space grid with the boundary flux d/dx_N v(., 0, t) always
computed through the kernel-derivative representation (never by differencing
fields).  Damping M enters only the norm in which contraction is measured,
not the iterates themselves, so the M-doubling search reweights stored
energy curves instead of re-running the iteration; the ratio history it
records is identical to a restart loop's.

Trajectories are sampled geometrically in (0, T] (dense near zero) and
interpolated linearly in log t.  The coupling field F[v] is cached per
iteration on its own finer geometric grid reaching below the first
trajectory time; below the cache start, the early-time envelope s^{-1/2}
anchors extrapolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import operators as op
from . import quadrature as quad
from .datum import InitialDatum
from .norms import (
    INF,
    HalfSpaceGrid,
    SampledField,
    WeightedExponentSet,
    default_r_values,
    exponent_set,
    inv_exponent,
)


class PicardNonContractionError(RuntimeError):
    """M-doubling hit its cap without reaching the contraction target."""

    def __init__(self, ratio_history, damping):
        self.ratio_history = list(ratio_history)
        self.damping = damping
        super().__init__(
            f"no contraction at damping cap M={damping:g}; ratios={ratio_history}"
        )


@dataclass
class SolverConfig:
    """Grid, horizon, and iteration budget of the Picard solver."""

    horizon_T: float = 1.0
    damping_M: float = 32.0
    picard_tol: float = 1e-4
    max_iterations: int = 10
    tangential_extent: float = 8.0
    tangential_nodes: int = 96
    height_extent: float = 6.0
    height_nodes: int = 48
    time_sample_count: int = 20
    time_min_fraction: float = 1e-3
    duhamel_cache_count: int = 28
    duhamel_cache_min_fraction: float = 1e-4
    time_panels: int = 8
    r_values: Optional[tuple] = None
    contraction_target: float = 0.55
    damping_cap: float = 1024.0

    def __post_init__(self):
        if self.picard_tol <= 0:
            raise ValueError("picard_tol must be positive")
        if self.max_iterations < 2:
            raise ValueError("max_iterations must be >= 2")
        if self.damping_M < 1:
            raise ValueError("damping_M must be >= 1")
        if self.horizon_T <= 0:
            raise ValueError("horizon_T must be positive")
        if self.time_sample_count < 4:
            raise ValueError("time_sample_count must be >= 4")

    def grid(self) -> HalfSpaceGrid:
        return HalfSpaceGrid(self.tangential_extent, self.tangential_nodes,
                             self.height_extent, self.height_nodes)

    def times(self) -> np.ndarray:
        return np.geomspace(self.horizon_T * self.time_min_fraction,
                            self.horizon_T, self.time_sample_count)


@dataclass
class FieldTrajectory:
    """Time-indexed half-space fields on a fixed grid."""

    times: np.ndarray
    values: np.ndarray  # (n_times, n_tan, n_height)
    grid: HalfSpaceGrid

    def field(self, i: int) -> SampledField:
        return self.grid.field(self.values[i])

    def at(self, t: float) -> np.ndarray:
        return op.log_interp_stack(self.times, self.values, t)


@dataclass
class SolverDiagnostics:
    iterations: int
    converged: bool
    final_damping: float
    distances: list
    contraction_ratios: list
    damping_history: list
    residual: float
    residual_relative: float
    initial_norm: float
    solution_norm: float
    datum_weighted_norm: float
    r_argmax_counts: dict


@dataclass
class PicardResult:
    v: FieldTrajectory
    w: FieldTrajectory
    u: FieldTrajectory
    flux: op.BoundaryTrajectory
    diagnostics: SolverDiagnostics

    def __iter__(self):
        return iter((self.v, self.w, self.u, self.diagnostics))


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------

class _Engine:
    """Precomputed grids, rules, and operator applications for one solve."""

    def __init__(self, config: SolverConfig, exps: WeightedExponentSet):
        if exps.n != 2:
            raise NotImplementedError("the grid solver is implemented for N = 2")
        self.config = config
        self.exps = exps
        grid = config.grid()
        self.grid = grid
        self.a = grid.tangential_axis
        self.b = grid.height_axis
        self.wa = grid.tangential_spacing
        self.wb = grid.height_spacing
        self.window = (-grid.tangential_extent, grid.tangential_extent)
        self.height_cap = grid.height_extent
        self.tau_floor = min(self.wa, self.wb) ** 2 / 8.0
        self.times = config.times()
        self.f_times = np.geomspace(
            config.horizon_T * config.duhamel_cache_min_fraction,
            config.horizon_T, config.duhamel_cache_count)
        self.time_spec = quad.SingularTimeSpec(0.5, 0.5, panels=config.time_panels)
        self.w_spec = quad.SingularTimeSpec(0.5, 0.0, panels=config.time_panels)
        self.r_values = tuple(config.r_values or default_r_values(exps))
        self.cell = self.wa * self.wb
        # Poisson tensor at the grid heights is s-independent: used by F1
        self.p_heights = self._poisson_tensor(self.b)
        self._rule_cache = {}

    def _rule(self, t: float, spec: quad.SingularTimeSpec):
        key = (float(t), spec.panels, spec.left_exponent, spec.right_exponent)
        r = self._rule_cache.get(key)
        if r is None:
            r = quad.singular_time_rule(t, spec)
            self._rule_cache[key] = r
        return r

    # -- matrix helpers ----------------------------------------------------

    def _tau(self, tau: float) -> float:
        # cell-integral matrices are exact as tau -> 0; the floor only keeps
        # the kernel module's time guard satisfied
        return max(tau, 1e-12)

    def _gather(self, rows):
        # Toeplitz stack (m, 2n-1) -> (m, n, n) via the difference index
        n = self.a.size
        idx = np.arange(n)[:, None] - np.arange(n)[None, :] + n - 1
        return rows[:, idx]

    def _cell_edges(self):
        k = np.arange(-(self.a.size - 1), self.a.size) * self.wa
        return k - self.wa / 2.0, k + self.wa / 2.0

    def _poisson_tensor(self, scales):
        scales = np.asarray(scales, dtype=float)[:, None]
        lo, hi = self._cell_edges()
        rows = (np.arctan(hi[None, :] / scales)
                - np.arctan(lo[None, :] / scales)) / math.pi
        return self._gather(rows)

    def _dt_poisson_tensor(self, scales):
        scales = np.asarray(scales, dtype=float)[:, None]
        lo, hi = self._cell_edges()
        s2 = scales * scales
        rows = (lo[None, :] / (s2 + lo[None, :] ** 2)
                - hi[None, :] / (s2 + hi[None, :] ** 2)) / math.pi
        return self._gather(rows)

    def s1_matrices(self, tau: float):
        tau = self._tau(tau)
        g = op.gauss_conv_matrix(self.a, self.a, self.wa, tau)
        hm = op.dirichlet_conv_matrix(self.b, self.b, self.wb, tau)
        kh = op.deriv_conv_matrix(self.b, self.b, self.wb, tau)
        tv = op.trace_vector(self.b, self.wb, tau)
        return g, hm, kh, tv

    # -- field builders ----------------------------------------------------

    def f_field(self, s: float, flux_fn: Callable) -> np.ndarray:
        """Coupling field F at time s on the grid, (n_tan, n_height)."""
        f1 = np.matmul(self.p_heights, flux_fn(s)).T
        nodes, weights = self._rule(s, self.time_spec)
        f2 = np.zeros_like(f1)
        for sig, wgt in zip(nodes, weights):
            tens = self._dt_poisson_tensor(self.b + (s - sig))
            f2 += wgt * np.matmul(tens, flux_fn(sig)).T
        return f1 + f2

    def f_cache(self, flux_fn: Callable):
        stack = np.stack([self.f_field(s, flux_fn) for s in self.f_times])
        return stack

    def f_at(self, stack, s: float) -> np.ndarray:
        return op.log_interp_stack(self.f_times, stack, s, envelope_below=True)

    def duhamel(self, t: float, stack):
        """D[v](t), d/dx_N D[v](t), and the boundary flux of D at time t."""
        nodes, weights = self._rule(t, self.time_spec)
        d = np.zeros((self.a.size, self.b.size))
        dd = np.zeros_like(d)
        fd = np.zeros(self.a.size)
        for s, wgt in zip(nodes, weights):
            f_s = self.f_at(stack, s)
            g, hm, kh, tv = self.s1_matrices(t - s)
            gf = g @ f_s
            d += wgt * (gf @ hm.T)
            dd += wgt * (gf @ kh.T)
            fd += wgt * (g @ (f_s @ tv))
        return d, dd, fd

    def w_field(self, t: float, flux_fn: Callable) -> np.ndarray:
        nodes, weights = self._rule(t, self.w_spec)
        w = np.zeros((self.a.size, self.b.size))
        for s, wgt in zip(nodes, weights):
            tens = self._poisson_tensor(self.b + (t - s))
            w += wgt * np.matmul(tens, flux_fn(s)).T
        return w

    # -- norms ---------------------------------------------------------------

    def _halfspace_lp(self, arr, p):
        if p == INF:
            return float(np.max(np.abs(arr)))
        return float((np.sum(np.abs(arr) ** p) * self.cell) ** (1.0 / p))

    def _boundary_lr(self, vec, r):
        if r == INF:
            return float(np.max(np.abs(vec)))
        return float((np.sum(np.abs(vec) ** r) * self.wa) ** (1.0 / r))

    def energy_curve(self, v_stack, dv_stack, g_stack):
        """Per-time energies E[.](t_i) plus the argmax-r record."""
        exps = self.exps
        sigma = (exps.n / 2.0) * (inv_exponent(exps.q) - inv_exponent(exps.p))
        energies = np.empty(len(self.times))
        argmax = []
        for i, t in enumerate(self.times):
            interior = t ** sigma * (
                self._halfspace_lp(v_stack[i], exps.p)
                + math.sqrt(t) * self._halfspace_lp(dv_stack[i], exps.p))
            flux_terms = {r: math.sqrt(t) * self._boundary_lr(g_stack[i], r)
                          for r in self.r_values}
            r_best = max(flux_terms, key=flux_terms.get)
            energies[i] = interior + flux_terms[r_best]
            argmax.append(r_best)
        return energies, argmax

    def xtm(self, energies, damping: float) -> float:
        return float(np.max(np.exp(-damping * self.times) * energies))


# ---------------------------------------------------------------------------
# initial iterate
# ---------------------------------------------------------------------------

def _initial_fields(engine: _Engine, phi: InitialDatum):
    """v0 = S1(t) phi, its normal derivative, and its boundary flux.

    Separable data evolve factor-by-factor through windowed 1-d quadrature
    (accurate at every time); other data fall back to grid convolution,
    which is resolution-limited below the grid time scale.
    """
    a, b, times = engine.a, engine.b, engine.times
    n_t = len(times)
    v0 = np.empty((n_t, a.size, b.size))
    dv0 = np.empty_like(v0)
    g0 = np.empty((n_t, a.size))
    if phi.separable:
        for i, t in enumerate(times):
            tan = op.evolve_free_1d(phi.tangential_profile, t, a,
                                    phi.tangential_support)
            hgt = op.evolve_dirichlet_1d(phi.height_profile, t, b,
                                         phi.height_support, phi.height_splits)
            dhg = op.evolve_dirichlet_deriv_1d(phi.height_profile, t, b,
                                               phi.height_support, phi.height_splits)
            mom = op.trace_moment(phi.height_profile, t, phi.height_support,
                                  phi.height_splits)
            v0[i] = np.outer(tan, hgt)
            dv0[i] = np.outer(tan, dhg)
            g0[i] = tan * mom

        g0_cache = {}

        def g0_at(s: float) -> np.ndarray:
            v = g0_cache.get(s)
            if v is None:
                tan = op.evolve_free_1d(phi.tangential_profile, s, a,
                                        phi.tangential_support)
                mom = op.trace_moment(phi.height_profile, s, phi.height_support,
                                      phi.height_splits)
                v = tan * mom
                g0_cache[s] = v
            return v

    else:
        mesh = np.stack(np.meshgrid(a, b, indexing="ij"), axis=-1)
        phi_grid = np.asarray(phi(mesh), dtype=float)
        for i, t in enumerate(times):
            g, hm, kh, tv = engine.s1_matrices(t)
            gp = g @ phi_grid
            v0[i] = gp @ hm.T
            dv0[i] = gp @ kh.T
            g0[i] = g @ (phi_grid @ tv)

        g0_cache = {}

        def g0_at(s: float) -> np.ndarray:
            v = g0_cache.get(s)
            if v is None:
                g, _, _, tv = engine.s1_matrices(s)
                v = g @ (phi_grid @ tv)
                g0_cache[s] = v
            return v

    return v0, dv0, g0, g0_at


def _flux_fn(times, values, g0_at, g0_first):
    """Trajectory interpolation with the exact-early-flux model below t_1."""
    corr0 = values[0] - g0_first

    def flux(s: float) -> np.ndarray:
        if s >= times[0]:
            return op.log_interp_stack(times, values, s)
        return g0_at(s) + corr0

    return flux


# ---------------------------------------------------------------------------
# main entry
# ---------------------------------------------------------------------------

def picard_solve(phi: InitialDatum, config: SolverConfig,
                 exps: WeightedExponentSet | None = None) -> PicardResult:
    """Solve the coupled system by Picard iteration in the damped norm.

    Returns trajectories (v, w, u), the final boundary-flux trajectory, and
    diagnostics with per-iteration damped distances, the damping search
    history, the observed contraction ratio, and the fixed-point residual.
    """
    if exps is None:
        exps = phi.declared_exponents or exponent_set(2, 1.0, INF)
    engine = _Engine(config, exps)
    times = engine.times
    v0, dv0, g0, g0_at = _initial_fields(engine, phi)

    damping = config.damping_M
    damping_history = [damping]
    energy_curves = []   # per-iteration difference energies
    distances = []

    v_prev, dv_prev, g_prev = v0, dv0, g0

    e0, _ = engine.energy_curve(v0, dv0, g0)
    initial_norm = engine.xtm(e0, damping)

    converged = False
    iterations = 0
    flux_fn = _flux_fn(times, g0, g0_at, g0[0])

    def ratios_at(m):
        xs = [engine.xtm(e, m) for e in energy_curves]
        return [xs[i] / xs[i - 1] for i in range(1, len(xs)) if xs[i - 1] > 0]

    for k in range(config.max_iterations):
        iterations = k + 1
        stack = engine.f_cache(flux_fn)
        d_new = np.empty_like(v0)
        dd_new = np.empty_like(v0)
        fd_new = np.empty_like(g0)
        for i, t in enumerate(times):
            d_new[i], dd_new[i], fd_new[i] = engine.duhamel(t, stack)
        v_new = v0 - d_new
        dv_new = dv0 - dd_new
        g_new = g0 - fd_new

        e_diff, _ = engine.energy_curve(v_new - v_prev, dv_new - dv_prev,
                                        g_new - g_prev)
        energy_curves.append(e_diff)

        # damping search: iterates are M-free, so doubling only reweights
        while True:
            rs = ratios_at(damping)
            if not rs or max(rs) <= config.contraction_target:
                break
            if damping >= config.damping_cap:
                raise PicardNonContractionError(rs, damping)
            damping *= 2.0
            damping_history.append(damping)

        distances = [engine.xtm(e, damping) for e in energy_curves]
        v_prev, dv_prev, g_prev = v_new, dv_new, g_new
        flux_fn = _flux_fn(times, g_new, g0_at, g0[0])

        if distances[0] == 0.0 or distances[-1] <= config.picard_tol * distances[0]:
            converged = True
            break

    # fixed-point residual: v + D[v] - S1 phi, one extra application
    stack = engine.f_cache(flux_fn)
    r_v = np.empty_like(v0)
    r_dv = np.empty_like(v0)
    r_g = np.empty_like(g0)
    for i, t in enumerate(times):
        d_i, dd_i, fd_i = engine.duhamel(t, stack)
        r_v[i] = v_prev[i] + d_i - v0[i]
        r_dv[i] = dv_prev[i] + dd_i - dv0[i]
        r_g[i] = g_prev[i] + fd_i - g0[i]
    e_res, _ = engine.energy_curve(r_v, r_dv, r_g)
    residual = engine.xtm(e_res, damping)

    # boundary-generated part and the full solution
    w_vals = np.stack([engine.w_field(t, flux_fn) for t in times])
    u_vals = v_prev + w_vals

    e_v, argmax = engine.energy_curve(v_prev, dv_prev, g_prev)
    counts = {}
    for r in argmax:
        counts[r] = counts.get(r, 0) + 1

    grid = engine.grid
    mesh = np.stack(np.meshgrid(engine.a, engine.b, indexing="ij"), axis=-1)
    try:
        from .norms import weighted_lq_norm
        phi_field = grid.field(np.asarray(phi(mesh), dtype=float))
        datum_norm = weighted_lq_norm(phi_field, exps.q, exps.alpha_p)
    except (OverflowError, ValueError):
        datum_norm = float("nan")

    diag = SolverDiagnostics(
        iterations=iterations,
        converged=converged,
        final_damping=damping,
        distances=distances,
        contraction_ratios=ratios_at(damping),
        damping_history=damping_history,
        residual=residual,
        residual_relative=residual / initial_norm if initial_norm > 0 else 0.0,
        initial_norm=initial_norm,
        solution_norm=engine.xtm(e_v, damping),
        datum_weighted_norm=datum_norm,
        r_argmax_counts=counts,
    )
    flux_traj = op.BoundaryTrajectory(times, g_prev, engine.a, engine.wa,
                                      early_model=flux_fn)
    return PicardResult(
        v=FieldTrajectory(times, v_prev, grid),
        w=FieldTrajectory(times, w_vals, grid),
        u=FieldTrajectory(times, u_vals, grid),
        flux=flux_traj,
        diagnostics=diag,
    )


def apply_D(flux: op.BoundaryTrajectory, x, t: float, config: SolverConfig,
            exps: WeightedExponentSet | None = None) -> float:
    """Duhamel operator D[v](x, t) evaluated from a flux trajectory.

    The S1-of-F composition is assembled on the config grid per time node
    (time-outer, space-inner); the point value is bilinear off the grid.
    """
    engine = _Engine(config, exps or exponent_set(2, 1.0, INF))
    flux_fn = lambda s: flux.at(s)
    stack = engine.f_cache(flux_fn)
    d, _, _ = engine.duhamel(t, stack)
    return _bilinear(engine.a, engine.b, d, point_x=np.asarray(x, dtype=float))


def duhamel_field(flux: op.BoundaryTrajectory, t: float, config: SolverConfig,
                  exps: WeightedExponentSet | None = None):
    """D[v](t), its normal derivative, and its boundary flux as grid arrays."""
    engine = _Engine(config, exps or exponent_set(2, 1.0, INF))
    stack = engine.f_cache(lambda s: flux.at(s))
    return engine.duhamel(t, stack)


def _bilinear(a, b, values, point_x):
    xi = np.clip(np.searchsorted(a, point_x[0]) - 1, 0, a.size - 2)
    yi = np.clip(np.searchsorted(b, point_x[1]) - 1, 0, b.size - 2)
    fx = (point_x[0] - a[xi]) / (a[xi + 1] - a[xi])
    fy = (point_x[1] - b[yi]) / (b[yi + 1] - b[yi])
    fx, fy = np.clip(fx, 0, 1), np.clip(fy, 0, 1)
    v = values
    return float((1 - fx) * (1 - fy) * v[xi, yi] + fx * (1 - fy) * v[xi + 1, yi]
                 + (1 - fx) * fy * v[xi, yi + 1] + fx * fy * v[xi + 1, yi + 1])
