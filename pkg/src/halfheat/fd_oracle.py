"""Explicit finite-difference oracle for the dynamical-boundary heat problem.

Cross-validates the kernel construction u = v + w: the interior evolves by
the standard 2N+1-point explicit heat stencil, the boundary row by the
first-order one-sided discretization of the dynamical law d_t u = d_{x_N} u
(the outward normal derivative enters with a minus sign), far walls are
homogeneous Dirichlet, and the initial boundary row is exactly zero.

The scheme is deliberately the simplest one whose error model is
transparent: first order in dx through the boundary row, so oracle gaps
shrink by ~2 per refinement level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datum import InitialDatum


@dataclass(frozen=True)
class FDGrid:
    """Uniform node-centered grid on [-L, L] x [0, H] with explicit stepping.

    Stability requires dt <= dx^2 / (2 N); violations are configuration
    errors raised before any stepping.
    """

    tangential_extent: float
    height_extent: float
    dx: float
    dt: float

    def __post_init__(self):
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("dx and dt must be positive")

    @property
    def n(self) -> int:
        return 2  # stencil below is written for one tangential dimension

    @property
    def tangential_axis(self) -> np.ndarray:
        m = int(round(2 * self.tangential_extent / self.dx))
        return -self.tangential_extent + self.dx * np.arange(m + 1)

    @property
    def height_axis(self) -> np.ndarray:
        m = int(round(self.height_extent / self.dx))
        return self.dx * np.arange(m + 1)

    def check_stability(self):
        limit = self.dx * self.dx / (2 * self.n)
        if self.dt > limit * (1 + 1e-12):
            raise ValueError(
                f"explicit scheme unstable: dt={self.dt:g} > dx^2/(2N)={limit:g}"
            )


@dataclass
class FDState:
    """Grid values including the x_N = 0 layer (the dynamical unknown)."""

    values: np.ndarray  # (n_tan, n_height), column 0 is the boundary row

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("state values must be finite")


def fd_step(state: FDState, grid: FDGrid, dynamic_boundary: bool = True) -> FDState:
    """One explicit step: interior heat stencil plus the boundary-row update.

    ``dynamic_boundary`` False freezes the x_N = 0 row (plain Dirichlet), the
    interior-only sanity mode.
    """
    grid.check_stability()
    u = state.values
    lam = grid.dt / (grid.dx * grid.dx)
    new = u.copy()
    new[1:-1, 1:-1] = u[1:-1, 1:-1] + lam * (
        u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2]
        - 4.0 * u[1:-1, 1:-1])
    # far walls stay homogeneous Dirichlet
    new[0, :] = 0.0
    new[-1, :] = 0.0
    new[:, -1] = 0.0
    if dynamic_boundary:
        # d_t u = d_{x_N} u on the boundary row, first-order one-sided
        new[1:-1, 0] = u[1:-1, 0] + grid.dt * (u[1:-1, 1] - u[1:-1, 0]) / grid.dx
    return FDState(new)


def fd_initial_state(phi: InitialDatum, grid: FDGrid) -> FDState:
    """Sample phi on the interior, zero on the boundary row and far walls."""
    ta, ha = grid.tangential_axis, grid.height_axis
    mesh = np.stack(np.meshgrid(ta, ha, indexing="ij"), axis=-1)
    vals = np.asarray(phi(mesh), dtype=float)
    vals[:, 0] = 0.0  # initial boundary row is exactly zero
    vals[0, :] = 0.0
    vals[-1, :] = 0.0
    vals[:, -1] = 0.0
    return FDState(vals)


@dataclass
class FDTrajectory:
    """FD solution sampled at requested times on the FD grid."""

    times: np.ndarray
    values: np.ndarray  # (n_times, n_tan, n_height)
    grid: FDGrid

    def interp(self, points) -> np.ndarray:
        """Bilinear interpolation of each time slice at stacked points (..., 2)."""
        from scipy.interpolate import RegularGridInterpolator

        out = []
        for i in range(len(self.times)):
            f = RegularGridInterpolator(
                (self.grid.tangential_axis, self.grid.height_axis), self.values[i])
            out.append(f(points))
        return np.stack(out)


def fd_solve(phi: InitialDatum, grid: FDGrid, horizon: float,
             sample_times=None, dynamic_boundary: bool = True) -> FDTrajectory:
    """March the explicit scheme to the horizon, sampling at the given times.

    Samples snap to the nearest completed step (the step count per sample is
    rounded, never truncated past the horizon).
    """
    grid.check_stability()
    if sample_times is None:
        sample_times = [horizon]
    sample_times = np.asarray(sorted(sample_times), dtype=float)
    if np.any(sample_times <= 0) or sample_times[-1] > horizon * (1 + 1e-12):
        raise ValueError("sample times must lie in (0, horizon]")
    state = fd_initial_state(phi, grid)
    target_steps = np.rint(sample_times / grid.dt).astype(int)
    out = np.empty((len(sample_times), *state.values.shape))
    step = 0
    for j, target in enumerate(target_steps):
        while step < target:
            state = fd_step(state, grid, dynamic_boundary=dynamic_boundary)
            step += 1
        out[j] = state.values
    return FDTrajectory(np.asarray(sample_times, dtype=float), out, grid)
