"""Closed-form kernels for the half-space heat problem with a dynamical boundary.

Provides the Gauss kernel, the Dirichlet heat kernel of the upper half-space
(image-charge construction), its normal-derivative kernel, and the
Poisson-type boundary kernel P together with its time derivative and
normalization constant.  All functions are vectorized over numpy arrays;
points of the half-space are arrays whose *last* component is the height
x_N >= 0 and whose leading components are the tangential coordinates x'.

Evaluations near the boundary subtract the two Gaussian exponentials in
log-space (``expm1``) so the image-charge difference never cancels
catastrophically.  Times below ``TIME_FLOOR`` are rejected rather than
clamped: every kernel is singular as t -> 0 and silent clamping would
corrupt decay-rate fits downstream.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import integrate

TIME_FLOOR = 1e-12


def _check_time(t, name: str = "t") -> None:
    t = np.asarray(t)
    if np.any(t < TIME_FLOOR):
        raise ValueError(
            f"{name} must be >= {TIME_FLOOR:g} (kernels are singular as t -> 0); got {t}"
        )


def validate_dimension(n: int) -> int:
    if int(n) != n or n < 2:
        raise ValueError(f"spatial dimension must be an integer >= 2, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class HalfSpacePoint:
    """A point (x', x_N) of the closed half-space, x_N >= 0."""

    tangential: np.ndarray
    height: float

    def __post_init__(self):
        tan = np.atleast_1d(np.asarray(self.tangential, dtype=float))
        if tan.ndim != 1:
            raise ValueError("tangential coordinates must be a 1-d vector")
        if self.height < 0:
            raise ValueError(f"height must be >= 0, got {self.height}")
        object.__setattr__(self, "tangential", tan)
        object.__setattr__(self, "height", float(self.height))

    @property
    def n(self) -> int:
        return self.tangential.size + 1

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.tangential, [self.height]])

    def __array__(self, dtype=None):
        a = self.as_array()
        return a.astype(dtype) if dtype is not None else a


def point_as_array(x) -> np.ndarray:
    """Coerce a HalfSpacePoint or array-like into a float array (..., N)."""
    if isinstance(x, HalfSpacePoint):
        return x.as_array()
    return np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# Gauss and Dirichlet heat kernels
# ---------------------------------------------------------------------------

def gauss1d(dx, t):
    """One-dimensional Gauss kernel (4 pi t)^(-1/2) exp(-dx^2 / 4t), elementwise."""
    _check_time(t)
    dx = np.asarray(dx, dtype=float)
    return np.exp(-dx * dx / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)


def gauss_kernel(z, t):
    """Gauss kernel in R^d evaluated at displacement ``z``.

    Parameters
    ----------
    z : array_like
        Displacement vector(s).  A scalar is treated as d=1; otherwise the
        last axis is the vector dimension d, so shape (..., d) evaluates a
        batch of points.
    t : float
        Time, strictly positive.

    Returns
    -------
    float or ndarray
        (4 pi t)^(-d/2) exp(-|z|^2 / 4t); strictly positive.
    """
    _check_time(t)
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        d = 1
        sq = z * z
    else:
        d = z.shape[-1]
        sq = np.sum(z * z, axis=-1)
    return np.exp(-sq / (4.0 * t)) * (4.0 * np.pi * t) ** (-d / 2.0)


def dirichlet_height_factor(x_h, y_h, t):
    """Height factor Gamma_1(x_N - y_N, t) - Gamma_1(x_N + y_N, t), stably.

    The difference equals Gamma_1(x_N - y_N, t) * (-expm1(-x_N y_N / t)),
    exact for all arguments and free of cancellation near the boundary.
    """
    _check_time(t)
    x_h = np.asarray(x_h, dtype=float)
    y_h = np.asarray(y_h, dtype=float)
    return gauss1d(x_h - y_h, t) * (-np.expm1(-x_h * y_h / t))


def height_derivative_factor(x_h, y_h, t):
    """d/dx_N of the height factor, in the cancellation-free form.

    Equals -(x_N-y_N)/(2t) Gamma_1(x_N-y_N,t) + (x_N+y_N)/(2t) Gamma_1(x_N+y_N,t),
    rewritten as Gamma_1(x_N-y_N,t) * (2 y_N + (x_N+y_N) expm1(-x_N y_N / t)) / 2t.
    """
    _check_time(t)
    x_h = np.asarray(x_h, dtype=float)
    y_h = np.asarray(y_h, dtype=float)
    bracket = 2.0 * y_h + (x_h + y_h) * np.expm1(-x_h * y_h / t)
    return gauss1d(x_h - y_h, t) * bracket / (2.0 * t)


def dirichlet_heat_kernel(x, y, t):
    """Dirichlet heat kernel of the half-space (image-charge construction).

    ``x`` may lie on the closed half-space, ``y`` in the open one; both are
    HalfSpacePoint or arrays (..., N) with the height last.  Vanishes
    identically at x_N = 0.
    """
    _check_time(t)
    x = point_as_array(x)
    y = point_as_array(y)
    tan = gauss_kernel(x[..., :-1] - y[..., :-1], t)
    return tan * dirichlet_height_factor(x[..., -1], y[..., -1], t)


def normal_derivative_kernel(x, y, t):
    """K(x, y, t) = d/dx_N of the Dirichlet heat kernel.

    At x_N = 0 this reduces to (y_N / t) Gamma_{N-1}(x'-y', t) Gamma_1(y_N, t),
    the boundary-trace form.
    """
    _check_time(t)
    x = point_as_array(x)
    y = point_as_array(y)
    tan = gauss_kernel(x[..., :-1] - y[..., :-1], t)
    return tan * height_derivative_factor(x[..., -1], y[..., -1], t)


# ---------------------------------------------------------------------------
# Boundary kernel P and its time derivative
# ---------------------------------------------------------------------------

_POISSON_CONSTANTS: dict[int, float] = {}
_POISSON_LOCK = threading.Lock()


def _tangential_dimension(z: np.ndarray, n: int | None) -> int:
    # scalars (or arrays without a vector axis matching n-1) mean N = 2
    if n is None:
        n = 2 if z.ndim == 0 else z.shape[-1] + 1
    return validate_dimension(n)


def _tangential_sq(z: np.ndarray, n: int) -> np.ndarray:
    if n == 2 and (z.ndim == 0 or z.shape[-1] != 1):
        return z * z
    if z.shape[-1] != n - 1:
        raise ValueError(
            f"tangential vector has length {z.shape[-1]}, expected {n - 1}"
        )
    return np.sum(z * z, axis=-1)


def _poisson_profile_integral(n: int) -> float:
    # integral over R^{n-1} of (1 + |z|^2)^{-n/2}, reduced to the radial line
    if n == 2:
        val, _ = integrate.quad(lambda z: (1.0 + z * z) ** -1.0, -np.inf, np.inf)
        return val
    omega = 2.0 * math.pi ** ((n - 1) / 2.0) / math.gamma((n - 1) / 2.0)
    val, _ = integrate.quad(
        lambda r: r ** (n - 2) * (1.0 + r * r) ** (-n / 2.0), 0.0, np.inf
    )
    return omega * val


def poisson_constant(n: int) -> float:
    """Normalization constant C_N making the boundary kernel a unit measure.

    Computed once per dimension by adaptive quadrature and cached;
    initialization is idempotent and race-free.
    """
    n = validate_dimension(n)
    c = _POISSON_CONSTANTS.get(n)
    if c is None:
        with _POISSON_LOCK:
            c = _POISSON_CONSTANTS.get(n)
            if c is None:
                c = 1.0 / _poisson_profile_integral(n)
                _POISSON_CONSTANTS[n] = c
    return c


def boundary_kernel_scale(z_tangential, scale, n: int | None = None):
    """Boundary kernel P as a function of its single scale s = x_N + t.

    P(z, s) = C_N s^{1-N} (1 + |z/s|^2)^{-N/2}; ``z_tangential`` has the
    tangential dimension N-1 on the last axis (scalars mean N = 2).
    """
    z = np.asarray(z_tangential, dtype=float)
    n = _tangential_dimension(z, n)
    scale = np.asarray(scale, dtype=float)
    if np.any(scale < TIME_FLOOR):
        raise ValueError(
            f"boundary kernel scale x_N + t must be >= {TIME_FLOOR:g}; got {scale}"
        )
    sq = _tangential_sq(z, n)
    c = poisson_constant(n)
    return c * scale ** (1 - n) * (1.0 + sq / (scale * scale)) ** (-n / 2.0)


def boundary_kernel(x_tangential, x_height, t, n: int | None = None):
    """Poisson-type boundary kernel P(x', x_N, t).

    Depends on x_N and t only through the scale s = x_N + t > 0; the point
    (x_N, t) = (0, 0) is the (excluded) singular point.
    """
    x_height = np.asarray(x_height, dtype=float)
    if np.any(x_height < 0):
        raise ValueError("x_height must be >= 0")
    return boundary_kernel_scale(x_tangential, x_height + np.asarray(t, dtype=float), n=n)


def dt_boundary_kernel(x_tangential, x_height, t, n: int | None = None):
    """Time derivative of the boundary kernel.

    Equals (x_N+t)^{-1} * [(|x'|^2 - (N-1)(x_N+t)^2) / (|x'|^2 + (x_N+t)^2)] * P,
    so it changes sign on the cone |x'| = sqrt(N-1) (x_N + t).
    """
    z = np.asarray(x_tangential, dtype=float)
    n = _tangential_dimension(z, n)
    x_height = np.asarray(x_height, dtype=float)
    if np.any(x_height < 0):
        raise ValueError("x_height must be >= 0")
    s = x_height + np.asarray(t, dtype=float)
    if np.any(s < TIME_FLOOR):
        raise ValueError(f"x_height + t must be >= {TIME_FLOOR:g}")
    sq = _tangential_sq(z, n)
    bracket = (sq - (n - 1) * s * s) / (sq + s * s)
    return bracket / s * boundary_kernel_scale(z, s, n=n)
