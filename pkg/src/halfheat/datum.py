"""Initial data for the half-space problem, including the power-law family.

The test family is separable, phi(x) = Phi(x') Psi(x_N) with Psi(x_N) = x_N^lambda
below height one and a decaying tail above; separability lets the solver
evolve the heat part of each factor by accurate one-dimensional quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .norms import WeightedExponentSet


@dataclass
class InitialDatum:
    """Initial datum phi on the open half-space.

    ``evaluator`` maps stacked points (..., N) to values.  When the datum is
    separable, ``tangential_profile`` (plain tangential values for N = 2,
    (..., N-1) arrays otherwise) and ``height_profile`` are set and the
    evaluator is their product.  Support intervals and split points are
    quadrature hints: splits mark kinks or integrable singularities of the
    profiles.
    """

    n: int
    evaluator: Callable
    tangential_profile: Optional[Callable] = None
    height_profile: Optional[Callable] = None
    declared_exponents: Optional[WeightedExponentSet] = None
    lam: Optional[float] = None
    tangential_support: tuple = (-np.inf, np.inf)
    height_support: tuple = (0.0, np.inf)
    tangential_splits: tuple = ()
    height_splits: tuple = ()

    @property
    def separable(self) -> bool:
        return self.tangential_profile is not None and self.height_profile is not None

    def __call__(self, points):
        return self.evaluator(np.asarray(points, dtype=float))


def separable_datum(n, tangential_profile, height_profile, **kw) -> InitialDatum:
    """Assemble a separable datum phi(x) = Phi(x') Psi(x_N)."""

    def evaluator(points):
        points = np.asarray(points, dtype=float)
        tan = points[..., :-1]
        if n == 2:
            tan = tan[..., 0]
        return tangential_profile(tan) * height_profile(points[..., -1])

    return InitialDatum(n=n, evaluator=evaluator,
                        tangential_profile=tangential_profile,
                        height_profile=height_profile, **kw)


def gaussian_profile(width: float = 1.0, amplitude: float = 1.0, center=0.0,
                     tangential_dim: int = 1):
    """exp(-|x' - c|^2 / width^2) over the tangential hyperplane.

    For ``tangential_dim`` 1 the argument is a plain array of scalars; for 2
    the last axis carries the vector components.
    """
    center = np.asarray(center, dtype=float)

    def profile(xt):
        xt = np.asarray(xt, dtype=float)
        diff = xt - center
        d2 = diff * diff if tangential_dim == 1 else np.sum(diff * diff, axis=-1)
        return amplitude * np.exp(-d2 / (width * width))

    return profile


def power_height_profile(lam: float, tail: str = "gaussian"):
    """Psi(x_N) = x_N^lambda for x_N <= 1, a continuous decaying tail above.

    Tails: "gaussian" -> exp(1 - x_N^2); "exponential" -> exp(1 - x_N);
    both equal 1 at x_N = 1, matching the power branch.
    """
    if tail == "gaussian":
        tail_fn = lambda h: np.exp(1.0 - h * h)
        support_hi = 7.0
    elif tail == "exponential":
        tail_fn = lambda h: np.exp(1.0 - h)
        support_hi = 40.0
    else:
        raise ValueError(f"unknown tail {tail!r}")

    def profile(h):
        h = np.asarray(h, dtype=float)
        with np.errstate(invalid="ignore"):
            low = np.where(h > 0, h, 0.0) ** lam
        return np.where(h <= 1.0, np.where(h > 0, low, 0.0), tail_fn(h))

    return profile, support_hi


def power_law_datum(
    n: int,
    lam: float,
    amplitude: float = 1.0,
    tangential_width: float = 1.0,
    tail: str = "gaussian",
    declared_exponents: WeightedExponentSet | None = None,
) -> InitialDatum:
    """Power-law family datum: Gaussian tangential bump times x_N^lambda profile."""
    phi_tan = gaussian_profile(width=tangential_width, amplitude=amplitude,
                               tangential_dim=n - 1)
    psi, support_hi = power_height_profile(lam, tail=tail)
    tan_half = 7.0 * tangential_width
    return separable_datum(
        n, phi_tan, psi,
        declared_exponents=declared_exponents,
        lam=lam,
        tangential_support=(-tan_half, tan_half),
        height_support=(0.0, support_hi),
        height_splits=(1.0,),
    )


def zero_datum(n: int = 2) -> InitialDatum:
    """phi identically zero (trivial fixed point)."""
    return separable_datum(n, lambda xt: np.zeros(np.shape(xt)),
                           lambda h: np.zeros(np.shape(h)),
                           tangential_support=(-1.0, 1.0), height_support=(0.0, 1.0))


def critical_power_profile(gamma: float, center: float = 0.0,
                           inner_cut: float = 0.02, outer_cut: float = 2.0):
    """1-d bump |x - c|^{-gamma} clipped inside ``inner_cut``, zero past ``outer_cut``.

    Slightly supercritical gamma makes smoothing-rate fits track the stated
    power over a clean self-similar window.
    """
    cap = inner_cut ** -gamma

    def profile(x):
        x = np.asarray(x, dtype=float)
        r = np.abs(x - center)
        with np.errstate(divide="ignore"):
            v = np.where(r >= inner_cut, r ** -gamma, cap)
        return np.where(r <= outer_cut, v, 0.0)

    return profile
