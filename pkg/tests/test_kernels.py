"""Kernel identities: closed forms, factorization, traces, derivatives."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfheat import kernels as kn

# symbolic evaluations, frozen (see docstrings of the producing expressions)
GAUSS_0_1 = 0.28209479177387814          # (4 pi)^(-1/2)
GAUSS_2_1 = 0.10377687435514868          # (4 pi)^(-1/2) e^(-1)
GD_UNIT = 0.050302555783788088           # (4 pi)^(-1) (1 - e^(-1))
K_TRACE_UNIT = 0.061974997154826483      # (4 pi)^(-1) e^(-1/4)


def pt(tan, h):
    return kn.HalfSpacePoint(np.atleast_1d(np.asarray(tan, dtype=float)), h)


class TestGaussKernel:
    def test_symbolic_values(self):
        assert kn.gauss_kernel(0.0, 1.0) == pytest.approx(GAUSS_0_1, rel=1e-14)
        assert kn.gauss_kernel(2.0, 1.0) == pytest.approx(GAUSS_2_1, rel=1e-14)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_normalization(self, d):
        # midpoint quadrature over [-12 sigma, 12 sigma]^d at t = 0.5
        t = 0.5
        r = 12.0 * math.sqrt(2 * t)
        n = 160
        ax = np.linspace(-r, r, n, endpoint=False) + r / n
        mesh = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1)
        total = np.sum(kn.gauss_kernel(mesh, t)) * (2 * r / n) ** d
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_rejects_bad_time(self):
        with pytest.raises(ValueError):
            kn.gauss_kernel(0.0, 0.0)
        with pytest.raises(ValueError):
            kn.gauss_kernel(0.0, -1.0)
        with pytest.raises(ValueError):
            kn.gauss_kernel(0.0, 1e-13)  # below the rejection floor


class TestDirichletHeatKernel:
    def test_boundary_vanishing_exact(self):
        x0 = pt(0.3, 0.0)
        for yh in (0.1, 1.0, 5.0):
            assert kn.dirichlet_heat_kernel(x0, pt(-0.2, yh), 0.7) == 0.0

    def test_symbolic_value(self):
        x = pt(0.0, 1.0)
        assert kn.dirichlet_heat_kernel(x, x, 1.0) == pytest.approx(GD_UNIT, rel=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(
        xt=st.floats(-3, 3), yt=st.floats(-3, 3),
        xh=st.floats(0.05, 4.0), yh=st.floats(0.05, 4.0),
        t=st.floats(0.01, 5.0),
    )
    def test_factorization(self, xt, yt, xh, yh, t):
        # product form: tangential Gauss times (difference of 1-d Gauss factors);
        # heights bounded away from 0 so the naive-difference oracle itself
        # keeps full precision
        x, y = pt(xt, xh), pt(yt, yh)
        lhs = kn.dirichlet_heat_kernel(x, y, t)
        rhs = kn.gauss_kernel(xt - yt, t) * (
            kn.gauss_kernel(xh - yh, t) - kn.gauss_kernel(xh + yh, t)
        )
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)

    def test_near_boundary_no_cancellation(self):
        # both heights tiny: the difference of exponentials is ~ x_N y_N / t
        v = kn.dirichlet_heat_kernel(pt(0.0, 1e-9), pt(0.0, 1e-9), 1.0)
        expected = (4 * math.pi) ** -1 * (1e-18)  # leading order
        assert v == pytest.approx(expected, rel=1e-6)


class TestNormalDerivativeKernel:
    def test_trace_symbolic_value(self):
        v = kn.normal_derivative_kernel(pt(0.0, 0.0), pt(0.0, 1.0), 1.0)
        assert v == pytest.approx(K_TRACE_UNIT, rel=1e-13)

    def test_trace_product_form(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            xt, yt = rng.normal(size=2)
            yh = rng.uniform(0.01, 3.0)
            t = rng.uniform(0.05, 2.0)
            lhs = kn.normal_derivative_kernel(pt(xt, 0.0), pt(yt, yh), t)
            rhs = (yh / t) * kn.gauss_kernel(xt - yt, t) * kn.gauss_kernel(yh, t)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_trace_linear_in_small_height(self):
        base = kn.normal_derivative_kernel(pt(0.0, 0.0), pt(0.0, 1e-6), 1.0)
        half = kn.normal_derivative_kernel(pt(0.0, 0.0), pt(0.0, 5e-7), 1.0)
        assert base / half == pytest.approx(2.0, rel=1e-5)

    def test_matches_finite_difference_of_dirichlet(self):
        # central difference in x_N, O(h^2) oracle
        h = 1e-4
        rng = np.random.default_rng(11)
        for _ in range(10):
            xt, yt = rng.normal(size=2)
            xh = rng.uniform(0.2, 2.0)
            yh = rng.uniform(0.2, 2.0)
            t = rng.uniform(0.2, 2.0)
            up = kn.dirichlet_heat_kernel(pt(xt, xh + h), pt(yt, yh), t)
            dn = kn.dirichlet_heat_kernel(pt(xt, xh - h), pt(yt, yh), t)
            fd = (up - dn) / (2 * h)
            exact = kn.normal_derivative_kernel(pt(xt, xh), pt(yt, yh), t)
            assert fd == pytest.approx(exact, rel=5e-7, abs=1e-12)


class TestPoissonConstant:
    def test_quadrature_oracle(self):
        # reciprocal of the profile integral, evaluated independently per dim
        from scipy.integrate import quad

        prof2, _ = quad(lambda z: (1 + z * z) ** -1.0, -np.inf, np.inf)
        assert kn.poisson_constant(2) == pytest.approx(1.0 / prof2, abs=1e-8)
        prof3, _ = quad(lambda r: 2 * np.pi * r * (1 + r * r) ** -1.5, 0, np.inf)
        assert kn.poisson_constant(3) == pytest.approx(1.0 / prof3, abs=1e-8)

    def test_closed_form(self):
        # textbook Poisson-kernel constant Gamma(N/2) / pi^(N/2)
        for n in (2, 3, 4):
            closed = math.gamma(n / 2) / math.pi ** (n / 2)
            assert kn.poisson_constant(n) == pytest.approx(closed, rel=1e-10)

    def test_idempotent(self):
        assert kn.poisson_constant(2) == kn.poisson_constant(2)

    def test_rejects_small_dimension(self):
        with pytest.raises(ValueError):
            kn.poisson_constant(1)


class TestBoundaryKernel:
    def test_center_value(self):
        assert kn.boundary_kernel(0.0, 0.0, 1.0) == pytest.approx(1 / math.pi, rel=1e-12)

    def test_scale_shift_identity_exact(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            z = rng.normal()
            xh = rng.uniform(0, 3)
            t = rng.uniform(0.01, 3)
            assert kn.boundary_kernel(z, xh, t) == kn.boundary_kernel(z, 0.0, xh + t)

    def test_positive(self):
        z = np.linspace(-50, 50, 101)
        assert np.all(kn.boundary_kernel(z, 0.3, 0.2, n=2) > 0)

    def test_singular_point_rejected(self):
        with pytest.raises(ValueError):
            kn.boundary_kernel(1.0, 0.0, 0.0)


class TestDtBoundaryKernel:
    def test_center_value(self):
        # bracket equals -(N-1) at x' = 0
        v = kn.dt_boundary_kernel(0.0, 0.0, 1.0)
        assert v == pytest.approx(-1 / math.pi, rel=1e-12)

    def test_sign_change_on_cone(self):
        for n, xh, t in [(2, 0.0, 1.0), (2, 0.5, 0.25), (3, 0.2, 0.8)]:
            s = xh + t
            rc = math.sqrt(n - 1) * s
            z_in = np.full(n - 1, 0.99 * rc / math.sqrt(n - 1))
            z_out = np.full(n - 1, 1.01 * rc / math.sqrt(n - 1))
            v_in = kn.dt_boundary_kernel(z_in if n > 2 else float(z_in[0]), xh, t, n=n)
            v_out = kn.dt_boundary_kernel(z_out if n > 2 else float(z_out[0]), xh, t, n=n)
            assert v_in < 0 < v_out

    def test_pointwise_bound(self):
        # |dtP| <= (N-1) (x_N + t)^{-1} P on a random sample
        rng = np.random.default_rng(42)
        for n in (2, 3):
            z = rng.normal(scale=3.0, size=(1000, n - 1))
            xh = rng.uniform(0, 5, size=1000)
            t = rng.uniform(0.01, 5, size=1000)
            lhs = np.abs(kn.dt_boundary_kernel(z, xh, t, n=n))
            rhs = (n - 1) / (xh + t) * kn.boundary_kernel(z, xh, t, n=n)
            assert np.all(lhs <= rhs * (1 + 1e-12))

    def test_matches_finite_difference(self):
        # central difference in t, step 1e-5, away from the zero crossing
        h = 1e-5
        cases = [(0.0, 0.0, 1.0), (0.4, 0.5, 0.7), (3.0, 0.2, 0.6), (-1.2, 1.5, 2.0)]
        for z, xh, t in cases:
            s = xh + t
            if abs(abs(z) - s) < 0.2 * s:  # skip near the crossing
                continue
            fd = (kn.boundary_kernel(z, xh, t + h) - kn.boundary_kernel(z, xh, t - h)) / (2 * h)
            exact = kn.dt_boundary_kernel(z, xh, t)
            assert fd == pytest.approx(exact, rel=1e-6)


class TestHalfSpacePoint:
    def test_validation(self):
        with pytest.raises(ValueError):
            kn.HalfSpacePoint(np.array([0.0]), -0.1)

    def test_array_protocol(self):
        p = kn.HalfSpacePoint(np.array([1.0, 2.0]), 3.0)
        assert p.n == 3
        np.testing.assert_allclose(np.asarray(p), [1.0, 2.0, 3.0])
