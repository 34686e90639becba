"""Quadrature contracts: truncation, tail corrections, singular time rules."""

import math

import numpy as np
import pytest

from halfheat import kernels as kn
from halfheat import quadrature as quad


def default_spec(**kw):
    base = dict(truncation_radius_sigmas=8.0, nodes_per_dimension=32,
                scheme="gauss_legendre_composite")
    base.update(kw)
    return quad.SpatialQuadratureSpec(**base)


class TestSpecValidation:
    def test_spatial_invariants(self):
        with pytest.raises(ValueError):
            quad.SpatialQuadratureSpec(truncation_radius_sigmas=4)
        with pytest.raises(ValueError):
            quad.SpatialQuadratureSpec(nodes_per_dimension=8)
        with pytest.raises(ValueError):
            quad.SpatialQuadratureSpec(scheme="simpson")

    def test_time_invariants(self):
        with pytest.raises(ValueError):
            quad.SingularTimeSpec(left_exponent=1.0)
        with pytest.raises(ValueError):
            quad.SingularTimeSpec(left_exponent=0.6, right_exponent=0.6)
        with pytest.raises(ValueError):
            quad.SingularTimeSpec(panels=4)


class TestIntegrateHalfspace:
    def test_zero(self):
        spec = default_spec()
        c = np.array([0.0, 1.0])
        val = quad.integrate_halfspace(lambda p: np.zeros(p.shape[:-1]), c, 1.0, spec)
        assert val == 0.0

    def test_free_gaussian_normalizes(self):
        spec = default_spec(truncation_radius_sigmas=10.0, nodes_per_dimension=48)
        c = np.array([0.0, 6.0])  # far from the boundary
        val = quad.integrate_halfspace(lambda p: kn.gauss_kernel(p - c, 0.3), c, 0.3, spec)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_dirichlet_mass_richardson_ratio(self):
        # trapezoid self-convergence: halving h should divide the error by ~4
        c = np.array([0.0, 1.0])
        vals = []
        for nodes in (32, 64, 128):
            spec = default_spec(nodes_per_dimension=nodes, scheme="trapezoid")
            vals.append(quad.integrate_halfspace(
                lambda p: kn.dirichlet_heat_kernel(c, p, 1.0), c, 1.0, spec))
        assert 0.0 < vals[-1] < 1.0
        ratio = (vals[1] - vals[0]) / (vals[2] - vals[1])
        assert ratio >= 3.9

    def test_linearity(self):
        spec = default_spec()
        c = np.array([0.0, 1.0])
        f = lambda p: kn.dirichlet_heat_kernel(c, p, 0.5)
        g = lambda p: kn.gauss_kernel(p - c, 0.5)
        a, b = 1.7, -0.3
        lhs = quad.integrate_halfspace(lambda p: a * f(p) + b * g(p), c, 0.5, spec)
        rhs = (a * quad.integrate_halfspace(f, c, 0.5, spec)
               + b * quad.integrate_halfspace(g, c, 0.5, spec))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_determinism(self):
        spec = default_spec()
        c = np.array([0.3, 0.8])
        f = lambda p: kn.dirichlet_heat_kernel(c, p, 0.7)
        v1 = quad.integrate_halfspace(f, c, 0.7, spec)
        v2 = quad.integrate_halfspace(f, c, 0.7, spec)
        assert v1 == v2  # bit identical

    def test_nonfinite_sample_reported(self):
        spec = default_spec()
        c = np.array([0.0, 1.0])

        def bad(p):
            v = np.ones(p.shape[:-1])
            v[..., 0] = np.inf
            return v

        with pytest.raises(quad.NonFiniteSampleError):
            quad.integrate_halfspace(bad, c, 1.0, spec)


class TestIntegrateBoundary:
    def test_zero(self):
        spec = default_spec()
        assert quad.integrate_boundary(lambda z: np.zeros_like(z), 0.0, 1.0, spec) == 0.0

    def test_tangential_gaussian(self):
        spec = default_spec(truncation_radius_sigmas=10.0)
        t = 0.7
        val = quad.integrate_boundary(lambda z: kn.gauss1d(z, t), 0.0,
                                      math.sqrt(2 * t), spec)
        assert val == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("n", [2, 3])
    def test_poisson_normalization_grid(self, n):
        # 3x3 grid of (x_N, t) spanning three orders of magnitude
        spec = default_spec(truncation_radius_sigmas=128.0, nodes_per_dimension=16)
        center = 0.0 if n == 2 else np.zeros(2)
        for xh in (0.0, 1.0, 10.0):
            for t in (0.1, 1.0, 10.0):
                val = quad.integrate_boundary(
                    lambda z: kn.boundary_kernel(z, xh, t, n=n),
                    center, xh + t, spec, tail_coefficient=1.0)
                assert abs(val - 1.0) <= 1e-6

    def test_tail_correction_off_by_default(self):
        # without the correction the fat Poisson tail is visibly missing
        spec = default_spec(truncation_radius_sigmas=8.0)
        val = quad.integrate_boundary(lambda z: kn.boundary_kernel(z, 0.0, 1.0, n=2),
                                      0.0, 1.0, spec)
        assert 0.9 < val < 1.0
        assert abs(val - 1.0) > 1e-3


class TestIntegrateTimeSingular:
    def test_inverse_sqrt(self):
        spec = quad.SingularTimeSpec(0.5, 0.0, panels=8)
        val = quad.integrate_time_singular(lambda s: s ** -0.5, 1.0, spec)
        assert val == pytest.approx(2.0, abs=1e-8)

    def test_beta_function(self):
        spec = quad.SingularTimeSpec(0.5, 0.5, panels=8)
        val = quad.integrate_time_singular(
            lambda s: s ** -0.5 * (1 - s) ** -0.5, 1.0, spec)
        assert val == pytest.approx(math.pi, abs=1e-6)

    def test_constant(self):
        spec = quad.SingularTimeSpec(0.0, 0.0, panels=8)
        val = quad.integrate_time_singular(lambda s: np.ones_like(s), 2.0, spec)
        assert val == pytest.approx(2.0, abs=1e-10)

    def test_linearity_and_determinism(self):
        spec = quad.SingularTimeSpec(0.5, 0.5, panels=8)
        f = lambda s: s ** -0.25
        g = lambda s: (2.0 - s) ** -0.5
        lhs = quad.integrate_time_singular(lambda s: 2 * f(s) - 0.5 * g(s), 2.0, spec)
        rhs = (2 * quad.integrate_time_singular(f, 2.0, spec)
               - 0.5 * quad.integrate_time_singular(g, 2.0, spec))
        assert lhs == pytest.approx(rhs, rel=1e-12)
        assert (quad.integrate_time_singular(f, 2.0, spec)
                == quad.integrate_time_singular(f, 2.0, spec))

    def test_graded_resolves_exponential_layer(self):
        # e^{-M sigma} sigma^{-1/2} over (0, t): closed form via gamma tail
        from scipy.special import gammainc

        m, t = 4096.0, 1.0
        spec = quad.SingularTimeSpec(0.5, 0.0, panels=24, grading_ratio=0.5)
        val = quad.integrate_time_singular(lambda s: np.exp(-m * s) * s ** -0.5, t, spec)
        exact = math.sqrt(math.pi / m) * gammainc(0.5, m * t)
        assert val == pytest.approx(exact, rel=1e-8)


class TestRefinementStability:
    def test_doubling_nodes_is_stable(self):
        c = np.array([0.0, 1.0])
        f = lambda p: kn.dirichlet_heat_kernel(c, p, 1.0)
        base = quad.integrate_halfspace(f, c, 1.0, default_spec(nodes_per_dimension=48))
        fine = quad.integrate_halfspace(f, c, 1.0, default_spec(nodes_per_dimension=96))
        assert abs(fine - base) < 1e-9
