"""Norm axioms, weight monotonicity, exponent arithmetic, damped sup norm."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfheat import norms as nr

INF = math.inf


def unit_box_field(n=40, value=1.0):
    # indicator-like field on [0,1]^2 embedded in a [-1,1] x (0,1] grid
    grid = nr.HalfSpaceGrid(tangential_extent=1.0, tangential_nodes=2 * n,
                            height_extent=1.0, height_nodes=n)
    tan = grid.tangential_axis
    vals = np.where(tan[:, None] > 0, value, 0.0) * np.ones(n)
    return grid.field(vals)


def random_field(seed, n=24):
    rng = np.random.default_rng(seed)
    grid = nr.HalfSpaceGrid(tangential_extent=2.0, tangential_nodes=n,
                            height_extent=1.5, height_nodes=n)
    return grid, grid.field(rng.normal(size=(n, n)))


class TestWeightH:
    def test_values(self):
        assert nr.weight_h(0.0) == 0.0
        assert nr.weight_h(1.0) == 0.5
        assert nr.weight_h(1e6) >= 1 - 2e-6

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            nr.weight_h(-0.5)


class TestAlphaOf:
    def test_arithmetic(self):
        assert nr.alpha_of(2, 1.0, INF) == pytest.approx(2.0)
        assert nr.alpha_of(3, 2.0, 4.0) == pytest.approx(1.0)
        assert nr.alpha_of(2, 3.0, 3.0) == pytest.approx(1 / 3)

    def test_order_enforced(self):
        with pytest.raises(ValueError):
            nr.alpha_of(2, 2.0, 1.0)


class TestExponentSet:
    def test_admissibility(self):
        s = nr.exponent_set(2, 1.0, INF)
        assert s.alpha_p == pytest.approx(2.0)
        with pytest.raises(ValueError):
            nr.exponent_set(2, 1.0, 2.0)  # p must exceed Nq/(N-1) = 2
        with pytest.raises(ValueError):
            nr.exponent_set(2, INF, 4.0)  # q = inf forces p = inf

    def test_default_r_set(self):
        assert nr.default_r_values(nr.exponent_set(2, 1.0, 3.0)) == (1.0, 2.0, 3.0)
        assert nr.default_r_values(nr.exponent_set(2, 1.0, INF)) == (1.0, INF)


class TestMembershipCriterion:
    def test_examples(self):
        s = nr.exponent_set(2, 1.0, INF)
        assert nr.membership_criterion(2.0, s) is True
        assert nr.membership_criterion(0.5, s) is False
        assert nr.membership_criterion(1.0, s) is False  # exactly at threshold


class TestLpNorm:
    def test_zero(self):
        _, f = random_field(0)
        zero = nr.SampledField(f.axes, np.zeros_like(f.values), f.spacings)
        assert nr.lp_norm(zero, 2.0) == 0.0
        assert nr.lp_norm(zero, INF) == 0.0

    def test_unit_box(self):
        f = unit_box_field()
        for r in (1.0, 2.0, 7.0):
            assert nr.lp_norm(f, r) == pytest.approx(1.0, rel=1e-12)
        assert nr.lp_norm(f, INF) == 1.0

    @settings(max_examples=25, deadline=None)
    @given(c=st.floats(-10, 10), seed=st.integers(0, 100))
    def test_homogeneity(self, c, seed):
        _, f = random_field(seed)
        scaled = nr.SampledField(f.axes, c * f.values, f.spacings)
        for r in (1.0, 3.0, INF):
            assert nr.lp_norm(scaled, r) == pytest.approx(abs(c) * nr.lp_norm(f, r),
                                                          rel=1e-10, abs=1e-13)

    def test_triangle_inequality(self):
        g, f1 = random_field(1)
        f2 = g.field(np.random.default_rng(2).normal(size=f1.values.shape))
        s = nr.SampledField(f1.axes, f1.values + f2.values, f1.spacings)
        for r in (1.0, 2.0, 5.0, INF):
            assert nr.lp_norm(s, r) <= nr.lp_norm(f1, r) + nr.lp_norm(f2, r) + 1e-10


class TestWeightedNorm:
    def test_monotone_in_alpha(self):
        # exact inequality for every sampled field: h < 1 so h^{-alpha} increases
        for seed in range(5):
            _, f = random_field(seed)
            for q in (1.0, 2.0):
                a = nr.weighted_lq_norm(f, q, 0.3)
                b = nr.weighted_lq_norm(f, q, 0.9)
                assert a <= b

    def test_alpha_zero_matches_plain(self):
        _, f = random_field(3)
        assert nr.weighted_lq_norm(f, 2.0, 0.0) == pytest.approx(nr.lp_norm(f, 2.0))

    def test_sup_norm_drops_weight(self):
        _, f = random_field(4)
        assert nr.weighted_lq_norm(f, INF, 5.0) == nr.lp_norm(f, INF)

    def test_overflow_reported(self):
        grid = nr.HalfSpaceGrid(1.0, 8, 1.0, 8)
        f = grid.field(np.ones((8, 8)))
        with pytest.raises(OverflowError):
            nr.weighted_lq_norm(f, 2.0, 1e5)


class TestEnergyFunctional:
    def exps(self):
        return nr.exponent_set(2, 1.0, 4.0)

    def test_zero(self):
        rec = nr.TimeSliceNorms(0.0, 0.0, {1.0: 0.0, 4.0: 0.0})
        assert nr.energy_functional(rec, 0.5, self.exps()) == 0.0

    def test_q_equals_p_prefactor(self):
        # q = p is admissible only at the inf endpoint; prefactor t^0 = 1 there
        s = nr.exponent_set(2, INF, INF, INF)
        rec = nr.TimeSliceNorms(2.0, 0.0, {INF: 0.0})
        assert nr.energy_functional(rec, 0.01, s) == pytest.approx(2.0)
        assert nr.energy_functional(rec, 7.3, s) == pytest.approx(2.0)

    def test_homogeneity(self):
        rec1 = nr.TimeSliceNorms(1.0, 2.0, {1.0: 0.5, 4.0: 3.0})
        rec2 = nr.TimeSliceNorms(2.0, 4.0, {1.0: 1.0, 4.0: 6.0})
        e1 = nr.energy_functional(rec1, 0.7, self.exps())
        e2 = nr.energy_functional(rec2, 0.7, self.exps())
        assert e2 == pytest.approx(2 * e1, rel=1e-12)

    def test_empty_r_set_rejected(self):
        rec = nr.TimeSliceNorms(1.0, 1.0, {})
        with pytest.raises(ValueError):
            nr.energy_functional(rec, 1.0, self.exps())


class TestXtmNorm:
    def test_constant_energy_m_zero(self):
        params = nr.DampedNormParams(horizon_T=1.0, damping_M=0.0)
        samples = [(t, 3.0) for t in np.linspace(0.1, 1.0, 7)]
        assert nr.xtm_norm(samples, params) == pytest.approx(3.0)

    def test_single_sample(self):
        params = nr.DampedNormParams(horizon_T=1.0, damping_M=1.0)
        assert nr.xtm_norm([(1.0, 2.0)], params) == pytest.approx(2.0 / math.e)

    def test_strong_damping(self):
        params = nr.DampedNormParams(horizon_T=1.0, damping_M=100.0)
        samples = [(t, 1.0) for t in np.linspace(0.1, 1.0, 10)]
        assert nr.xtm_norm(samples, params) <= math.exp(-10)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            nr.xtm_norm([], nr.DampedNormParams(1.0, 1.0))

    def test_time_outside_horizon_rejected(self):
        with pytest.raises(ValueError):
            nr.xtm_norm([(2.0, 1.0)], nr.DampedNormParams(1.0, 1.0))
