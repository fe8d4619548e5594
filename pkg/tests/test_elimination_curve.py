from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curriculum_elim.elimination_curve import (
    CurveSpec,
    OrbitEnd,
    beta,
    default_tau_min,
    has_fixed_point_above,
    iterate,
    jump_points,
    make_curve,
    rounds_needed,
)
from curriculum_elim.errors import ParamOutOfRange, TauOutOfRange
from curriculum_elim.experiments import example_curve


def flat_curve(q2, n_sources=10, tau_min=0.2):
    return make_curve([q2] * n_sources, [1.0] * n_sources, tau_min * n_sources, n_sources, 1, 1.0, tau_min)


def random_curve(seed, equal_variance=False):
    rng = np.random.default_rng(seed)
    n_src = int(rng.integers(1, 60))
    sig = np.full(n_src, 0.5) if equal_variance else rng.uniform(0.05, 1.0, n_src)
    q2 = rng.exponential(1.0, n_src) * rng.choice([0.01, 1.0, 100.0])
    return make_curve(q2, sig, float(rng.uniform(0.1, 3.0)), int(rng.integers(10, 500)), int(rng.integers(1, 4)),
                      float(rng.uniform(1, 200)))


class TestBeta:
    def test_all_at_target(self):
        curve = flat_curve(0.0)
        assert all(beta(curve, tau) == 1.0 for tau in (0.05, 0.2, 0.5, 1.0))

    def test_all_far(self):
        curve = flat_curve(1e9)
        assert all(beta(curve, tau) == 0.0 for tau in (0.05, 0.5, 1.0))

    def test_example_first_case(self):
        assert beta(example_curve("example1"), 1.0) == pytest.approx(0.729)

    def test_example_second_case(self):
        assert beta(example_curve("example1_fixed_point"), 1.0) == 1.0

    def test_tau_range(self):
        curve = flat_curve(0.0)
        for tau in (0.0, -0.1, 1.0001):
            with pytest.raises(TauOutOfRange):
                beta(curve, tau)

    def test_boundary_uses_low_branch(self):
        # Barrier at tau_min with the upper branch would be 2 (two sources); the low branch uses sigma0_2 = 1.
        curve = make_curve([0.5, 1.5, 1.5, 1.5], [1.0] * 4, 1.0, 1, 1, 1.0, 0.5)
        assert beta(curve, 0.5) == 0.25
        assert beta(curve, 0.51) == 1.0

    def test_sorted_order_used_for_pooled_variance(self):
        curve = make_curve([3.0, 0.0], [5.0, 1.0], 0.1, 1, 1, 1.0, 0.01)
        assert list(curve.q2s) == [0.0, 3.0]
        assert beta(curve, 0.5) == 0.5
        assert beta(curve, 1.0) == 1.0

    def test_default_tau_min(self):
        assert default_tau_min([0.1] * 100, 1.0) == pytest.approx(0.1)
        assert default_tau_min([0.5] * 3, 10.0) == 1.0
        curve = make_curve([0.0] * 100, [0.1] * 100, 1.0, 1000, 2, 1.0)
        assert curve.tau_min == pytest.approx(0.1)

    def test_unsorted_spec_rejected(self):
        with pytest.raises(ParamOutOfRange):
            CurveSpec(np.array([2.0, 1.0]), np.ones(2), 1.0, 1, 1, 1.0, 0.5)

    @given(st.integers(0, 10**6))
    @settings(max_examples=60, deadline=None)
    def test_range_and_lattice(self, seed):
        curve = random_curve(seed)
        n_src = curve.n_sources
        for tau in np.linspace(1 / (4 * n_src), 1.0, 40):
            value = beta(curve, float(tau))
            assert 0.0 <= value <= 1.0
            assert value * n_src == pytest.approx(round(value * n_src), abs=1e-9)

    @given(st.integers(0, 10**6))
    @settings(max_examples=60, deadline=None)
    def test_equal_variance_monotone(self, seed):
        curve = random_curve(seed, equal_variance=True)
        values = [v for tau, v in jump_points(curve) if tau > curve.tau_min]
        assert all(a <= b for a, b in zip(values, values[1:]))

    @given(st.integers(0, 10**6))
    @settings(max_examples=30, deadline=None)
    def test_piecewise_constant_between_jumps(self, seed):
        curve = random_curve(seed)
        n_src = curve.n_sources
        pieces = dict(jump_points(curve))
        for tau in np.linspace(1e-4, 1.0, 500):
            m = math.ceil(round(tau * n_src, 9))
            if m / n_src > curve.tau_min and tau <= curve.tau_min:
                continue
            assert beta(curve, float(tau)) == pieces[m / n_src]


class TestIterate:
    def test_fixed_point_at_one(self):
        orbit = iterate(flat_curve(0.0), 5)
        assert orbit.taus == [1.0, 1.0]
        assert orbit.end is OrbitEnd.FIXED_POINT and orbit.fixed_point_at_one

    def test_collapse(self):
        orbit = iterate(flat_curve(1e9), 5)
        assert orbit.taus == [1.0, 0.0] and orbit.end is OrbitEnd.BELOW_TAU_MIN

    def test_example_first_case_reaches_floor_in_three(self):
        orbit = iterate(example_curve("example1"), 10)
        assert orbit.taus == pytest.approx([1.0, 0.729, 0.282, 0.016])
        assert orbit.end is OrbitEnd.BELOW_TAU_MIN
        assert len(orbit.taus) - 1 == 3

    def test_example_second_case_stalls(self):
        orbit = iterate(example_curve("example1_fixed_point"), 10)
        assert orbit.fixed_point_at_one

    def test_zero_steps(self):
        assert iterate(flat_curve(0.0), 0).taus == [1.0]
        with pytest.raises(ParamOutOfRange):
            iterate(flat_curve(0.0), -1)

    def test_max_steps(self):
        orbit = iterate(example_curve("example1"), 1)
        assert orbit.taus == pytest.approx([1.0, 0.729]) and orbit.end is OrbitEnd.MAX_STEPS


class TestRoundsNeeded:
    def test_equal(self):
        assert rounds_needed(0.3, 0.3) == pytest.approx(1.0)

    def test_half(self):
        assert rounds_needed(0.5, 0.125) == pytest.approx(3.0)

    @pytest.mark.parametrize(("beta_bar", "tau_min"), [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)])
    def test_ranges(self, beta_bar, tau_min):
        with pytest.raises(ParamOutOfRange):
            rounds_needed(beta_bar, tau_min)

    @given(st.floats(0.01, 0.99), st.floats(1e-6, 0.99))
    def test_envelope_simulation(self, beta_bar, tau_min):
        steps, tau = 0, 1.0
        while tau > tau_min * (1 + 1e-12):
            tau *= beta_bar
            steps += 1
        assert steps == max(0, math.ceil(rounds_needed(beta_bar, tau_min) - 1e-9))


class TestFixedPoint:
    def test_example_second_case(self):
        assert has_fixed_point_above(example_curve("example1_fixed_point")) == 1.0

    def test_example_first_case_has_none(self):
        assert has_fixed_point_above(example_curve("example1")) is None

    def test_collapse_has_none(self):
        assert has_fixed_point_above(flat_curve(1e9)) is None

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_matches_dense_grid(self, seed):
        curve = random_curve(seed)
        found = has_fixed_point_above(curve)
        dense = np.linspace(0.0, 1.0, 10_001)[1:]
        dense = dense[dense > curve.tau_min]
        hits = [tau for tau in dense if beta(curve, float(tau)) >= tau]
        if found is None:
            assert not hits
        else:
            assert hits and max(hits) <= found + 1e-12
            assert found - max(hits) <= 1.0 / curve.n_sources + 1e-12
