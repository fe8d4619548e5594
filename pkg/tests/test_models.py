from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curriculum_elim.errors import (
    BudgetExceeded,
    DimensionMismatch,
    NormBoundViolation,
    NotPSD,
    VarianceOrderViolation,
)
from curriculum_elim.models import (
    BudgetedSampler,
    build_instance,
    distances,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    save_instance,
)


def simple_instance(n_budget=100):
    return build_instance([(0.0, 0.0), (3.0, 4.0)], [1.0, 0.5], n_budget=n_budget, c_theta=10.0)


class TestBuildInstance:
    def test_identical_means_have_zero_distance(self):
        inst = build_instance([(0, 0), (0, 0)], [1.0, 0.5], n_budget=100, c_theta=10)
        assert distances(inst) == [0.0]
        assert inst.distances[0] == 0.0

    def test_three_four_five(self):
        assert distances(simple_instance()) == [5.0]

    def test_equal_variance_rejected(self):
        with pytest.raises(VarianceOrderViolation):
            build_instance([(0, 0), (0, 0)], [1.0, 1.0], n_budget=100, c_theta=10)

    def test_larger_source_variance_rejected(self):
        with pytest.raises(VarianceOrderViolation):
            build_instance([(0, 0), (0, 0)], [1.0, 2.0], n_budget=100, c_theta=10)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_instance([(0, 0), (0, 0, 0)], [1.0, 0.5], n_budget=100, c_theta=10)
        with pytest.raises(DimensionMismatch):
            build_instance([(0, 0), (0, 0)], [1.0], n_budget=100, c_theta=10)

    def test_norm_bound(self):
        with pytest.raises(NormBoundViolation):
            build_instance([(0, 0), (3, 4)], [1.0, 0.5], n_budget=100, c_theta=4.9)

    def test_covariance_shape_must_have_trace_d(self):
        with pytest.raises(NotPSD):
            build_instance([(0, 0), (0, 0)], [1.0, 0.5], [np.eye(2), 2 * np.eye(2)], n_budget=10, c_theta=1)

    def test_covariance_shape_must_be_psd(self):
        bad = np.array([[3.0, 0.0], [0.0, -1.0]])
        with pytest.raises(NotPSD):
            build_instance([(0, 0), (0, 0)], [1.0, 0.5], [np.eye(2), bad], n_budget=10, c_theta=1)

    def test_covariance_shape_must_be_symmetric(self):
        bad = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(NotPSD):
            build_instance([(0, 0), (0, 0)], [1.0, 0.5], [np.eye(2), bad], n_budget=10, c_theta=1)

    def test_singular_psd_shape_accepted(self):
        inst = build_instance([(0, 0), (0, 0)], [1.0, 0.5], [np.eye(2), np.diag([2.0, 0.0])], n_budget=10, c_theta=1)
        assert inst.sources[0].noise_factor is not None

    def test_distances_in_index_order(self):
        inst = build_instance([(0, 0), (1, 0), (0, 2)], [1.0, 0.5, 0.5], n_budget=10, c_theta=5)
        assert distances(inst) == [1.0, 2.0]

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_distances_match_direct_norm(self, seed):
        rng = np.random.default_rng(seed)
        dim, n_src = rng.integers(1, 6), rng.integers(1, 8)
        thetas = rng.normal(size=(n_src + 1, dim))
        sig = np.sort(rng.uniform(0.1, 1.0, n_src))
        inst = build_instance(list(thetas), [2.0, *sig], n_budget=50, c_theta=100)
        direct = [float(np.sqrt(np.sum((thetas[t] - thetas[0]) ** 2))) for t in range(1, n_src + 1)]
        np.testing.assert_allclose(distances(inst), direct, rtol=0, atol=1e-12)
        np.testing.assert_allclose(inst.distances2[1:], np.square(direct), rtol=1e-12, atol=1e-14)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        inst = build_instance(
            [(0, 0), (1, 2)], [1.0, 0.25], [np.eye(2), np.array([[1.5, 0.2], [0.2, 0.5]])], n_budget=77, c_theta=9
        )
        data = instance_to_dict(inst)
        assert set(data) == {"dim", "n_budget", "c_theta", "tasks"}
        assert "cov_shape" not in instance_to_dict(simple_instance())["tasks"][0]
        back = instance_from_dict(json.loads(json.dumps(data)))
        assert back.n_budget == 77 and back.dim == 2 and back.c_theta == 9
        np.testing.assert_array_equal(back.sources[0].cov_shape, inst.sources[0].cov_shape)
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        assert distances(load_instance(path)) == distances(inst)


class TestSampler:
    def test_zero_noise_returns_mean(self):
        inst = build_instance([(0, 0), (1.5, -2.0)], [1.0, 0.0], n_budget=20, c_theta=10)
        sampler = BudgetedSampler(inst, 3)
        np.testing.assert_array_equal(sampler.draw(1, 7), np.tile([1.5, -2.0], (7, 1)))

    def test_zero_noise_anisotropic_returns_mean(self):
        inst = build_instance([(0, 0), (1.5, -2.0)], [1.0, 0.0], [np.eye(2), np.diag([2.0, 0.0])], n_budget=20, c_theta=10)
        np.testing.assert_array_equal(BudgetedSampler(inst, 3).draw(1, 4), np.tile([1.5, -2.0], (4, 1)))

    def test_budget_boundary(self):
        sampler = BudgetedSampler(simple_instance(n_budget=10), 0)
        sampler.draw(0, 6)
        sampler.draw(1, 4)
        with pytest.raises(BudgetExceeded):
            sampler.draw(0, 1)
        assert sampler.drawn_total == 10

    def test_budget_error_leaves_state_unchanged(self):
        sampler = BudgetedSampler(simple_instance(n_budget=10), 0)
        sampler.draw(0, 3)
        with pytest.raises(BudgetExceeded):
            sampler.draw(1, 8)
        assert sampler.drawn_total == 3
        assert list(sampler.drawn_per_task) == [3, 0]

    def test_law_of_large_numbers(self):
        inst = build_instance([(0, 0), (1, 2)], [2.0, 1.0], n_budget=10**6, c_theta=10)
        sample = BudgetedSampler(inst, 11).draw(1, 10**6)
        np.testing.assert_allclose(sample.mean(axis=0), [1, 2], atol=0.01)

    def test_per_coordinate_variance(self):
        inst = build_instance([(0, 0, 0), (0, 0, 0)], [3.0, 0.7], n_budget=10**5, c_theta=10)
        sample = BudgetedSampler(inst, 5).draw(1, 10**5)
        np.testing.assert_allclose(sample.var(axis=0), 0.7, rtol=0.05)

    def test_anisotropic_covariance(self):
        shape = np.array([[1.5, 0.4], [0.4, 0.5]])
        inst = build_instance([(0, 0), (0, 0)], [1.0, 0.8], [np.eye(2), shape], n_budget=2 * 10**5, c_theta=1)
        sample = BudgetedSampler(inst, 9).draw(1, 2 * 10**5)
        np.testing.assert_allclose(np.cov(sample.T), 0.8 * shape, atol=0.02)

    def test_determinism(self):
        inst = simple_instance(n_budget=50)
        a, b = BudgetedSampler(inst, 42), BudgetedSampler(inst, 42)
        for task, k in [(0, 5), (1, 3), (0, 2), (1, 10)]:
            np.testing.assert_array_equal(a.draw(task, k), b.draw(task, k))
        assert [t for t, _ in a.history()] == [t for t, _ in b.history()]

    def test_task_streams_are_independent_of_interleaving(self):
        inst = simple_instance(n_budget=50)
        a, b = BudgetedSampler(inst, 7), BudgetedSampler(inst, 7)
        first = np.vstack([a.draw(1, 4), a.draw(0, 3), a.draw(1, 6)])
        b.draw(0, 10)
        second = b.draw(1, 10)
        np.testing.assert_array_equal(np.vstack([first[:4], first[7:]]), second)

    def test_different_seeds_differ(self):
        inst = simple_instance()
        assert not np.array_equal(BudgetedSampler(inst, 1).draw(0, 3), BudgetedSampler(inst, 2).draw(0, 3))

    def test_seed_range(self):
        with pytest.raises(ValueError):
            BudgetedSampler(simple_instance(), -1)
        with pytest.raises(ValueError):
            BudgetedSampler(simple_instance(), 2**64)
        BudgetedSampler(simple_instance(), 2**64 - 1).draw(0, 1)

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 15)), max_size=20))
    @settings(max_examples=50, deadline=None)
    def test_budget_conservation(self, requests):
        sampler = BudgetedSampler(simple_instance(n_budget=60), 0)
        for task, k in requests:
            try:
                sampler.draw(task, k)
            except BudgetExceeded:
                assert sampler.drawn_total + k > 60
        history = list(sampler.history())
        assert sampler.drawn_total == int(sampler.drawn_per_task.sum()) == len(history) <= 60
        assert len(sampler.history_tasks()) == len(history)

    def test_fresh_samples_do_not_overlap(self):
        sampler = BudgetedSampler(simple_instance(n_budget=40), 4)
        first = sampler.draw(1, 10)
        second = sampler.draw(1, 10)
        assert not np.any(np.all(first[:, None, :] == second[None, :, :], axis=2))
        stored = [s for _, s in sampler.history()]
        np.testing.assert_array_equal(np.vstack(stored), np.vstack([first, second]))

    def test_samples_are_read_only(self):
        sample = BudgetedSampler(simple_instance(), 0).draw(0, 2)
        with pytest.raises(ValueError):
            sample[0, 0] = 1.0
