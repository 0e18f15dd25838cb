from dataclasses import replace

import numpy as np
import pytest

from hslearn import (
    Dataset,
    Hypersphere,
    advance_schedule,
    draw_centers,
    init_schedule,
    points_in_sphere,
    standardize,
    stratified_sample,
)
from hslearn.errors import DegenerateInputError, ParameterError, ShapeError


def toy_dataset(n, d, seed=0, classes=2):
    rng = np.random.default_rng(seed)
    return Dataset(
        rng.standard_normal((n, d)),
        rng.integers(0, classes, n),
        [f"f{j}" for j in range(d)],
        classes,
    )


class TestInitSchedule:
    def test_iris_values(self, iris_train):
        state = init_schedule(iris_train, total_steps=5)
        assert state.radius == pytest.approx(0.1, abs=1e-12)
        assert state.radius_step == pytest.approx(0.3, abs=1e-12)
        assert state.sphere_count == 10  # floor(1.5) clipped up to 10
        assert state.sample_fraction == 1.0
        assert state.n_keep == 4  # ceil(0.9 * 4)
        assert state.n_extract == 4

    def test_large_n_clipped_to_twenty(self):
        data = toy_dataset(3000, 3, seed=1)
        state = init_schedule(data, total_steps=5)
        assert state.sphere_count == 20

    def test_radius_scales_with_spread(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((200, 3))
        x = (x - x.mean(0)) / x.std(0, ddof=1) * 2.0  # all stds exactly 2
        data = Dataset(x, rng.integers(0, 2, 200), list("abc"), 2)
        state = init_schedule(data, total_steps=3)
        assert state.radius == pytest.approx(0.2, abs=1e-12)
        assert state.radius_step == pytest.approx(0.6, abs=1e-12)

    def test_all_constant_rejected(self):
        data = Dataset(np.full((10, 2), 3.0), [0, 1] * 5, ["a", "b"], 2)
        with pytest.raises(DegenerateInputError):
            init_schedule(data, total_steps=2)

    def test_sphere_count_never_exceeds_n(self):
        data = toy_dataset(6, 2, seed=3)
        assert init_schedule(data, total_steps=1).sphere_count == 6


class TestAdvanceSchedule:
    def test_sphere_count_update(self, iris_train):
        state = init_schedule(iris_train, total_steps=5)
        assert advance_schedule(state, 4).sphere_count == 8  # 10 - ceil(2)

    def test_sample_fraction_decays_to_floor(self, iris_train):
        state = init_schedule(iris_train, total_steps=30)
        assert advance_schedule(state, 4).sample_fraction == pytest.approx(0.95)
        for _ in range(16):
            state = advance_schedule(state, 4)
        assert state.sample_fraction == 0.2

    def test_feature_count_floor(self):
        data = toy_dataset(700, 617, seed=4)
        state = replace(init_schedule(data, total_steps=2), n_keep=555, n_extract=555)
        state = advance_schedule(state, 617)
        assert state.n_keep == 50  # max(555 - 528, 50)
        assert state.n_extract == 50

    def test_counts_clamped_to_current_d(self, iris_train):
        state = init_schedule(iris_train, total_steps=5)
        advanced = advance_schedule(state, 2)
        assert advanced.n_keep <= 2
        assert advanced.n_extract <= 2

    def test_monotone_properties(self, iris_train):
        state = init_schedule(iris_train, total_steps=20)
        for _ in range(20):
            previous = state
            state = advance_schedule(state, 4)
            assert state.radius > previous.radius
            assert state.sphere_count <= previous.sphere_count
            assert state.sample_fraction <= previous.sample_fraction
            assert state.n_keep <= previous.n_keep
            assert state.n_extract <= previous.n_extract
        assert state.sphere_count >= 1
        assert state.sample_fraction >= 0.2
        assert state.n_keep >= min(50, 4)
        assert state.n_extract >= min(50, 4)


class TestDrawCenters:
    def test_bounding_box_containment(self):
        rng = np.random.default_rng(5)
        data = Dataset(rng.uniform(0, 1, (50, 3)), rng.integers(0, 2, 50), list("abc"), 2)
        centers = draw_centers(data, 40, np.random.default_rng(0))
        assert centers.shape == (40, 3)
        assert (centers >= 0).all() and (centers <= 1).all()
        assert (centers >= data.X.min(0)).all() and (centers <= data.X.max(0)).all()

    def test_single_point_degenerate_range(self):
        data = Dataset(np.tile([2.0, -1.0], (3, 1)), [0, 1, 0], ["a", "b"], 2)
        centers = draw_centers(data, 5, np.random.default_rng(1))
        np.testing.assert_array_equal(centers, np.tile([2.0, -1.0], (5, 1)))

    def test_deterministic(self):
        data = toy_dataset(30, 4, seed=6)
        a = draw_centers(data, 7, np.random.default_rng(42))
        b = draw_centers(data, 7, np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)


class TestPointsInSphere:
    def test_zero_radius_boundary_inclusive(self):
        x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
        got = points_in_sphere(x, Hypersphere(np.zeros(2), 0.0))
        np.testing.assert_array_equal(got, [0, 2])

    def test_huge_radius_catches_all(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((25, 3))
        center = x.mean(axis=0)
        radius = np.linalg.norm(x - center, axis=1).max() + 1.0
        got = points_in_sphere(x, Hypersphere(center, radius))
        np.testing.assert_array_equal(got, np.arange(25))

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((20, 2))
        sphere = Hypersphere(rng.standard_normal(2), 1.2)
        got = set(points_in_sphere(x, sphere).tolist())
        expected = {
            i
            for i in range(20)
            if float(np.linalg.norm(x[i] - sphere.center)) <= sphere.radius
        }
        assert got == expected

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            points_in_sphere(np.zeros((3, 2)), Hypersphere(np.zeros(3), 1.0))


class TestStratifiedSample:
    def test_exact_halves(self):
        y = np.array([0, 0, 1, 1])
        got = stratified_sample(np.arange(4), y, 0.5, np.random.default_rng(0))
        assert got.size == 2
        assert {int(y[i]) for i in got} == {0, 1}

    def test_full_fraction_is_identity(self):
        y = np.array([0, 1, 0, 1, 1])
        got = stratified_sample(np.arange(5), y, 1.0, np.random.default_rng(1))
        np.testing.assert_array_equal(got, np.arange(5))

    def test_ceiling_counts(self):
        y = np.array([0, 0, 0, 1])
        got = stratified_sample(np.arange(4), y, 0.5, np.random.default_rng(2))
        assert int((y[got] == 0).sum()) == 2  # ceil(1.5)
        assert int((y[got] == 1).sum()) == 1  # ceil(0.5)

    def test_subset_and_class_preservation(self):
        rng = np.random.default_rng(3)
        y = rng.integers(0, 3, 60)
        indices = np.flatnonzero(rng.uniform(size=60) < 0.7)
        got = stratified_sample(indices, y, 0.4, np.random.default_rng(4))
        assert set(got.tolist()) <= set(indices.tolist())
        assert set(np.unique(y[got]).tolist()) == set(np.unique(y[indices]).tolist())

    def test_empty_input(self):
        got = stratified_sample(np.array([], dtype=int), np.array([0, 1]), 0.5, np.random.default_rng(0))
        assert got.size == 0

    def test_deterministic(self):
        y = np.array([0, 0, 1, 1, 1, 2, 2, 2, 2])
        a = stratified_sample(np.arange(9), y, 0.5, np.random.default_rng(9))
        b = stratified_sample(np.arange(9), y, 0.5, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_bad_fraction(self):
        with pytest.raises(ParameterError):
            stratified_sample(np.arange(4), np.array([0, 0, 1, 1]), 0.0, np.random.default_rng(0))
