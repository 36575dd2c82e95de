"""Tests for simplex projections."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from vrmix.exceptions import InvalidInputError
from vrmix.models import RestrictedSimplexSpec
from vrmix.simplex import (
    grid_projection,
    h_norm_objective,
    proj_h_norm,
    proj_restricted,
    proj_simplex,
)


class TestProjSimplex:
    def test_feasible_point_unchanged(self):
        assert_array_equal(proj_simplex(np.array([0.25, 0.75])), [0.25, 0.75])

    def test_known_projections(self):
        assert_allclose(proj_simplex(np.array([2.0, 0.0])), [1.0, 0.0])
        assert_allclose(proj_simplex(np.array([1.0, 1.0, 1.0])), np.full(3, 1 / 3))
        assert_allclose(proj_simplex(np.array([0.5, 0.5, -3.0])), [0.5, 0.5, 0.0])

    def test_scaled_mass(self):
        x = proj_simplex(np.array([3.0, 1.0]), z=2.0)
        assert_allclose(x, [2.0, 0.0])

    def test_single_coordinate_is_exact(self):
        assert proj_simplex(np.array([-7.3]))[0] == 1.0

    def test_rejects_bad_input(self):
        with pytest.raises(InvalidInputError):
            proj_simplex(np.array([]))
        with pytest.raises(InvalidInputError):
            proj_simplex(np.array([np.nan, 1.0]))
        with pytest.raises(InvalidInputError):
            proj_simplex(np.array([1.0, 0.0]), z=0.0)

    def test_output_on_simplex(self, rng):
        for _ in range(100):
            x = proj_simplex(rng.normal(scale=3.0, size=5))
            assert np.all(x >= 0.0)
            assert abs(x.sum() - 1.0) < 1e-12


class TestProjRestricted:
    def test_floor_is_enforced(self):
        spec = RestrictedSimplexSpec(k=2, gamma=0.3)
        assert_allclose(proj_restricted(np.array([1.0, 0.0]), spec), [0.7, 0.3])

    def test_interior_point_unchanged(self):
        spec = RestrictedSimplexSpec(k=3, gamma=0.2)
        w = np.array([0.3, 0.3, 0.4])
        assert_array_equal(proj_restricted(w, spec), w)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            proj_restricted(np.ones(3) / 3, RestrictedSimplexSpec(k=2, gamma=0.1))

    def test_feasible_and_idempotent(self, rng):
        for _ in range(300):
            k = int(rng.choice([2, 3, 4, 6]))
            spec = RestrictedSimplexSpec(k=k, gamma=float(rng.choice([0.05, 0.2, 0.5])))
            x = proj_restricted(rng.normal(scale=2.0, size=k), spec)
            assert spec.contains(x)
            assert_array_equal(proj_restricted(x, spec), x)

    @pytest.mark.parametrize("k", [2, 3, 4])
    @pytest.mark.parametrize("gamma", [0.05, 0.2, 0.5])
    def test_matches_grid_oracle(self, k, gamma, rng):
        spec = RestrictedSimplexSpec(k=k, gamma=gamma)
        for _ in range(15):
            w = rng.normal(scale=2.0, size=k)
            oracle = grid_projection(w, spec, step=1e-3)
            assert np.linalg.norm(proj_restricted(w, spec) - oracle) <= 2e-3


class TestProjHNorm:
    def test_identity_metric_matches_euclidean(self, rng):
        spec = RestrictedSimplexSpec(k=3, gamma=0.2)
        for _ in range(20):
            w = rng.normal(size=3)
            assert_allclose(proj_h_norm(w, np.eye(3), spec), proj_restricted(w, spec), atol=1e-8)

    def test_not_worse_than_grid_oracle(self, rng):
        spec = RestrictedSimplexSpec(k=3, gamma=0.1)
        for _ in range(10):
            A = rng.normal(size=(3, 3))
            H = np.eye(3) + 0.3 * A @ A.T / 3
            w = rng.normal(size=3)
            x = proj_h_norm(w, H, spec)
            oracle = grid_projection(w, spec, H=H, step=1e-3)
            assert spec.contains(x)
            assert h_norm_objective(x, w, H) <= h_norm_objective(oracle, w, H) + 1e-6

    def test_objective_not_above_warm_start(self, rng):
        spec = RestrictedSimplexSpec(k=4, gamma=0.25)
        A = rng.normal(size=(4, 4))
        H = A @ A.T + 0.1 * np.eye(4)
        w = rng.normal(size=4)
        x = proj_h_norm(w, H, spec)
        start = proj_restricted(w, spec)
        assert h_norm_objective(x, w, H) <= h_norm_objective(start, w, H) + 1e-12

    def test_objective_never_increases(self, rng):
        for k, gamma in ((3, 0.1), (4, 0.25), (6, 0.05)):
            spec = RestrictedSimplexSpec(k=k, gamma=gamma)
            A = rng.normal(size=(k, k))
            H = A @ A.T + 0.05 * np.eye(k)
            w = rng.normal(scale=3.0, size=k)
            history = []
            x = proj_h_norm(w, H, spec, max_iters=200, tol=0.0, history=history)
            assert len(history) == 201
            assert history[0] == pytest.approx(h_norm_objective(proj_restricted(w, spec), w, H))
            assert history[-1] == pytest.approx(h_norm_objective(x, w, H))
            for before, after in zip(history, history[1:]):
                assert after <= before + 1e-12 * max(1.0, before)

    def test_rejects_invalid_metric(self):
        spec = RestrictedSimplexSpec(k=2, gamma=0.1)
        w = np.array([0.5, 0.5])
        with pytest.raises(InvalidInputError):
            proj_h_norm(w, np.array([[1.0, 0.5], [0.0, 1.0]]), spec)
        with pytest.raises(InvalidInputError):
            proj_h_norm(w, np.array([[1.0, 0.0], [0.0, -1.0]]), spec)
        with pytest.raises(InvalidInputError):
            proj_h_norm(w, np.eye(3), spec)
