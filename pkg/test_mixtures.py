"""Tests for point-level mixtures and component builders."""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from conftest import random_components
from vrmix.exceptions import InvalidInputError
from vrmix.mixtures import (
    attach_uniform,
    build_blob_components,
    build_distance_components,
    load_components_csv,
    mixture_prob,
    mixture_probs,
    sample_atom,
    sample_atoms,
    set_component_rows,
)
from vrmix.models import MixtureWeights


class TestAttachUniform:
    def test_appends_uniform_row(self):
        cs = attach_uniform(np.array([[0.5, 0.5, 0.0, 0.0]]))
        assert cs.k == 2
        assert cs.n == 4
        assert_allclose(cs.p[-1], np.full(4, 0.25))
        assert cs.c == pytest.approx(2.0)

    def test_empty_component_list(self):
        cs = attach_uniform(np.zeros((0, 5)), n=5)
        assert cs.k == 1
        assert cs.c == pytest.approx(1.0)

    def test_rows_must_be_stochastic(self):
        with pytest.raises(InvalidInputError):
            attach_uniform(np.array([[0.5, 0.2]]))
        with pytest.raises(InvalidInputError):
            attach_uniform(np.array([[1.5, -0.5]]))
        with pytest.raises(InvalidInputError):
            attach_uniform(np.array([[0.0, 0.0]]))

    def test_small_drift_renormalized(self):
        cs = attach_uniform(np.array([[0.5 + 1e-8, 0.5]]))
        assert cs.p[0].sum() == pytest.approx(1.0, abs=1e-15)


class TestSampling:
    def test_mixture_probs_sum_to_one(self, small_components, rng):
        w = rng.dirichlet(np.ones(small_components.k))
        q = mixture_probs(small_components, w)
        assert q.sum() == pytest.approx(1.0)
        assert mixture_prob(small_components, w, 3) == pytest.approx(q[3])

    def test_atom_index_checked(self, small_components):
        with pytest.raises(InvalidInputError):
            mixture_prob(small_components, np.ones(4) / 4, 20)

    def test_uniform_only_weights_are_exactly_one(self, rng):
        cs = attach_uniform(np.zeros((0, 7)), n=7)
        _, r = sample_atoms(cs, np.array([1.0]), rng, 500)
        assert np.all(r == 1.0)

    def test_single_draw_matches_batch_draw(self, small_components):
        w = MixtureWeights(w=np.array([0.1, 0.2, 0.3, 0.4]), gamma=0.1)
        a = np.random.default_rng(3)
        b = np.random.default_rng(3)
        for _ in range(50):
            i, r = sample_atom(small_components, w, a)
            atoms, rs = sample_atoms(small_components, w, b, 1)
            assert i == atoms[0]
            assert r == rs[0]

    def test_frequencies_follow_mixture(self):
        cs = attach_uniform(np.array([[0.7, 0.1, 0.1, 0.1, 0.0], [0.0, 0.0, 0.2, 0.3, 0.5]]))
        w = np.array([0.5, 0.3, 0.2])
        atoms, _ = sample_atoms(cs, w, np.random.default_rng(0), 40_000)
        observed = np.bincount(atoms, minlength=cs.n)
        expected = mixture_probs(cs, w) * atoms.size
        assert stats.chisquare(observed, expected).pvalue > 1e-3

    def test_importance_weighting_is_unbiased(self, small_components):
        rng = np.random.default_rng(1)
        values = rng.uniform(size=small_components.n)
        w = np.array([0.4, 0.3, 0.2, 0.1])
        atoms, r = sample_atoms(small_components, w, rng, 200_000)
        est = r * values[atoms]
        se = est.std() / np.sqrt(est.size)
        assert abs(est.mean() - values.mean()) < 4 * se


class TestBuilders:
    def test_blob_components(self):
        points = np.zeros((6, 2))
        ids = np.array([0, 1, 2, 0, 1, 2])
        cs = build_blob_components(points, ids, eps_mass=0.1)
        assert cs.k == 4
        assert_allclose(cs.p[0, ids == 0].sum(), 0.9)
        assert_allclose(cs.p[0, ids != 0], 0.1 / 4)
        assert cs.c == pytest.approx(6 * 0.45)

    def test_blob_components_validation(self):
        points = np.zeros((4, 2))
        with pytest.raises(InvalidInputError):
            build_blob_components(points, np.array([0, 0, 1, 1]), eps_mass=0.0)
        with pytest.raises(InvalidInputError):
            build_blob_components(points, np.array([0, 0, 1, 1]), eps_mass=0.1, blob_count=3)

    def test_distance_components(self, rng):
        points = rng.normal(size=(30, 3))
        cs = build_distance_components(points, points[:4])
        assert cs.k == 5
        assert_allclose(cs.p.sum(axis=1), 1.0)
        assert np.all(cs.p > 0.0)
        # the anchor itself is the least likely atom of its component
        assert np.argmin(cs.p[0]) == 0

    def test_distance_component_degenerate_center(self, caplog):
        points = np.ones((5, 2))
        with caplog.at_level(logging.WARNING):
            cs = build_distance_components(points, points[:1])
        assert_allclose(cs.p[0], np.full(5, 0.2))
        assert "coincide" in caplog.text

    def test_distance_components_dimension_check(self, rng):
        with pytest.raises(InvalidInputError):
            build_distance_components(rng.normal(size=(5, 2)), rng.normal(size=(2, 3)))


class TestTimeVaryingComponents:
    def test_replace_rows(self, rng):
        cs = random_components(6, 3, rng)
        rows = rng.dirichlet(np.ones(6), size=2)
        updated = set_component_rows(cs, 10, rows)
        assert updated.effective_round == 10
        assert_allclose(updated.p[:2], rows)
        assert_array_equal(updated.p[-1], cs.p[-1])

    def test_full_rows_need_uniform_last(self, rng):
        cs = random_components(6, 3, rng)
        with pytest.raises(InvalidInputError):
            set_component_rows(cs, 5, rng.dirichlet(np.ones(6), size=3))
        with pytest.raises(InvalidInputError):
            set_component_rows(cs, 5, rng.dirichlet(np.ones(6), size=1))


class TestLoadComponents:
    def test_load(self, tmp_path):
        path = tmp_path / "components.csv"
        path.write_text("component,atom,prob\n0,0,0.5\n0,2,0.5\n1,1,1.0\n")
        cs = load_components_csv(path)
        assert cs.k == 3
        assert cs.n == 3
        assert_allclose(cs.p[0], [0.5, 0.0, 0.5])

    def test_explicit_atom_count(self, tmp_path):
        path = tmp_path / "components.csv"
        path.write_text("component,atom,prob\n0,0,1.0\n")
        assert load_components_csv(path, n=4).n == 4

    def test_errors(self, tmp_path):
        bad_header = tmp_path / "a.csv"
        bad_header.write_text("c,a,p\n0,0,1\n")
        with pytest.raises(InvalidInputError):
            load_components_csv(bad_header)

        bad_value = tmp_path / "b.csv"
        bad_value.write_text("component,atom,prob\n0,0,x\n")
        with pytest.raises(InvalidInputError, match=":2:"):
            load_components_csv(bad_value)

        with pytest.raises(FileNotFoundError):
            load_components_csv(tmp_path / "missing.csv")
