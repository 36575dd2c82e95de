"""Tests for the synthetic generators and point-file loading."""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from vrmix.datasets import gen_blobs, gen_clusters, gen_regression, load_points_csv, train_test_split
from vrmix.exceptions import InvalidInputError


class TestBlobs:
    def test_shapes_and_labels(self, rng):
        points, labels, ids = gen_blobs(60, blob_count=6, separation=10.0, rng=rng)
        assert points.shape == (60, 2)
        assert np.bincount(ids).tolist() == [10] * 6
        assert set(labels.tolist()) == {-1.0, 1.0}
        assert np.all(labels[ids < 3] == -1.0)

    def test_blob_means_are_separated(self, rng):
        points, _, ids = gen_blobs(6000, blob_count=3, separation=10.0, rng=rng)
        means = np.array([points[ids == j, 0].mean() for j in range(3)])
        np.testing.assert_allclose(means, [-10.0, 0.0, 10.0], atol=0.2)

    def test_zero_separation_is_allowed(self, rng):
        points, _, _ = gen_blobs(12, blob_count=6, separation=0.0, rng=rng)
        assert np.all(np.isfinite(points))

    def test_validation(self, rng):
        with pytest.raises(InvalidInputError):
            gen_blobs(3, blob_count=6, rng=rng)
        with pytest.raises(InvalidInputError):
            gen_blobs(12, separation=-1.0, rng=rng)
        with pytest.raises(InvalidInputError):
            gen_blobs(12, separation=float("nan"), rng=rng)

    def test_deterministic_for_a_seed(self):
        a = gen_blobs(30, rng=np.random.default_rng(4))
        b = gen_blobs(30, rng=np.random.default_rng(4))
        assert_array_equal(a[0], b[0])


class TestRegression:
    def test_scaled_rows(self):
        X, y, w0 = gen_regression(n=200, d=4, scaled_points=5, scale=100.0, rng=np.random.default_rng(0))
        assert X.shape == (200, 4)
        assert y.shape == (200,)
        assert w0.shape == (4,)
        norms = np.linalg.norm(X, axis=1)
        assert np.sum(norms > 5 * np.median(norms)) == 5

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            gen_regression(n=5, scaled_points=6)


class TestClusters:
    def test_every_cluster_is_populated(self, rng):
        points, labels = gen_clusters(500, 3, 20, rng=rng)
        assert points.shape == (500, 3)
        assert set(labels.tolist()) == set(range(20))

    def test_validation(self, rng):
        with pytest.raises(InvalidInputError):
            gen_clusters(5, 2, 10, rng=rng)


def test_train_test_split(rng):
    X = np.arange(20).reshape(10, 2)
    train, test = train_test_split(X, 0.8, rng)
    assert train.shape == (8, 2)
    assert test.shape == (2, 2)
    assert sorted(np.vstack([train, test])[:, 0].tolist()) == list(range(0, 20, 2))
    with pytest.raises(InvalidInputError):
        train_test_split(X, 1.0, rng)


class TestLoadPoints:
    def test_header_is_skipped(self, tmp_path):
        path = tmp_path / "points.csv"
        path.write_text("x,y\n1,2\n3,4\n")
        assert_array_equal(load_points_csv(path), [[1.0, 2.0], [3.0, 4.0]])

    def test_headerless(self, tmp_path):
        path = tmp_path / "points.csv"
        path.write_text("1.5,2\n\n3,4\n")
        assert load_points_csv(path).shape == (2, 2)

    def test_reports_location_of_bad_cell(self, tmp_path):
        path = tmp_path / "points.csv"
        path.write_text("x,y\n1,2\n3,oops\n")
        with pytest.raises(InvalidInputError, match="row 3, column 2"):
            load_points_csv(path)

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "points.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(InvalidInputError, match="row 2"):
            load_points_csv(path)

    def test_missing_and_empty(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_points_csv(tmp_path / "none.csv")
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(InvalidInputError):
            load_points_csv(empty)
        header_only = tmp_path / "header.csv"
        header_only.write_text("x,y\n")
        with pytest.raises(InvalidInputError):
            load_points_csv(header_only)
