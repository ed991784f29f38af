"""k-means: seeding, Lloyd iteration, restarts, and representatives."""

import numpy as np
import pytest

import oracles
from helpers import FOUR_LABELS, FOUR_POINTS, gauss_blobs
from vitcluster.cluster import (KMeans, compute_inertia, kmeans_pp_init,
                                lloyd_step, load_model, representatives,
                                save_model)
from vitcluster.exceptions import AlignmentError, FitError, ShapeError


class TestSeeding:
    def test_k_equals_one(self):
        X = np.array([[0.0], [1.0], [10.0]])
        rng = np.random.default_rng(0)
        centers = kmeans_pp_init(X, 1, rng)
        assert centers.shape == (1, 1)
        assert any(np.allclose(centers[0], x) for x in X)

    def test_k_equals_n_selects_every_point(self):
        X = np.arange(5.0).reshape(5, 1)
        centers = kmeans_pp_init(X, 5, np.random.default_rng(3))
        assert sorted(centers.ravel().tolist()) == X.ravel().tolist()

    def test_duplicates_do_not_stall(self):
        # All squared-distance mass sits on one far point; after picking it
        # the remaining mass is zero and seeding must still produce k
        # distinct rows.
        X = np.array([[0.0], [0.0], [0.0], [9.0]])
        centers = kmeans_pp_init(X, 3, np.random.default_rng(1))
        assert centers.shape == (3, 1)
        assert 9.0 in centers.ravel()

    def test_seeds_are_input_rows(self):
        X = np.random.default_rng(2).standard_normal((30, 4))
        centers = kmeans_pp_init(X, 6, np.random.default_rng(5))
        for c in centers:
            assert any(np.array_equal(c, x) for x in X)


class TestLloydStep:
    def test_worked_example(self):
        assign, centers, inertia = lloyd_step(
            FOUR_POINTS, np.array([[0.0], [10.0]]))
        assert assign.tolist() == FOUR_LABELS.tolist()
        assert centers.ravel().tolist() == [0.5, 10.5]
        assert inertia == pytest.approx(1.0, abs=1e-12)

    def test_fixed_point(self):
        centers = np.array([[0.5], [10.5]])
        assign, new_centers, inertia = lloyd_step(FOUR_POINTS, centers)
        assert np.array_equal(new_centers, centers)
        assert inertia == pytest.approx(1.0)

    def test_tie_goes_to_lower_index(self):
        # Point 0 is equidistant from both centroids; point -3 keeps the
        # second cluster nonempty so no repair masks the tie-break.
        X = np.array([[0.0], [-3.0]])
        assign, _, _ = lloyd_step(X, np.array([[1.0], [-1.0]]))
        assert assign.tolist() == [0, 1]

    def test_empty_cluster_reseeded(self):
        # Second centroid captures nothing; repair must keep k centroids
        # and strictly reduce inertia versus leaving it empty.
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        centers = np.array([[1.5], [100.0]])
        assign, new_centers, inertia = lloyd_step(X, centers)
        assert new_centers.shape == (2, 1)
        assert len(np.unique(lloyd_step(X, new_centers)[0])) == 2

    def test_all_identical_points(self):
        X = np.zeros((4, 2))
        assign, centers, inertia = lloyd_step(X, np.array([[0.0, 0.0],
                                                           [5.0, 5.0]]))
        assert centers.shape == (2, 2)
        assert inertia == pytest.approx(0.0)

    def test_monotone_on_random_problems(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            n = int(rng.integers(10, 40))
            d = int(rng.integers(1, 5))
            k = int(rng.integers(2, 6))
            X = rng.standard_normal((n, d))
            centers = kmeans_pp_init(X, k, rng)
            last = np.inf
            for _ in range(12):
                _, centers, inertia = lloyd_step(X, centers)
                assert inertia <= last * (1.0 + 1e-12) + 1e-15
                last = inertia


class TestKMeansEstimator:
    def test_fixture_recovers_optimal_split(self):
        for seed in range(10):
            model = KMeans(n_clusters=2, random_state=seed).fit(FOUR_POINTS)
            assert model.inertia_ == pytest.approx(1.0, abs=1e-12)
            assert model.labels_[0] == model.labels_[1]
            assert model.labels_[2] == model.labels_[3]
            assert model.labels_[0] != model.labels_[2]

    def test_matches_exhaustive_two_partition(self):
        rng = np.random.default_rng(23)
        for _ in range(5):
            X = rng.standard_normal((8, 2))
            model = KMeans(n_clusters=2, n_init=10, random_state=0).fit(X)
            best = oracles.best_two_partition_inertia(X)
            assert model.inertia_ == pytest.approx(best, rel=1e-9)

    def test_k_equals_n_zero_inertia(self):
        X = np.arange(6.0).reshape(6, 1)
        model = KMeans(n_clusters=6, random_state=0).fit(X)
        assert model.inertia_ == pytest.approx(0.0, abs=1e-12)

    def test_k_equals_one_total_scatter(self):
        X = np.random.default_rng(4).standard_normal((20, 3))
        model = KMeans(n_clusters=1, random_state=0).fit(X)
        assert np.allclose(model.cluster_centers_[0], X.mean(axis=0))
        tss = ((X - X.mean(axis=0)) ** 2).sum()
        assert model.inertia_ == pytest.approx(tss, rel=1e-12)

    def test_reported_inertia_matches_recompute(self):
        X, _ = gauss_blobs(n_per=15, d=4, seed=1)
        model = KMeans(n_clusters=3, random_state=0).fit(X)
        again = compute_inertia(X, model.cluster_centers_, model.labels_)
        assert model.inertia_ == pytest.approx(again, rel=1e-6)

    def test_assignments_translation_invariant(self):
        X, _ = gauss_blobs(n_per=15, d=4, seed=8)
        a = KMeans(n_clusters=3, random_state=0).fit(X).labels_
        b = KMeans(n_clusters=3, random_state=0).fit(X + 100.0).labels_
        # same partition up to relabeling
        mapping = {}
        for la, lb in zip(a, b):
            assert mapping.setdefault(la, lb) == lb

    def test_deterministic_per_seed(self):
        X, _ = gauss_blobs(n_per=15, d=4, seed=6)
        m1 = KMeans(n_clusters=3, random_state=42).fit(X)
        m2 = KMeans(n_clusters=3, random_state=42).fit(X)
        assert np.array_equal(m1.cluster_centers_, m2.cluster_centers_)
        assert np.array_equal(m1.labels_, m2.labels_)

    def test_predict_training_points(self):
        X, _ = gauss_blobs(n_per=15, d=4, seed=6)
        model = KMeans(n_clusters=3, random_state=0).fit(X)
        assert np.array_equal(model.predict(X), model.labels_)

    def test_predict_tie_and_empty(self):
        model = KMeans(n_clusters=2, random_state=0).fit(
            np.array([[1.0], [1.0], [-1.0], [-1.0]]))
        order = np.argsort(model.cluster_centers_.ravel())
        # midpoint is equidistant: lowest centroid index wins
        assert model.predict(np.array([[0.0]]))[0] == 0
        empty = model.predict(np.empty((0, 1)))
        assert empty.shape == (0,)
        assert empty.dtype == np.int64
        assert order.shape == (2,)

    def test_predict_before_fit(self):
        with pytest.raises(FitError):
            KMeans(n_clusters=2).predict(np.zeros((2, 1)))

    def test_predict_wrong_width(self):
        model = KMeans(n_clusters=2, random_state=0).fit(np.zeros((4, 2)))
        with pytest.raises(ShapeError):
            model.predict(np.zeros((3, 5)))

    def test_more_restarts_never_worse(self):
        X, _ = gauss_blobs(n_per=10, d=3, k=4, seed=12)
        lone = KMeans(n_clusters=4, n_init=1, random_state=9).fit(X)
        many = KMeans(n_clusters=4, n_init=10, random_state=9).fit(X)
        assert many.inertia_ <= lone.inertia_ + 1e-12

    def test_get_params_roundtrip(self):
        model = KMeans(n_clusters=7, tol=1e-5)
        params = model.get_params()
        clone = KMeans(**params)
        assert clone.get_params() == params


class TestRepresentatives:
    def test_nearest_over_all_rows(self):
        # Representatives search every row, not only the cluster's members:
        # row 2 sits nearest centroid 0 even though it belongs to cluster 1.
        X = np.array([[0.0], [1.0], [4.0], [10.0]])
        centroids = np.array([[3.0], [10.0]])
        reps = representatives(X, np.arange(4), centroids, m=1)
        assert reps.per_cluster[0] == [(2, 1.0)]
        assert reps.per_cluster[1] == [(3, 0.0)]

    def test_tie_resolves_to_lower_record_id(self):
        X = np.array([[1.0], [-1.0], [5.0]])
        reps = representatives(X, np.array([7, 3, 9]), np.array([[0.0]]), m=1)
        assert reps.per_cluster[0] == [(3, 1.0)]

    def test_m_larger_than_n_returns_all_sorted(self):
        X = np.array([[3.0], [1.0], [2.0]])
        reps = representatives(X, np.arange(3), np.array([[0.0]]), m=10)
        assert [rid for rid, _ in reps.per_cluster[0]] == [1, 2, 0]
        dists = [d for _, d in reps.per_cluster[0]]
        assert dists == sorted(dists)

    def test_duplicates_at_centroid(self):
        X = np.array([[2.0], [2.0], [8.0]])
        reps = representatives(X, np.arange(3), np.array([[2.0]]), m=2)
        assert reps.per_cluster[0] == [(0, 0.0), (1, 0.0)]

    def test_misaligned_ids(self):
        with pytest.raises(AlignmentError):
            representatives(np.zeros((3, 1)), np.arange(2),
                            np.zeros((1, 1)), m=1)

    def test_to_dict_with_paths(self):
        X = np.array([[0.0], [1.0]])
        reps = representatives(X, np.arange(2), np.array([[0.0]]), m=2)
        payload = reps.to_dict({0: "a.png", 1: "b.png"})
        items = payload["clusters"][0]["items"]
        assert items[0]["record_id"] == 0
        assert items[0]["image_path"] == "a.png"
        assert items[1]["distance"] == pytest.approx(1.0)


class TestModelFile:
    def test_roundtrip(self, tmp_path):
        X, _ = gauss_blobs(n_per=10, d=3, seed=3)
        model = KMeans(n_clusters=3, random_state=5).fit(X)
        path = tmp_path / "model.json"
        save_model(model, path, seed=5)
        loaded = load_model(path)
        assert np.allclose(loaded.cluster_centers_, model.cluster_centers_)
        assert loaded.inertia_ == pytest.approx(model.inertia_)
        assert loaded.n_clusters == model.n_clusters
        assert np.array_equal(loaded.predict(X), model.predict(X))

    def test_file_bytes_deterministic(self, tmp_path):
        X, _ = gauss_blobs(n_per=10, d=3, seed=3)
        for name in ("a.json", "b.json"):
            save_model(KMeans(n_clusters=3, random_state=5).fit(X),
                       tmp_path / name, seed=5)
        assert (tmp_path / "a.json").read_bytes() == \
            (tmp_path / "b.json").read_bytes()
