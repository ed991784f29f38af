"""K-means clustering (k-means++ init, Lloyd iterations) and centroid-nearest
representative retrieval.

Tie-breaking is total-order deterministic everywhere: nearest-centroid ties go
to the lowest centroid index, representative ties to the lowest record id.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .exceptions import FitError, ShapeError, TooFewPointsError
from .validation import check_aligned, check_matrix


def _sq_dists_to(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (n, k)."""
    diff = X[:, None, :] - centroids[None, :, :]
    return (diff * diff).sum(axis=2)


def kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first centroid uniform, the rest proportional to the
    squared distance to the nearest centroid chosen so far."""
    n = X.shape[0]
    if n < k:
        raise TooFewPointsError(f"need at least {k} points for k={k}, got {n}")
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    closest = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            probs = closest / total
            chosen[c] = rng.choice(n, p=probs)
        else:
            # all residual mass is zero (duplicates); fall back to an unchosen row
            remaining = np.setdiff1d(np.arange(n), chosen[:c])
            chosen[c] = remaining[rng.integers(len(remaining))]
        closest = np.minimum(closest, ((X - X[chosen[c]]) ** 2).sum(axis=1))
    return X[chosen].copy()


def lloyd_step(X: np.ndarray, centroids: np.ndarray):
    """One Lloyd iteration.

    Assigns each point to its nearest centroid (ties to the lowest index),
    recomputes centroids as assigned means, and reseeds any empty cluster to
    the point currently farthest from its own centroid. Returns
    (assignments, new_centroids, inertia) where inertia is measured against
    the new centroids; it never exceeds the inertia of the incoming state.
    """
    X = np.asarray(X, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    if X.shape[1] != centroids.shape[1]:
        raise ShapeError(
            f"points have {X.shape[1]} columns, centroids {centroids.shape[1]}"
        )
    k = centroids.shape[0]
    sq = _sq_dists_to(X, centroids)
    assign = sq.argmin(axis=1)

    # empty-cluster repair: reseed to the worst-fit point, keeping k constant
    for c in range(k):
        if not np.any(assign == c):
            point_sq = sq[np.arange(X.shape[0]), assign]
            worst = int(point_sq.argmax())
            centroids = centroids.copy()
            centroids[c] = X[worst]
            assign[worst] = c
            sq = _sq_dists_to(X, centroids)

    new_centroids = np.empty_like(centroids)
    for c in range(k):
        members = assign == c
        new_centroids[c] = X[members].mean(axis=0) if members.any() else centroids[c]
    inertia = float(((X - new_centroids[assign]) ** 2).sum())
    return assign, new_centroids, inertia


def compute_inertia(X: np.ndarray, centroids: np.ndarray,
                    assignments: np.ndarray) -> float:
    """Total squared distance of points to their assigned centroids."""
    X = np.asarray(X, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    return float(((X - centroids[assignments]) ** 2).sum())


class KMeans(BaseEstimator, ClusterMixin):
    """Lloyd's k-means with k-means++ seeding and best-of-n_init restarts.

    Parameters
    ----------
    n_clusters : int
        Number of centroids k.
    n_init : int
        Independent seeded restarts; the run with the lowest final inertia wins.
    max_iter : int
        Cap on Lloyd iterations per restart.
    tol : float
        Convergence threshold on the relative inertia improvement.
    random_state : int or None
        Seed for the restart sequence.

    Attributes (after fit)
    ----------------------
    cluster_centers_ : ndarray of shape (n_clusters, d)
    labels_ : ndarray of shape (n,)
    inertia_ : float
    n_iter_ : int
        Iterations used by the winning restart.
    """

    def __init__(self, n_clusters: int = 20, n_init: int = 10,
                 max_iter: int = 300, tol: float = 1e-4,
                 random_state: int | None = None):
        self.n_clusters = n_clusters
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _single_run(self, X: np.ndarray, rng: np.random.Generator):
        centroids = kmeans_pp_init(X, self.n_clusters, rng)
        inertia = compute_inertia(
            X, centroids, _sq_dists_to(X, centroids).argmin(axis=1)
        )
        assign = None
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            assign, centroids, new_inertia = lloyd_step(X, centroids)
            if inertia > 0 and (inertia - new_inertia) / inertia < self.tol:
                inertia = new_inertia
                break
            if new_inertia == 0.0:
                inertia = new_inertia
                break
            inertia = new_inertia
        return assign, centroids, inertia, n_iter

    def fit(self, X, y=None):
        X = check_matrix(X, dtype=np.float64)
        if X.shape[0] < self.n_clusters:
            raise TooFewPointsError(
                f"need at least {self.n_clusters} points, got {X.shape[0]}"
            )
        root = np.random.default_rng(self.random_state)
        best = None
        for _ in range(self.n_init):
            rng = np.random.default_rng(root.integers(2 ** 63))
            run = self._single_run(X, rng)
            if best is None or run[2] < best[2]:
                best = run
        assign, centroids, inertia, n_iter = best
        self.cluster_centers_ = centroids
        self.labels_ = assign
        self.inertia_ = inertia
        self.n_iter_ = n_iter
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def predict(self, Y):
        if not hasattr(self, "cluster_centers_"):
            raise FitError("predict called before fit")
        Y = check_matrix(Y, dtype=np.float64)
        if Y.shape[0] == 0:
            return np.empty(0, dtype=np.int64)
        if Y.shape[1] != self.cluster_centers_.shape[1]:
            raise ShapeError(
                f"query has {Y.shape[1]} columns, centroids "
                f"{self.cluster_centers_.shape[1]}"
            )
        return _sq_dists_to(Y, self.cluster_centers_).argmin(axis=1)


@dataclass
class Representatives:
    """Per cluster: record ids nearest to the centroid, closest first."""
    per_cluster: list  # list over clusters of [(record_id, distance), ...]

    def to_dict(self, image_paths: dict[int, str] | None = None) -> dict:
        clusters = []
        for c, items in enumerate(self.per_cluster):
            rows = []
            for record_id, distance in items:
                row = {"record_id": int(record_id), "distance": float(distance)}
                if image_paths is not None:
                    row["image_path"] = image_paths.get(int(record_id), "")
                rows.append(row)
            clusters.append({"cluster": c, "items": rows})
        return {"clusters": clusters}


def representatives(X, record_ids, centroids, m: int = 10) -> Representatives:
    """For each centroid, the m nearest rows by Euclidean distance among ALL
    rows, ascending; distance ties resolve to the lower record id."""
    X = check_matrix(X, dtype=np.float64)
    record_ids = np.asarray(record_ids, dtype=np.int64)
    check_aligned(X.shape[0], record_ids.shape[0], "record ids")
    centroids = check_matrix(centroids, "centroids", dtype=np.float64)
    if X.shape[1] != centroids.shape[1]:
        raise ShapeError(
            f"points have {X.shape[1]} columns, centroids {centroids.shape[1]}"
        )

    per_cluster = []
    for c in range(centroids.shape[0]):
        d = np.sqrt(((X - centroids[c]) ** 2).sum(axis=1))
        order = np.lexsort((record_ids, d))[:m]
        per_cluster.append([(int(record_ids[i]), float(d[i])) for i in order])
    return Representatives(per_cluster)


def model_to_dict(model: KMeans, seed: int | None = None) -> dict:
    """JSON-serializable form of a fitted model."""
    centers = model.cluster_centers_
    return {
        "k": int(centers.shape[0]),
        "d": int(centers.shape[1]),
        "centroids": [float(v) for v in centers.ravel()],
        "inertia": float(model.inertia_),
        "seed": seed if seed is not None else model.random_state,
        "config": {
            "n_clusters": model.n_clusters,
            "n_init": model.n_init,
            "max_iter": model.max_iter,
            "tol": model.tol,
        },
    }


def save_model(model: KMeans, path, seed: int | None = None) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model, seed), sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )


def load_model(path) -> KMeans:
    """Rebuild a fitted KMeans (centroids and inertia only) from JSON."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = data.get("config", {})
    model = KMeans(
        n_clusters=data["k"],
        n_init=cfg.get("n_init", 10),
        max_iter=cfg.get("max_iter", 300),
        tol=cfg.get("tol", 1e-4),
        random_state=data.get("seed"),
    )
    model.cluster_centers_ = np.asarray(
        data["centroids"], dtype=np.float64
    ).reshape(data["k"], data["d"])
    model.inertia_ = float(data["inertia"])
    return model
