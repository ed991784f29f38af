"""Exact brute-force k nearest neighbors under the Euclidean metric."""

from dataclasses import dataclass

import numpy as np

from ..exceptions import TooFewPointsError
from ..validation import check_matrix


@dataclass
class NeighborGraph:
    """Per point: the k nearest neighbor indices and distances, ascending.

    No self-edges; ties between equal distances resolve to the lower index.
    """
    indices: np.ndarray  # (n, k) int64
    dists: np.ndarray    # (n, k) float64

    @property
    def n_points(self) -> int:
        return self.indices.shape[0]

    @property
    def k(self) -> int:
        return self.indices.shape[1]


def knn_graph(X, k: int) -> NeighborGraph:
    """Exact kNN by scanning all pairwise distances, one query row at a time."""
    X = check_matrix(X, dtype=np.float64)
    n = X.shape[0]
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if n <= k:
        raise TooFewPointsError(f"need more than k={k} points, got {n}")

    indices = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        d = np.sqrt(((X - X[i]) ** 2).sum(axis=1))
        d[i] = np.inf
        # stable sort keeps lower indices first among equal distances
        order = np.argsort(d, kind="stable")[:k]
        indices[i] = order
        dists[i] = d[order]
    return NeighborGraph(indices=indices, dists=dists)
