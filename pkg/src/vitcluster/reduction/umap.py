"""UMAP estimator tying together the kNN graph, fuzzy calibration, similarity
curve fit, and SGD layout."""

import numpy as np
from sklearn.base import BaseEstimator

from ..exceptions import DimensionError, TooFewPointsError
from ..validation import check_matrix
from .curve import fit_ab
from .fuzzy import membership_strengths, smooth_knn
from .knn import knn_graph
from .layout import LayoutConfig, optimize_layout, spectral_init


class UMAP(BaseEstimator):
    """From-scratch UMAP with a deterministic sequential layout schedule.

    Parameters
    ----------
    n_neighbors : int
        Neighborhood size of the kNN graph (>= 2).
    n_components : int
        Target dimensionality d; must satisfy 1 <= d < input dim.
    min_dist, spread : float
        Shape of the low-dimensional similarity curve; a and b are fitted
        from these unless both are given explicitly.
    n_epochs, learning_rate, negative_samples : SGD schedule knobs.
    random_state : int
        Seed for initialization and edge/negative sampling.
    parallel : bool
        Opt-in parallel layout; faster but not bit-reproducible.

    Attributes (after fit)
    ----------------------
    embedding_ : (n, n_components) float64 projection, row-aligned with X
    graph_ : fuzzy CSR weight matrix
    a_, b_ : fitted curve parameters
    """

    def __init__(self, n_neighbors: int = 15, n_components: int = 2,
                 min_dist: float = 0.1, spread: float = 1.0,
                 n_epochs: int = 200, learning_rate: float = 1.0,
                 negative_samples: int = 5, a: float | None = None,
                 b: float | None = None, random_state: int = 0,
                 parallel: bool = False):
        self.n_neighbors = n_neighbors
        self.n_components = n_components
        self.min_dist = min_dist
        self.spread = spread
        self.n_epochs = n_epochs
        self.learning_rate = learning_rate
        self.negative_samples = negative_samples
        self.a = a
        self.b = b
        self.random_state = random_state
        self.parallel = parallel

    def fit(self, X, y=None):
        X = check_matrix(X, dtype=np.float64)
        n, D = X.shape
        if self.n_neighbors < 2:
            raise ValueError(
                f"n_neighbors must be >= 2, got {self.n_neighbors}"
            )
        if not 1 <= self.n_components < D:
            raise DimensionError(
                f"need 1 <= n_components < {D}, got {self.n_components}"
            )
        if n <= self.n_neighbors:
            raise TooFewPointsError(
                f"need more than n_neighbors={self.n_neighbors} points, got {n}"
            )

        graph = knn_graph(X, self.n_neighbors)
        w = membership_strengths(graph, smooth_knn(graph))
        if self.a is not None and self.b is not None:
            a, b = float(self.a), float(self.b)
        else:
            a, b = fit_ab(self.min_dist, self.spread)

        cfg = LayoutConfig(
            target_dim=self.n_components,
            epochs=self.n_epochs,
            learning_rate=self.learning_rate,
            negative_samples=self.negative_samples,
            a=a,
            b=b,
            seed=self.random_state,
            parallel=self.parallel,
        )
        init = spectral_init(w, self.n_components, self.random_state)
        self.embedding_ = optimize_layout(w, cfg, init=init)
        self.graph_ = w
        self.a_ = a
        self.b_ = b
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_

    def transform(self, X):
        raise NotImplementedError(
            "projecting new points through a fitted layout is not supported; "
            "refit on the combined data instead"
        )
