"""PCA baseline: deterministic linear projection used as a reduction oracle."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..exceptions import FitError, ShapeError
from ..validation import check_matrix


def _principal_axes(X: np.ndarray, d: int):
    """Top-d covariance eigenvectors as columns, eigenvalues descending, each
    column's largest-magnitude entry made positive so signs are deterministic."""
    n = X.shape[0]
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / max(n - 1, 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals, kind="stable")[::-1][:d]
    comps = vecs[:, order].copy()
    variances = vals[order].copy()
    for c in range(d):
        col = comps[:, c]
        peak = np.abs(col).argmax()
        if col[peak] < 0:
            comps[:, c] = -col
    return mean, comps, variances


def pca(X, d: int) -> np.ndarray:
    """Center and project onto the top-d principal axes."""
    X = check_matrix(X, dtype=np.float64)
    n, D = X.shape
    if not 1 <= d <= min(n, D):
        raise ShapeError(f"need 1 <= d <= min(n, D) = {min(n, D)}, got d={d}")
    mean, comps, _ = _principal_axes(X, d)
    return (X - mean) @ comps


class PCA(BaseEstimator, TransformerMixin):
    """Estimator wrapper around `pca` that remembers the fitted axes.

    Attributes (after fit): mean_, components_ (d rows of length D),
    explained_variance_.
    """

    def __init__(self, n_components: int = 2):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_matrix(X, dtype=np.float64)
        n, D = X.shape
        if not 1 <= self.n_components <= min(n, D):
            raise ShapeError(
                f"need 1 <= n_components <= {min(n, D)}, got {self.n_components}"
            )
        mean, comps, variances = _principal_axes(X, self.n_components)
        self.mean_ = mean
        self.components_ = comps.T
        self.explained_variance_ = variances
        return self

    def transform(self, X):
        if not hasattr(self, "components_"):
            raise FitError("transform called before fit")
        X = check_matrix(X, dtype=np.float64)
        if X.shape[1] != self.components_.shape[1]:
            raise ShapeError(
                f"query has {X.shape[1]} columns, fit saw "
                f"{self.components_.shape[1]}"
            )
        return (X - self.mean_) @ self.components_.T

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)
