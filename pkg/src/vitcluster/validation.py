"""Input validation helpers used by the estimators and pipeline stages."""

import numpy as np

from .exceptions import AlignmentError, ShapeError


def check_matrix(X, name: str = "X", dtype=np.float64) -> np.ndarray:
    """Coerce X to a 2-D array of the given dtype and require finite values."""
    X = np.asarray(X, dtype=dtype)
    if X.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got {X.ndim}-D")
    if X.size and not np.all(np.isfinite(X)):
        raise ShapeError(f"{name} contains non-finite values")
    return X


def check_vector(v, name: str = "v", dtype=np.float64) -> np.ndarray:
    """Coerce v to a finite 1-D array."""
    v = np.asarray(v, dtype=dtype)
    if v.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got {v.ndim}-D")
    if v.size and not np.all(np.isfinite(v)):
        raise ShapeError(f"{name} contains non-finite values")
    return v


def check_labels(labels, n_rows: int, name: str = "labels") -> np.ndarray:
    """Coerce labels to a 1-D int array aligned with n_rows."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got {labels.ndim}-D")
    if labels.shape[0] != n_rows:
        raise AlignmentError(
            f"{name} has {labels.shape[0]} entries for {n_rows} rows"
        )
    return labels.astype(np.int64, copy=False)


def check_aligned(n_rows: int, n_records: int, what: str = "manifest") -> None:
    """Require the matrix row count to match the sidecar record count."""
    if n_rows != n_records:
        raise AlignmentError(f"matrix has {n_rows} rows but {what} has {n_records}")
