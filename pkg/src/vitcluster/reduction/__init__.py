"""Dimensionality reduction: a from-scratch UMAP (kNN graph, fuzzy simplicial
calibration, SGD layout) plus a PCA baseline used as a deterministic oracle."""

from .curve import fit_ab
from .fuzzy import SmoothedKnn, membership_strengths, smooth_knn
from .gradients import (
    attractive_grad,
    attractive_loss,
    repulsive_grad,
    repulsive_loss,
)
from .knn import NeighborGraph, knn_graph
from .layout import LayoutConfig, optimize_layout, spectral_init
from .pca import PCA, pca
from .umap import UMAP

__all__ = [
    "NeighborGraph",
    "knn_graph",
    "SmoothedKnn",
    "smooth_knn",
    "membership_strengths",
    "fit_ab",
    "attractive_loss",
    "attractive_grad",
    "repulsive_loss",
    "repulsive_grad",
    "LayoutConfig",
    "spectral_init",
    "optimize_layout",
    "PCA",
    "pca",
    "UMAP",
]
