"""Fuzzy topological representation of a neighbor graph.

Each point gets a local connectivity offset rho (distance to its nearest
neighbor) and a bandwidth sigma calibrated so the smoothed neighborhood has
effective size log2(k). Directed memberships are then symmetrized with the
probabilistic t-conorm.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .knn import NeighborGraph

SIGMA_LO = 1e-12
SIGMA_HI = 1e4
N_BISECT = 64


@dataclass
class SmoothedKnn:
    """Per point: rho (nearest distance, >= 0) and sigma (bandwidth, > 0)."""
    rho: np.ndarray    # (n,)
    sigma: np.ndarray  # (n,)


def smooth_knn(graph: NeighborGraph) -> SmoothedKnn:
    """Calibrate sigma by bisection so that for each point
    sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k).

    64 bisection steps on the bracket [1e-12, 1e4]. Degenerate profiles (for
    example all k distances equal to rho, where the sum is k for any sigma)
    cannot reach the target; sigma then clamps to the bracket edge instead of
    erroring.
    """
    dists = graph.dists
    n, k = dists.shape
    target = np.log2(k)
    rho = dists[:, 0].copy()
    gaps = np.maximum(0.0, dists - rho[:, None])

    lo = np.full(n, SIGMA_LO)
    hi = np.full(n, SIGMA_HI)
    for _ in range(N_BISECT):
        mid = 0.5 * (lo + hi)
        psum = np.exp(-gaps / mid[:, None]).sum(axis=1)
        too_big = psum > target
        hi = np.where(too_big, mid, hi)
        lo = np.where(too_big, lo, mid)
    return SmoothedKnn(rho=rho, sigma=0.5 * (lo + hi))


def membership_strengths(graph: NeighborGraph,
                         smoothed: SmoothedKnn) -> sparse.csr_matrix:
    """Directed membership a_ij = exp(-max(0, d_ij - rho_i) / sigma_i),
    symmetrized as w = a + a^T - a * a^T (elementwise product, the
    probabilistic t-conorm). Returns a CSR matrix with weights in
    (0, 1] and no self-loops (the graph excludes them)."""
    n, k = graph.dists.shape
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    cols = graph.indices.ravel()
    gaps = np.maximum(0.0, graph.dists - smoothed.rho[:, None])
    vals = np.exp(-gaps / smoothed.sigma[:, None]).ravel()

    a = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    at = a.T.tocsr()
    w = a + at - a.multiply(at)
    w = w.tocsr()
    # t-conorm keeps weights in (0,1]; trim float roundoff just past 1
    w.data = np.minimum(w.data, 1.0)
    w.sort_indices()
    return w
