"""Stochastic gradient layout of a fuzzy graph into d dimensions.

Edges attract with frequency proportional to their weight (an edge of weight
w fires every w_max / w epochs); each attraction is followed by a fixed number
of uniformly sampled repulsive updates. The jitted kernels carry their own
Tausworthe PRNG so a fixed seed gives a bitwise-reproducible layout under the
sequential schedule, independent of global RNG state.

Kernel gradients descend the pair losses in `gradients` but add the standard
numerical safeguards: a 0.001 offset in the repulsive denominator, per
dimension clipping of gradient terms to [-4, 4], and a fixed +4 kick when a
negative sample coincides with the point being moved apart.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit, prange
from scipy import sparse

from ..exceptions import FitError

_MASK32 = 0xFFFFFFFF
_MASK64 = 0xFFFFFFFFFFFFFFFF

SPECTRAL_MAX_POINTS = 4096
GRAD_CLIP = 4.0
REPULSION_OFFSET = 1e-3


@dataclass
class LayoutConfig:
    """Hyperparameters of the SGD layout.

    a and b are the similarity-curve parameters from `fit_ab`; learning_rate
    decays linearly to zero over the epochs.
    """
    target_dim: int = 2
    epochs: int = 200
    learning_rate: float = 1.0
    negative_samples: int = 5
    a: float = 1.577
    b: float = 0.895
    seed: int = 0
    parallel: bool = False

    def __post_init__(self):
        if self.target_dim < 1:
            raise ValueError(f"target_dim must be >= 1, got {self.target_dim}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.negative_samples < 0:
            raise ValueError(
                f"negative_samples must be >= 0, got {self.negative_samples}"
            )


def _splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _rng_state(seed: int) -> np.ndarray:
    """Three 32-bit Tausworthe words derived from the seed; low bits are
    forced on so no word falls below the generator's minimum."""
    words = []
    z = seed & _MASK64
    for _ in range(3):
        z = _splitmix64(z)
        words.append((z & _MASK32) | 64)
    return np.asarray(words, dtype=np.int64)


@njit(cache=True)
def _tau_rand(state):
    """Combined Tausworthe generator; returns a value in [0, 2^32)."""
    state[0] = (((state[0] & 4294967294) << 12) & _MASK32) ^ (
        (((state[0] << 13) & _MASK32) ^ state[0]) >> 19
    )
    state[1] = (((state[1] & 4294967288) << 4) & _MASK32) ^ (
        (((state[1] << 2) & _MASK32) ^ state[1]) >> 25
    )
    state[2] = (((state[2] & 4294967280) << 17) & _MASK32) ^ (
        (((state[2] << 3) & _MASK32) ^ state[2]) >> 11
    )
    return state[0] ^ state[1] ^ state[2]


@njit(cache=True)
def _apply_edge(emb, i, j, a, b, alpha, n, neg, state):
    dim = emb.shape[1]

    # attraction: descend -log Phi, moving both endpoints
    d2 = 0.0
    for q in range(dim):
        diff = emb[i, q] - emb[j, q]
        d2 += diff * diff
    if d2 > 0.0:
        coeff = (-2.0 * a * b * d2 ** (b - 1.0)) / (1.0 + a * d2 ** b)
    else:
        coeff = 0.0
    for q in range(dim):
        g = coeff * (emb[i, q] - emb[j, q])
        if g > GRAD_CLIP:
            g = GRAD_CLIP
        elif g < -GRAD_CLIP:
            g = -GRAD_CLIP
        emb[i, q] += alpha * g
        emb[j, q] -= alpha * g

    # repulsion: descend -log(1 - Phi) against uniform negatives, moving i only
    for _ in range(neg):
        r = _tau_rand(state) % n
        if r == i:
            continue
        d2 = 0.0
        for q in range(dim):
            diff = emb[i, q] - emb[r, q]
            d2 += diff * diff
        if d2 > 0.0:
            coeff = (2.0 * b) / ((REPULSION_OFFSET + d2) * (1.0 + a * d2 ** b))
        else:
            coeff = 0.0
        for q in range(dim):
            if coeff > 0.0:
                g = coeff * (emb[i, q] - emb[r, q])
                if g > GRAD_CLIP:
                    g = GRAD_CLIP
                elif g < -GRAD_CLIP:
                    g = -GRAD_CLIP
            else:
                # coincident negative pair: fixed kick apart
                g = GRAD_CLIP
            emb[i, q] += alpha * g


@njit(cache=True)
def _layout_sequential(emb, head, tail, epochs_per_sample, epoch_of_next,
                       n_epochs, lr0, a, b, neg, state):
    n = emb.shape[0]
    for epoch in range(n_epochs):
        alpha = lr0 * (1.0 - epoch / n_epochs)
        for e in range(head.shape[0]):
            if epoch_of_next[e] > epoch:
                continue
            _apply_edge(emb, head[e], tail[e], a, b, alpha, n, neg, state)
            epoch_of_next[e] += epochs_per_sample[e]


@njit(cache=True, parallel=True)
def _layout_parallel(emb, head, tail, epochs_per_sample, epoch_of_next,
                     n_epochs, lr0, a, b, neg, seed):
    """Parallel schedule: edges within an epoch race on the shared embedding,
    so results are NOT bit-reproducible. Each (epoch, edge) pair gets its own
    PRNG stream so the sampling itself stays seed-dependent."""
    n = emb.shape[0]
    for epoch in range(n_epochs):
        alpha = lr0 * (1.0 - epoch / n_epochs)
        for e in prange(head.shape[0]):
            if epoch_of_next[e] > epoch:
                continue
            state = np.empty(3, dtype=np.int64)
            mix = seed + 0x9E3779B9 * (epoch + 1) + 0x85EBCA6B * (e + 1)
            state[0] = (mix & _MASK32) | 64
            state[1] = ((mix >> 16) & _MASK32) | 64
            state[2] = ((mix * 31) & _MASK32) | 64
            _apply_edge(emb, head[e], tail[e], a, b, alpha, n, neg, state)
            epoch_of_next[e] += epochs_per_sample[e]


def spectral_init(w: sparse.spmatrix, d: int, seed: int) -> np.ndarray:
    """Initial positions from the symmetric normalized graph Laplacian:
    eigenvectors 2..d+1 (ascending eigenvalue), rescaled so the largest entry
    magnitude is 10, plus seeded N(0, 1e-4) jitter to break exact ties.

    Falls back to seeded Gaussian positions at scale 1e-2 when the dense
    eigendecomposition is unavailable or pointless: d >= n - 1, n beyond the
    dense-solver budget, or a failed factorization.
    """
    n = w.shape[0]
    rng = np.random.default_rng(seed)
    if d >= n - 1 or n > SPECTRAL_MAX_POINTS:
        return rng.normal(0.0, 1e-2, size=(n, d))

    A = np.asarray(w.todense(), dtype=np.float64)
    deg = A.sum(axis=1)
    inv_sqrt = np.zeros(n)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    lap = np.eye(n) - (inv_sqrt[:, None] * A) * inv_sqrt[None, :]
    try:
        _, vecs = np.linalg.eigh(lap)
    except np.linalg.LinAlgError:
        return rng.normal(0.0, 1e-2, size=(n, d))

    emb = vecs[:, 1:d + 1].copy()
    peak = np.abs(emb).max()
    if peak == 0.0:
        return rng.normal(0.0, 1e-2, size=(n, d))
    emb *= 10.0 / peak
    emb += rng.normal(0.0, 1e-4, size=emb.shape)
    return emb


def optimize_layout(w: sparse.spmatrix, cfg: LayoutConfig,
                    init: np.ndarray | None = None) -> np.ndarray:
    """Run the SGD layout of the fuzzy graph `w` and return the (n, d)
    projection, row-aligned with the graph. `init` overrides the spectral
    initialization (useful for tests); it is not modified in place."""
    w = w.tocsr()
    n = w.shape[0]
    coo = w.tocoo()
    if coo.nnz == 0:
        raise FitError("cannot lay out an empty graph")
    head = coo.row.astype(np.int64)
    tail = coo.col.astype(np.int64)
    weight = coo.data.astype(np.float64)

    # edges fire every w_max / w epochs, so frequency is proportional to weight
    epochs_per_sample = weight.max() / weight
    epoch_of_next = epochs_per_sample.copy()

    if init is None:
        emb = spectral_init(w, cfg.target_dim, cfg.seed)
    else:
        emb = np.array(init, dtype=np.float64, copy=True)
        if emb.shape != (n, cfg.target_dim):
            raise ValueError(
                f"init shape {emb.shape} does not match ({n}, {cfg.target_dim})"
            )
    emb = np.ascontiguousarray(emb)

    if cfg.parallel:
        _layout_parallel(emb, head, tail, epochs_per_sample, epoch_of_next,
                         cfg.epochs, cfg.learning_rate, cfg.a, cfg.b,
                         cfg.negative_samples, cfg.seed & _MASK32)
    else:
        state = _rng_state(cfg.seed)
        _layout_sequential(emb, head, tail, epochs_per_sample, epoch_of_next,
                           cfg.epochs, cfg.learning_rate, cfg.a, cfg.b,
                           cfg.negative_samples, state)
    return emb
