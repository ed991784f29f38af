"""Forward pass of the ViT encoder.

Tensors are float32 throughout; softmax and layer-norm reductions run in
float64 before casting back, and softmax subtracts the row max for overflow
safety. The evaluation order is fixed, so identical inputs and weights give
bitwise-identical embeddings.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import erf
from sklearn.base import BaseEstimator

from ..exceptions import FitError, NoHeadError, PatchError, ShapeError
from .config import ModelConfig
from .preprocess import preprocess
from .weights import ModelWeights

LN_EPS = 1e-6


def patchify(image: np.ndarray, patch_size: int) -> np.ndarray:
    """Split an (H, W, C) image into non-overlapping patches; row i is the
    flattened i-th patch in row-major patch order, giving (N, P*P*C)."""
    if image.ndim != 3:
        raise ShapeError(f"expected (H, W, C) image, got shape {image.shape}")
    H, W, C = image.shape
    P = patch_size
    if H % P != 0 or W % P != 0:
        raise PatchError(f"image {H}x{W} not divisible by patch size {P}")
    gh, gw = H // P, W // P
    patches = image.reshape(gh, P, gw, P, C).transpose(0, 2, 1, 3, 4)
    return np.ascontiguousarray(patches.reshape(gh * gw, P * P * C))


def embed_tokens(patches: np.ndarray, weights: ModelWeights) -> np.ndarray:
    """Project patches, prepend the class token, add the positional table:
    z0 = [x_class; x_p1 E; ...; x_pN E] + E_pos, shape (N+1, D)."""
    E = weights["patch_projection"]
    if patches.shape[1] != E.shape[0]:
        raise ShapeError(
            f"patch width {patches.shape[1]} does not match projection "
            f"rows {E.shape[0]}"
        )
    pos = weights["pos_embedding"]
    n_tokens = patches.shape[0] + 1
    if pos.shape[0] != n_tokens:
        raise ShapeError(
            f"positional table has {pos.shape[0]} rows, need {n_tokens}"
        )
    projected = patches.astype(np.float32) @ E
    tokens = np.vstack([weights["class_token"][None, :], projected])
    return tokens + pos


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted.astype(np.float64))
    return (e / e.sum(axis=-1, keepdims=True)).astype(np.float32)


def attention(Q: np.ndarray, K: np.ndarray, V: np.ndarray,
              return_weights: bool = False):
    """Scaled dot-product attention softmax(Q K^T / sqrt(d_h)) V for one head.

    The scale is the per-head width d_h, not the full model width: once the
    model width is split across h heads, scaling by the full width would
    shrink every head's logits h-fold (the two coincide only for h=1). Each
    softmax row is non-negative and sums to 1.
    """
    if Q.ndim != 2 or Q.shape != K.shape or K.shape != V.shape:
        raise ShapeError(
            f"Q, K, V must share one (n, d_h) shape, got "
            f"{Q.shape}, {K.shape}, {V.shape}"
        )
    d_h = Q.shape[1]
    logits = (Q @ K.T) / np.float32(np.sqrt(d_h))
    weights = _softmax_rows(logits)
    out = weights @ V
    if return_weights:
        return out, weights
    return out


def layer_norm(x: np.ndarray, scale: np.ndarray, shift: np.ndarray) -> np.ndarray:
    """LayerNorm over the last axis, mean/variance reduced in float64."""
    x64 = x.astype(np.float64)
    mean = x64.mean(axis=-1, keepdims=True)
    var = ((x64 - mean) ** 2).mean(axis=-1, keepdims=True)
    normed = ((x64 - mean) / np.sqrt(var + LN_EPS)).astype(np.float32)
    return normed * scale + shift


def _gelu(x: np.ndarray) -> np.ndarray:
    # exact form, not the tanh approximation
    return (0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))).astype(np.float32)


def _mhsa(z: np.ndarray, lw: dict[str, np.ndarray], num_heads: int) -> np.ndarray:
    """Multi-head self-attention: h parallel heads on contiguous column
    blocks of Q/K/V, concatenated then output-projected."""
    D = z.shape[1]
    d_h = D // num_heads
    q = z @ lw["wq"]
    k = z @ lw["wk"]
    v = z @ lw["wv"]
    heads = []
    for h in range(num_heads):
        cols = slice(h * d_h, (h + 1) * d_h)
        heads.append(attention(q[:, cols], k[:, cols], v[:, cols]))
    return np.hstack(heads) @ lw["wo"]


def encoder_layer(z: np.ndarray, lw: dict[str, np.ndarray],
                  num_heads: int) -> np.ndarray:
    """Pre-norm block: z' = z + MHSA(LN(z)); out = z' + MLP(LN(z')) with an
    exact-GELU two-layer MLP."""
    if z.ndim != 2:
        raise ShapeError(f"expected (tokens, D) input, got shape {z.shape}")
    if z.shape[1] != lw["wq"].shape[0]:
        raise ShapeError(
            f"input width {z.shape[1]} does not match attention weights "
            f"{lw['wq'].shape[0]}"
        )
    attended = z + _mhsa(layer_norm(z, lw["norm1_scale"], lw["norm1_shift"]),
                         lw, num_heads)
    hidden = layer_norm(attended, lw["norm2_scale"], lw["norm2_shift"])
    mlp = _gelu(hidden @ lw["w1"] + lw["b1"]) @ lw["w2"] + lw["b2"]
    return attended + mlp


@dataclass
class Embedding:
    """A D-vector per image; normalized marks unit L2 length."""
    values: np.ndarray
    normalized: bool = False


def forward(image: np.ndarray, weights: ModelWeights,
            config: ModelConfig) -> Embedding:
    """Full encoder pass: tokens, L pre-norm layers, final layer-norm, then
    the class token (position 0) as the fixed-size embedding."""
    patches = patchify(image, config.patch_size)
    z = embed_tokens(patches, weights)
    for i in range(config.num_layers):
        z = encoder_layer(z, weights.layer(i), config.num_heads)
    z = layer_norm(z, weights["final_norm.scale"], weights["final_norm.shift"])
    return Embedding(values=z[0].copy(), normalized=False)


def classify(embedding: Embedding, weights: ModelWeights) -> np.ndarray:
    """softmax(W^T z) over the optional head; entries sum to 1."""
    if "head.w" not in weights.tensors:
        raise NoHeadError("model has no classification head")
    logits = embedding.values @ weights["head.w"]
    return _softmax_rows(logits[None, :])[0].astype(np.float64)


def normalize(embedding: Embedding) -> Embedding:
    """Scale to unit L2 norm; an all-zero vector is returned unchanged with
    the normalized flag still false."""
    norm = float(np.linalg.norm(embedding.values.astype(np.float64)))
    if norm == 0.0:
        return Embedding(values=embedding.values.copy(), normalized=False)
    values = (embedding.values.astype(np.float64) / norm).astype(np.float32)
    return Embedding(values=values, normalized=True)


class ViTEncoder(BaseEstimator):
    """Estimator facade over the forward pass: fit materializes weights,
    transform maps raw image bytes to embedding rows.

    Parameters
    ----------
    config : ModelConfig or None for ViT-Base defaults.
    weights : ModelWeights or None to draw seeded random weights at fit.
    normalize_output : bool
        L2-normalize each embedding row.
    n_threads : int
        Worker threads for transform; output order never depends on it.
    random_state : int
        Seed for the random-weights fallback.
    """

    def __init__(self, config: ModelConfig | None = None,
                 weights: ModelWeights | None = None,
                 normalize_output: bool = True, n_threads: int = 1,
                 random_state: int = 0):
        self.config = config
        self.weights = weights
        self.normalize_output = normalize_output
        self.n_threads = n_threads
        self.random_state = random_state

    def fit(self, X=None, y=None):
        self.config_ = self.config if self.config is not None else ModelConfig()
        if self.weights is not None:
            if self.weights.config != self.config_:
                raise ShapeError("weights were built for a different config")
            self.weights_ = self.weights
        else:
            self.weights_ = ModelWeights.random(self.config_, self.random_state)
        return self

    def _embed_bytes(self, raw: bytes) -> np.ndarray:
        image = preprocess(raw, self.config_.image_size)
        emb = forward(image, self.weights_, self.config_)
        if self.normalize_output:
            emb = normalize(emb)
        return emb.values

    def transform(self, images) -> np.ndarray:
        """images: iterable of raw PNG/JPEG byte strings. Returns (n, D)
        float32, row i from image i."""
        if not hasattr(self, "weights_"):
            raise FitError("transform called before fit")
        items = list(images)
        if not items:
            return np.empty((0, self.config_.hidden_dim), dtype=np.float32)
        if self.n_threads > 1:
            with ThreadPoolExecutor(max_workers=self.n_threads) as pool:
                rows = list(pool.map(self._embed_bytes, items))
        else:
            rows = [self._embed_bytes(raw) for raw in items]
        return np.vstack(rows)

    def fit_transform(self, images, y=None):
        return self.fit().transform(images)
