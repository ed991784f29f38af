"""Shared builders for synthetic fixtures used across the test modules."""

import io

import numpy as np
from PIL import Image

from vitcluster.store import EmbeddingMatrix, Manifest, PostRecord, write_store

# The worked four-point example used throughout the metric and k-means tests:
# two tight pairs far apart on a line.
FOUR_POINTS = np.array([[0.0], [1.0], [10.0], [11.0]])
FOUR_LABELS = np.array([0, 0, 1, 1])

# Exact fixture values (hand-computable): mean silhouette 359/399,
# CH = (2*4.5^2*2 / 1) / (1.0 / 2) = 200, DB = (0.5+0.5)/10 = 0.1.
FOUR_SILHOUETTE = 359.0 / 399.0
FOUR_CH = 200.0
FOUR_DB = 0.1


def gauss_blobs(n_per=60, d=50, k=3, sep=12.0, sigma=0.1, seed=0):
    """k spherical Gaussian blobs with centers >= sep apart (axis-aligned)."""
    rng = np.random.default_rng(seed)
    centers = np.zeros((k, d))
    for i in range(1, k):
        centers[i, i - 1] = sep
    rows = [centers[c] + sigma * rng.standard_normal((n_per, d))
            for c in range(k)]
    labels = np.repeat(np.arange(k), n_per)
    return np.vstack(rows), labels


def png_bytes(color, size=(32, 32)):
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format="PNG")
    return buf.getvalue()


def noise_png_bytes(seed, size=(32, 32)):
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, "RGB").save(buf, format="PNG")
    return buf.getvalue()


def write_images(dirpath, payloads):
    """Write payloads (bytes) as img_000.png, img_001.png, ... in dirpath."""
    paths = []
    for i, raw in enumerate(payloads):
        p = dirpath / f"img_{i:03d}.png"
        p.write_bytes(raw)
        paths.append(p)
    return paths


def color_corpus(dirpath, n_per=8, size=(32, 32), seed=0):
    """Three color families with per-image noise; returns paths and labels."""
    rng = np.random.default_rng(seed)
    bases = [(200, 30, 30), (30, 200, 30), (30, 30, 200)]
    payloads, labels = [], []
    for lab, base in enumerate(bases):
        for _ in range(n_per):
            arr = np.clip(
                np.array(base) + rng.integers(-25, 26, size=(size[1], size[0], 3)),
                0, 255,
            ).astype(np.uint8)
            buf = io.BytesIO()
            Image.fromarray(arr, "RGB").save(buf, format="PNG")
            payloads.append(buf.getvalue())
            labels.append(lab)
    return write_images(dirpath, payloads), np.array(labels)


def synthetic_manifest(n, source="synthetic"):
    records = [
        PostRecord(record_id=i, source=source, image_path=f"img_{i:03d}.png",
                   content_hash=f"{i:064x}")
        for i in range(n)
    ]
    return Manifest(records=records)


def store_from_matrix(path, X, normalized=False):
    """Persist a raw matrix as a store with a synthetic aligned sidecar."""
    X = np.asarray(X, dtype=np.float32)
    manifest = synthetic_manifest(X.shape[0])
    write_store(EmbeddingMatrix(values=X, normalized=normalized),
                manifest, path)
    return manifest
