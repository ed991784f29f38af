"""Image decoding and normalization ahead of the encoder."""

import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..exceptions import DecodeError, InvalidImageError


def preprocess(raw: bytes, image_size: int = 224) -> np.ndarray:
    """Decode PNG/JPEG bytes, bilinearly resize to image_size square, scale to
    [0, 1], then standardize every channel with mean 0.5 and std 0.5. Returns
    an (image_size, image_size, 3) float32 array in [-1, 1]."""
    try:
        img = Image.open(io.BytesIO(raw))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image bytes: {exc}") from exc
    if img.width == 0 or img.height == 0:
        raise InvalidImageError(f"image has zero dimension: {img.size}")
    img = img.convert("RGB")
    if img.size != (image_size, image_size):
        img = img.resize((image_size, image_size), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32) / 255.0
    return (arr - 0.5) / 0.5
