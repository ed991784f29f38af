"""Model weights: tensor naming, random initialization, and the binary
weight-file format.

File layout (little-endian): 8-byte magic "VITW0001", u32 header length, a
UTF-8 JSON header mapping tensor names to {"shape": [...], "offset": n} with
offsets relative to the start of the payload, then raw float32 payloads.
Tensors are laid out in sorted-name order so identical weights always produce
identical files.
"""

import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..exceptions import CorruptWeightsError, MissingTensorError, ShapeError
from .config import ModelConfig

MAGIC = b"VITW0001"


def expected_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Tensor name -> shape for a config. Naming scheme:
    layer.{i}.attn.{wq,wk,wv,wo}, layer.{i}.norm{1,2}.{scale,shift},
    layer.{i}.mlp.{w1,b1,w2,b2}, plus patch_projection, class_token,
    pos_embedding, final_norm.{scale,shift}, and the optional head.w."""
    d = config.hidden_dim
    shapes: dict[str, tuple[int, ...]] = {
        "patch_projection": (config.patch_dim, d),
        "class_token": (d,),
        "pos_embedding": (config.n_patches + 1, d),
        "final_norm.scale": (d,),
        "final_norm.shift": (d,),
    }
    for i in range(config.num_layers):
        p = f"layer.{i}."
        shapes[p + "attn.wq"] = (d, d)
        shapes[p + "attn.wk"] = (d, d)
        shapes[p + "attn.wv"] = (d, d)
        shapes[p + "attn.wo"] = (d, d)
        shapes[p + "norm1.scale"] = (d,)
        shapes[p + "norm1.shift"] = (d,)
        shapes[p + "norm2.scale"] = (d,)
        shapes[p + "norm2.shift"] = (d,)
        shapes[p + "mlp.w1"] = (d, config.mlp_dim)
        shapes[p + "mlp.b1"] = (config.mlp_dim,)
        shapes[p + "mlp.w2"] = (config.mlp_dim, d)
        shapes[p + "mlp.b2"] = (d,)
    if config.num_classes is not None:
        shapes["head.w"] = (d, config.num_classes)
    return shapes


@dataclass
class ModelWeights:
    """Immutable-by-convention tensor bundle, shareable across workers."""
    config: ModelConfig
    tensors: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.tensors[name]
        except KeyError:
            raise MissingTensorError(f"missing tensor {name!r}") from None

    def layer(self, i: int) -> dict[str, np.ndarray]:
        """Short-key view of layer i's tensors (wq, norm1_scale, w1, ...)."""
        p = f"layer.{i}."
        return {
            "wq": self[p + "attn.wq"],
            "wk": self[p + "attn.wk"],
            "wv": self[p + "attn.wv"],
            "wo": self[p + "attn.wo"],
            "norm1_scale": self[p + "norm1.scale"],
            "norm1_shift": self[p + "norm1.shift"],
            "norm2_scale": self[p + "norm2.scale"],
            "norm2_shift": self[p + "norm2.shift"],
            "w1": self[p + "mlp.w1"],
            "b1": self[p + "mlp.b1"],
            "w2": self[p + "mlp.w2"],
            "b2": self[p + "mlp.b2"],
        }

    @classmethod
    def random(cls, config: ModelConfig, seed: int = 0) -> "ModelWeights":
        """Seeded random weights for testing: N(0, 0.02) projections, unit
        layer-norm scales, zero shifts and biases."""
        rng = np.random.default_rng(seed)
        tensors: dict[str, np.ndarray] = {}
        for name, shape in expected_shapes(config).items():
            base = name.rsplit(".", 1)[-1]
            if base in ("scale",):
                tensors[name] = np.ones(shape, dtype=np.float32)
            elif base in ("shift", "b1", "b2"):
                tensors[name] = np.zeros(shape, dtype=np.float32)
            else:
                tensors[name] = rng.normal(0.0, 0.02, size=shape).astype(np.float32)
        return cls(config=config, tensors=tensors)


def _validate(tensors: dict[str, np.ndarray], config: ModelConfig) -> None:
    for name, shape in expected_shapes(config).items():
        if name not in tensors:
            raise MissingTensorError(f"missing tensor {name!r}")
        got = tensors[name].shape
        if tuple(got) != shape:
            raise ShapeError(f"tensor {name!r} has shape {tuple(got)}, expected {shape}")
        if not np.isfinite(tensors[name]).all():
            raise CorruptWeightsError(f"tensor {name!r} contains non-finite values")


def save_weights(weights: ModelWeights, path) -> None:
    """Write the binary weight file atomically (temp file + rename)."""
    names = sorted(expected_shapes(weights.config))
    header: dict[str, dict] = {}
    offset = 0
    chunks: list[bytes] = []
    for name in names:
        arr = np.ascontiguousarray(weights[name], dtype="<f4")
        header[name] = {"shape": list(arr.shape), "offset": offset}
        raw = arr.tobytes()
        chunks.append(raw)
        offset += len(raw)
    header_bytes = json.dumps(header, sort_keys=True,
                              separators=(",", ":")).encode("utf-8")

    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(header_bytes)))
            fh.write(header_bytes)
            for raw in chunks:
                fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_weights(path, config: ModelConfig) -> ModelWeights:
    """Read and validate a weight file against the config. Raises
    CorruptWeightsError for unparseable or truncated files, MissingTensorError
    when a required tensor is absent, ShapeError on any shape mismatch."""
    buf = Path(path).read_bytes()
    if len(buf) < len(MAGIC) + 4:
        raise CorruptWeightsError(f"{path}: file too short for header")
    if buf[:len(MAGIC)] != MAGIC:
        raise CorruptWeightsError(f"{path}: bad magic {buf[:len(MAGIC)]!r}")
    (header_len,) = struct.unpack("<I", buf[len(MAGIC):len(MAGIC) + 4])
    header_end = len(MAGIC) + 4 + header_len
    if header_end > len(buf):
        raise CorruptWeightsError(f"{path}: header extends past end of file")
    try:
        header = json.loads(buf[len(MAGIC) + 4:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptWeightsError(f"{path}: unparseable header: {exc}") from exc
    payload = buf[header_end:]

    tensors: dict[str, np.ndarray] = {}
    for name, shape in expected_shapes(config).items():
        entry = header.get(name)
        if entry is None:
            raise MissingTensorError(f"{path}: missing tensor {name!r}")
        got = tuple(entry["shape"])
        if got != shape:
            raise ShapeError(f"{path}: tensor {name!r} has shape {got}, expected {shape}")
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        start = int(entry["offset"])
        end = start + 4 * count
        if start < 0 or end > len(payload):
            raise CorruptWeightsError(f"{path}: tensor {name!r} payload truncated")
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=start)
        tensors[name] = arr.reshape(shape).copy()
    weights = ModelWeights(config=config, tensors=tensors)
    _validate(tensors, config)
    return weights
