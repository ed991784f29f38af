"""Image ingestion, manifests, and the binary embedding store.

Store layout (little-endian): 8-byte magic "EMBS0001", u32 row count, u32
dimension, u8 normalized flag, then the row-major float32 payload. Row
provenance lives in a JSON-lines sidecar at <path>.jsonl, one object per row:
{record_id, source, image_path, content_hash}. All writes go through a temp
file plus rename, so readers never observe partial files.
"""

import hashlib
import io
import json
import logging
import os
import struct
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from time import time

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import (
    AlignmentError,
    CorruptStoreError,
    SampleError,
    TruncatedStoreError,
)
from .validation import check_aligned

logger = logging.getLogger(__name__)

MAGIC = b"EMBS0001"
_HEADER = struct.Struct("<IIB")


@dataclass(frozen=True)
class PostRecord:
    """Provenance of one ingested image."""
    record_id: int
    source: str
    image_path: str
    content_hash: str

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "source": self.source,
            "image_path": self.image_path,
            "content_hash": self.content_hash,
        }


@dataclass
class Manifest:
    """Ordered image records. created_at is in-memory bookkeeping only; it is
    never persisted, so re-running a stage rewrites byte-identical outputs."""
    records: list[PostRecord] = field(default_factory=list)
    created_at: float = field(default_factory=time)
    dedup: bool = False

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_jsonl(self, path) -> None:
        atomic_write(path, _records_bytes(self.records))

    @classmethod
    def from_jsonl(cls, path) -> "Manifest":
        records = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                records.append(PostRecord(
                    record_id=int(row["record_id"]),
                    source=row["source"],
                    image_path=row["image_path"],
                    content_hash=row["content_hash"],
                ))
        hashes = [r.content_hash for r in records]
        return cls(records=records, dedup=len(set(hashes)) == len(hashes))


@dataclass
class EmbeddingMatrix:
    """n x D float32 matrix, row i aligned with manifest entry i."""
    values: np.ndarray
    normalized: bool = False


def _records_bytes(records) -> bytes:
    lines = [json.dumps(r.to_dict(), sort_keys=True) for r in records]
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _probe_file(path: Path):
    """Hash and decode-check one file; returns the content hash or None when
    the bytes are not a decodable image."""
    raw = path.read_bytes()
    try:
        img = Image.open(io.BytesIO(raw))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError):
        return None
    return hashlib.sha256(raw).hexdigest()


def ingest(directory, source: str | None = None, n_threads: int = 1) -> Manifest:
    """One record per decodable image file under the directory (recursive),
    sorted by path for determinism; undecodable files are logged and skipped.
    record_ids number the surviving files 0..n-1 in path order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"not a readable directory: {directory}")
    if source is None:
        source = directory.name

    paths = sorted(p for p in directory.rglob("*") if p.is_file())
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            hashes = list(pool.map(_probe_file, paths))
    else:
        hashes = [_probe_file(p) for p in paths]

    records = []
    for path, digest in zip(paths, hashes):
        if digest is None:
            logger.warning("skipping undecodable file %s", path)
            continue
        records.append(PostRecord(
            record_id=len(records),
            source=source,
            image_path=str(path),
            content_hash=digest,
        ))
    return Manifest(records=records)


def deduplicate(manifest: Manifest) -> Manifest:
    """Keep the first record per content_hash, preserving order."""
    seen: set[str] = set()
    kept = []
    for record in manifest.records:
        if record.content_hash in seen:
            continue
        seen.add(record.content_hash)
        kept.append(record)
    return replace(manifest, records=kept, dedup=True)


def sample(manifest: Manifest, n: int, seed: int) -> Manifest:
    """Uniform sample of n records without replacement, original relative
    order preserved, deterministic per seed."""
    total = len(manifest)
    if n > total:
        raise SampleError(f"cannot sample {n} of {total} records")
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(total, size=n, replace=False))
    return replace(manifest, records=[manifest.records[i] for i in keep])


def write_store(store: EmbeddingMatrix, manifest: Manifest, path) -> None:
    """Persist matrix + sidecar; rows must align with the manifest."""
    values = np.asarray(store.values, dtype="<f4")
    if values.ndim != 2:
        raise AlignmentError(f"expected a 2-D matrix, got shape {values.shape}")
    check_aligned(values.shape[0], len(manifest), "manifest")

    header = MAGIC + _HEADER.pack(values.shape[0], values.shape[1],
                                  1 if store.normalized else 0)
    atomic_write(path, header + np.ascontiguousarray(values).tobytes())
    manifest.to_jsonl(str(path) + ".jsonl")


def read_store(path) -> tuple[EmbeddingMatrix, Manifest]:
    """Read and validate a store file and its sidecar."""
    buf = Path(path).read_bytes()
    if buf[:len(MAGIC)] != MAGIC:
        raise CorruptStoreError(f"{path}: bad magic {buf[:len(MAGIC)]!r}")
    if len(buf) < len(MAGIC) + _HEADER.size:
        raise TruncatedStoreError(f"{path}: header truncated")
    rows, dim, flag = _HEADER.unpack_from(buf, len(MAGIC))
    if flag not in (0, 1):
        raise CorruptStoreError(f"{path}: bad normalized flag {flag}")
    payload = buf[len(MAGIC) + _HEADER.size:]
    expected = rows * dim * 4
    if len(payload) < expected:
        raise TruncatedStoreError(
            f"{path}: payload has {len(payload)} bytes, need {expected}"
        )
    if len(payload) > expected:
        raise CorruptStoreError(f"{path}: {len(payload) - expected} trailing bytes")
    values = np.frombuffer(payload, dtype="<f4", count=rows * dim)
    values = values.reshape(rows, dim).copy()

    sidecar = str(path) + ".jsonl"
    if not os.path.exists(sidecar):
        raise CorruptStoreError(f"{path}: sidecar {sidecar} not found")
    manifest = Manifest.from_jsonl(sidecar)
    if len(manifest) != rows:
        raise AlignmentError(
            f"{path}: store has {rows} rows, sidecar has {len(manifest)}"
        )
    return EmbeddingMatrix(values=values, normalized=bool(flag)), manifest
