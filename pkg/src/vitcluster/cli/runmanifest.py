"""Per-stage run manifests: enough to reproduce any output file.

Each subcommand writes <stage>.manifest.json next to its outputs, recording
the tool version, the fully resolved configuration, input paths with content
hashes, output paths, seeds, and wall-clock duration. Outputs themselves
never embed timestamps, so re-running a stage with the same inputs and seed
rewrites byte-identical files.
"""

import hashlib
import json
from pathlib import Path


def file_sha256(path) -> str | None:
    """Content hash of a file; None for directory inputs (their contents are
    hashed individually by the stages that read them)."""
    if Path(path).is_dir():
        return None
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_run_manifest(out_dir, stage: str, version: str, config: dict,
                       inputs: list[str], outputs: list[str], seed: int,
                       duration_s: float) -> Path:
    manifest = {
        "tool_version": version,
        "subcommand": stage,
        "config": config,
        "inputs": [{"path": str(p), "sha256": file_sha256(p)} for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "duration_s": round(duration_s, 6),
    }
    path = Path(out_dir) / f"{stage}.manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n",
                    encoding="utf-8")
    return path
