"""Deterministic on-disk formats: binary blobs, JSONL datasets, manifests.

All writers produce byte-identical files for identical inputs: JSON is
emitted with sorted keys and shortest-roundtrip floats, and the blob
container stores raw little-endian arrays behind a JSON index (no
timestamps, unlike zip-based containers).
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .errors import SchemaError

BLOB_MAGIC = b"TFBLOB01"


def dump_json(obj, indent=None) -> str:
    return json.dumps(obj, sort_keys=True, indent=indent, allow_nan=False)


def write_json(path, obj, indent=2):
    with open(path, "w") as fh:
        fh.write(dump_json(obj, indent=indent))
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical_hash(obj) -> str:
    """Stable digest of a JSON-serializable object."""
    return hashlib.sha256(dump_json(obj).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Binary blob container: JSON index + concatenated raw arrays


def write_blob(path, arrays: dict, meta: dict | None = None):
    """Store named float/int arrays with a JSON header, deterministically."""
    index = {}
    offset = 0
    names = sorted(arrays)
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        index[name] = {
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        }
        blobs.append(raw)
        offset += len(raw)
    header = dump_json({"meta": meta or {}, "arrays": index}).encode()
    with open(path, "wb") as fh:
        fh.write(BLOB_MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)


def read_blob(path) -> tuple[dict, dict]:
    """Return (arrays, meta) from a blob container."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != BLOB_MAGIC:
            raise SchemaError(f"{path}: not a blob container")
        hlen = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(hlen).decode())
        base = fh.tell()
        arrays = {}
        for name, info in header["arrays"].items():
            fh.seek(base + info["offset"])
            raw = fh.read(info["nbytes"])
            arrays[name] = np.frombuffer(raw, dtype=np.dtype(info["dtype"])).reshape(
                info["shape"]
            ).copy()
    return arrays, header.get("meta", {})


# ---------------------------------------------------------------------------
# JSON Lines datasets with a versioned header line


def write_jsonl(path, header: dict, rows):
    with open(path, "w") as fh:
        fh.write(dump_json(header))
        fh.write("\n")
        for row in rows:
            fh.write(dump_json(row))
            fh.write("\n")


def read_jsonl(path, expect_format: str | None = None):
    with open(path) as fh:
        header = json.loads(fh.readline())
        if expect_format and header.get("format") != expect_format:
            raise SchemaError(
                f"{path}: format {header.get('format')!r} != {expect_format!r}"
            )
        rows = [json.loads(line) for line in fh if line.strip()]
    return header, rows


def write_f64(path, arrays: list):
    """Plain concatenated little-endian float64 sidecar; returns offsets."""
    offsets = []
    count = 0
    with open(path, "wb") as fh:
        for arr in arrays:
            a = np.ascontiguousarray(arr, dtype="<f8")
            offsets.append({"offset": count, "count": int(a.size)})
            fh.write(a.tobytes())
            count += a.size
    return offsets


def read_f64(path, offset: int = 0, count: int | None = None) -> np.ndarray:
    with open(path, "rb") as fh:
        fh.seek(offset * 8)
        raw = fh.read(-1 if count is None else count * 8)
    return np.frombuffer(raw, dtype="<f8").copy()


# ---------------------------------------------------------------------------
# Run manifests


def write_manifest(out_path, command: str, config: dict, seed,
                   inputs: list, outputs: list, wall_time_s: float, version: str):
    """Provenance record next to a command's primary output."""
    manifest = {
        "format": "tandemflow-manifest",
        "version": 1,
        "command": command,
        "config": config,
        "seed": seed,
        "tool_version": version,
        "inputs": {str(p): sha256_file(p) for p in inputs if os.path.exists(p)},
        "outputs": {str(p): sha256_file(p) for p in outputs if os.path.exists(p)},
        "wall_time_s": wall_time_s,
    }
    write_json(out_path, manifest)
    return manifest


def manifest_path_for(primary_output) -> Path:
    p = Path(primary_output)
    if p.suffix:
        return p.with_suffix(p.suffix + ".manifest.json")
    return p / "manifest.json"
