"""Binary checkpoint container.

Layout (all integers little-endian):

    magic  b"CYGN"
    u32    format version (currently 1)
    u32    metadata byte length, then that many bytes of UTF-8 "key=value"
           lines (run configuration, seed, rng algorithm, step counter)
    u32    tensor count
    per tensor:
        u16   name byte length, then UTF-8 name
        u8    dtype code (0 = float32, 1 = float64)
        u8    rank
        u32   dims[rank]
        raw   row-major element bytes

Writes go to a sibling temp file and are renamed into place, so a crash
never leaves a half-written checkpoint under the target name. Read errors
report the byte offset where parsing failed.
"""

from __future__ import annotations

import io
import os
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"CYGN"
VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES_BY_KIND = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
MAX_RANK = 8


def save_checkpoint(path, tensors: dict[str, np.ndarray], metadata: dict[str, str]):
    """Write tensors plus metadata atomically to `path`."""
    path = Path(path)
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    lines = []
    for k, v in metadata.items():
        k, v = str(k), str(v)
        if "=" in k or "\n" in k or "\n" in v:
            raise ValueError(f"metadata key/value not encodable: {k!r}={v!r}")
        lines.append(f"{k}={v}\n")
    meta = "".join(lines).encode("utf-8")
    buf.write(struct.pack("<I", len(meta)))
    buf.write(meta)
    buf.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        if arr.dtype not in _CODES_BY_KIND:
            raise ValueError(f"tensor {name!r} has unsupported dtype {arr.dtype}")
        if arr.ndim > MAX_RANK:
            raise ValueError(f"tensor {name!r} has rank {arr.ndim} > {MAX_RANK}")
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        code = _CODES_BY_KIND[arr.dtype]
        buf.write(struct.pack("<BB", code, arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(np.ascontiguousarray(arr, dtype=_DTYPE_CODES[code]).tobytes())

    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(buf.getvalue())
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


class _Reader:
    def __init__(self, blob: bytes, source: str):
        self.blob = blob
        self.pos = 0
        self.source = source

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointError(f"{self.source}: truncated reading {what} at byte {self.pos} "
                                  f"(wanted {n} bytes, {len(self.blob) - self.pos} left)")
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_checkpoint(path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Read a checkpoint; returns (metadata, tensors by name)."""
    path = Path(path)
    r = _Reader(path.read_bytes(), str(path))
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r} at byte 0, expected {MAGIC!r}")
    (version,) = r.unpack("<I", "version")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    (meta_len,) = r.unpack("<I", "metadata length")
    try:
        meta_text = r.take(meta_len, "metadata").decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CheckpointError(f"{path}: metadata is not valid UTF-8: {exc}") from exc
    metadata: dict[str, str] = {}
    for line in meta_text.splitlines():
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CheckpointError(f"{path}: metadata line without '=': {line!r}")
        metadata[key] = value

    (count,) = r.unpack("<I", "tensor count")
    tensors: dict[str, np.ndarray] = {}
    for i in range(count):
        at = r.pos
        (name_len,) = r.unpack("<H", f"tensor {i} name length")
        try:
            name = r.take(name_len, f"tensor {i} name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CheckpointError(f"{path}: tensor {i} name at byte {at} is not UTF-8") from exc
        code, rank = r.unpack("<BB", f"tensor {name!r} header")
        if code not in _DTYPE_CODES:
            raise CheckpointError(f"{path}: tensor {name!r} at byte {at} has unknown dtype "
                                  f"code {code}")
        if rank > MAX_RANK:
            raise CheckpointError(f"{path}: tensor {name!r} at byte {at} has rank {rank} > {MAX_RANK}")
        dims = r.unpack(f"<{rank}I", f"tensor {name!r} dims") if rank else ()
        dtype = _DTYPE_CODES[code]
        n_elem = int(np.prod(dims, dtype=np.int64)) if rank else 1
        raw = r.take(n_elem * dtype.itemsize, f"tensor {name!r} data")
        if name in tensors:
            raise CheckpointError(f"{path}: duplicate tensor name {name!r} at byte {at}")
        tensors[name] = np.frombuffer(raw, dtype=dtype).reshape(dims).astype(dtype.newbyteorder("="))
    if r.pos != len(r.blob):
        raise CheckpointError(f"{path}: {len(r.blob) - r.pos} trailing bytes after last tensor "
                              f"at byte {r.pos}")
    return metadata, tensors
