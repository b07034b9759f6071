"""Writer and reader for the embedding-tensor interchange format.

Layout, little-endian throughout: magic ``EWMB``, u32 version=1, u8 kind
code, u8 rank, u32 shape[rank], then the row-major f32 payload.  This module
owns its serializer so the exporters stand alone; the evaluation side ships
an independent loader for the same bytes.
"""

import os
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"EWMB"
WIRE_VERSION = 1

# kind codes and the tensor rank each one implies
PATCH_PER_FRAME = 1  # rank 3: frames x patches x dim
GLOBAL_VIDEO = 2     # rank 1: dim
STEP_TEXT = 3        # rank 2: steps x dim
GLOBAL_TEXT = 4      # rank 1: dim

KIND_RANKS = {PATCH_PER_FRAME: 3, GLOBAL_VIDEO: 1, STEP_TEXT: 2, GLOBAL_TEXT: 1}


def write_ewmb(path: str | Path, array: np.ndarray, kind: int) -> Path:
    """Serialize ``array`` as float32 under the given kind code.

    The write is atomic (temp file + rename) so a parallel batch never
    exposes a half-written tensor.  Identical inputs produce identical bytes.
    """
    if kind not in KIND_RANKS:
        raise ValueError(f"unknown embedding kind code {kind}")
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim != KIND_RANKS[kind]:
        raise ValueError(
            f"kind {kind} requires rank {KIND_RANKS[kind]} tensors, got rank {arr.ndim}"
        )
    if arr.size == 0:
        raise ValueError("refusing to write an empty tensor")
    if not np.isfinite(arr).all():
        raise ValueError("tensor contains NaN/Inf")

    header = MAGIC + struct.pack("<IBB", WIRE_VERSION, kind, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(header + arr.tobytes(order="C"))
    os.replace(tmp, path)
    return path


def read_ewmb(path: str | Path) -> tuple[np.ndarray, int]:
    """Parse a tensor file back into ``(float32 array, kind code)``."""
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: expected magic {MAGIC!r}, got {blob[:4]!r}")
    if len(blob) < 10:
        raise FormatError(f"{path}: header cut short")
    version, kind, rank = struct.unpack_from("<IBB", blob, 4)
    if version != WIRE_VERSION:
        raise FormatError(f"{path}: unsupported wire version {version}")
    if kind not in KIND_RANKS or rank != KIND_RANKS[kind]:
        raise FormatError(f"{path}: kind {kind} / rank {rank} do not match the format")
    shape_end = 10 + 4 * rank
    if len(blob) < shape_end:
        raise FormatError(f"{path}: shape vector cut short")
    shape = struct.unpack_from(f"<{rank}I", blob, 10)
    expected = int(np.prod(shape)) * 4
    payload = blob[shape_end:]
    if len(payload) != expected:
        raise FormatError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype="<f4").reshape(shape), kind
