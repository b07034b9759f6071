"""Deterministic reference encoders behind the exporter registry.

Production deployments swap in checkpoint-backed vision and text encoders
here; the registry entry is the seam.  The reference encoders below need no
weights: patch features are per-cell image statistics pushed through a fixed
seeded projection, text features are hashed character trigrams.  Both are
pure functions of their input, so exports replay byte-identically.
"""

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import EncoderLoadFailure, UsageError

LUM_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])


def _projection(name: str, rows: int, cols: int) -> np.ndarray:
    """Fixed gaussian projection, seeded by the encoder name."""
    rng = np.random.default_rng(zlib.crc32(name.encode("ascii")))
    return rng.standard_normal((rows, cols)) / math.sqrt(rows)


@dataclass(frozen=True)
class GridPatchEncoder:
    """Per-frame patch features over a regular cell grid.

    Each ``patch_size`` x ``patch_size`` cell yields 12 statistics (channel
    means and spreads, gradient energy, luminance extrema and centroid) plus
    a bias term, projected to ``dim`` channels.  The bias keeps every patch
    vector away from zero norm.
    """

    name: str
    patch_size: int
    dim: int
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.patch_size < 2:
            raise EncoderLoadFailure(f"patch size must be >= 2, got {self.patch_size}")
        if self.dim < 1:
            raise EncoderLoadFailure(f"embedding dim must be >= 1, got {self.dim}")
        object.__setattr__(self, "_weights", _projection(self.name, 13, self.dim))

    def grid(self, width: int, height: int) -> tuple[int, int]:
        """Cells across and down for a frame of the given size."""
        return width // self.patch_size, height // self.patch_size

    def patches_per_frame(self, width: int, height: int) -> int:
        gw, gh = self.grid(width, height)
        if gw == 0 or gh == 0:
            raise UsageError(
                f"frame {width}x{height} is smaller than one {self.patch_size}px patch"
            )
        return gw * gh

    def encode_frame(self, frame: np.ndarray) -> np.ndarray:
        height, width = frame.shape[0], frame.shape[1]
        gw, gh = self.grid(width, height)
        self.patches_per_frame(width, height)
        ps = self.patch_size

        x = frame.astype(np.float64) / 255.0
        x = x[: gh * ps, : gw * ps]
        cells = x.reshape(gh, ps, gw, ps, 3).transpose(0, 2, 1, 3, 4).reshape(gh * gw, ps, ps, 3)

        mean_rgb = cells.mean(axis=(1, 2))
        std_rgb = cells.std(axis=(1, 2))
        lum = cells @ LUM_WEIGHTS
        grad_x = np.abs(np.diff(lum, axis=2)).mean(axis=(1, 2))
        grad_y = np.abs(np.diff(lum, axis=1)).mean(axis=(1, 2))
        lum_lo = lum.min(axis=(1, 2))
        lum_hi = lum.max(axis=(1, 2))

        total = lum.sum(axis=(1, 2))
        coords = (np.arange(ps) + 0.5) / ps
        with np.errstate(invalid="ignore"):
            cx = np.where(total > 0, (lum.sum(axis=1) @ coords) / np.where(total > 0, total, 1.0), 0.5)
            cy = np.where(total > 0, (lum.sum(axis=2) @ coords) / np.where(total > 0, total, 1.0), 0.5)

        stats = np.column_stack(
            [mean_rgb, std_rgb, grad_x, grad_y, lum_lo, lum_hi, cx, cy, np.ones(gh * gw)]
        )
        return (stats @ self._weights).astype(np.float32)

    def encode_video(self, frames: np.ndarray) -> np.ndarray:
        """Stack per-frame patch features into (frames, patches, dim)."""
        if frames.ndim != 4 or frames.shape[0] < 1:
            raise UsageError(f"expected a (T, H, W, 3) frame stack, got {frames.shape}")
        return np.stack([self.encode_frame(f) for f in frames])


@dataclass(frozen=True)
class TrigramTextEncoder:
    """Unit-norm caption vectors from hashed character trigrams."""

    name: str
    dim: int
    _salt: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 8:
            raise EncoderLoadFailure(f"text dim must be >= 8, got {self.dim}")
        object.__setattr__(self, "_salt", zlib.crc32(self.name.encode("ascii")))

    def encode_one(self, text: str) -> np.ndarray:
        cleaned = " ".join(str(text).lower().split())
        if not cleaned:
            raise UsageError("caption is empty")
        padded = f" {cleaned} "
        counts = np.zeros(self.dim, dtype=np.float64)
        for i in range(len(padded) - 2):
            gram = padded[i : i + 3].encode("utf-8")
            counts[zlib.crc32(gram, self._salt) % self.dim] += 1.0
        return (counts / np.linalg.norm(counts)).astype(np.float32)

    def encode(self, texts) -> np.ndarray:
        texts = list(texts)
        if not texts:
            raise UsageError("no captions to embed")
        return np.stack([self.encode_one(t) for t in texts])


@dataclass(frozen=True)
class GlobalVideoEncoder:
    """One unit-norm vector per clip from frame-averaged color statistics."""

    name: str
    dim: int
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise EncoderLoadFailure(f"embedding dim must be >= 1, got {self.dim}")
        object.__setattr__(self, "_weights", _projection(self.name, 23, self.dim))

    def encode(self, frames: np.ndarray) -> np.ndarray:
        if frames.ndim != 4 or frames.shape[0] < 1:
            raise UsageError(f"expected a (T, H, W, 3) frame stack, got {frames.shape}")
        feats = []
        for frame in frames:
            x = frame.astype(np.float64) / 255.0
            lum = x @ LUM_WEIGHTS
            hist = np.histogram(lum, bins=16, range=(0.0, 1.0))[0] / lum.size
            feats.append(
                np.concatenate([x.mean(axis=(0, 1)), x.std(axis=(0, 1)), hist, [1.0]])
            )
        vec = np.mean(feats, axis=0) @ self._weights
        return (vec / np.linalg.norm(vec)).astype(np.float32)


_PATCH_ENCODERS = {
    "grid16": lambda: GridPatchEncoder("grid16", patch_size=16, dim=64),
    "grid32": lambda: GridPatchEncoder("grid32", patch_size=32, dim=64),
}
_TEXT_ENCODERS = {
    "trigram256": lambda: TrigramTextEncoder("trigram256", dim=256),
}
_VIDEO_ENCODERS = {
    "vstats64": lambda: GlobalVideoEncoder("vstats64", dim=64),
}


def _lookup(registry, name, what):
    try:
        return registry[name]()
    except KeyError:
        known = ", ".join(sorted(registry))
        raise EncoderLoadFailure(f"unknown {what} encoder '{name}' (available: {known})") from None


def patch_encoder(name: str) -> GridPatchEncoder:
    return _lookup(_PATCH_ENCODERS, name, "scene")


def text_encoder(name: str) -> TrigramTextEncoder:
    return _lookup(_TEXT_ENCODERS, name, "text")


def video_encoder(name: str) -> GlobalVideoEncoder:
    return _lookup(_VIDEO_ENCODERS, name, "video")
