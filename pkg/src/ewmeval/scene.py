"""Scene consistency from per-frame patch embeddings.

Patch-position-aligned cosine similarity between consecutive frames (local
stability) and between each frame and the initial frame (drift from the
starting layout), averaged with equal weight and mapped to [0, 1].
"""

from dataclasses import dataclass

import numpy as np

from .datamodel import EmbeddingKind, EmbeddingTensor
from .errors import ShapeMismatch, TooFewFrames, ZeroNormPatch


@dataclass(frozen=True)
class SceneScore:
    per_frame_consecutive: np.ndarray  # cos(frame_i, frame_{i+1}), length frames-1
    per_frame_to_initial: np.ndarray   # cos(frame_0, frame_{i+1}), length frames-1
    aggregate: float                   # equal-weight mean, mapped [-1,1] -> [0,1]

    def __post_init__(self):
        if len(self.per_frame_consecutive) != len(self.per_frame_to_initial):
            raise ValueError("similarity streams must have equal length")
        if not (0.0 <= self.aggregate <= 1.0):
            raise ValueError(f"aggregate must be in [0,1], got {self.aggregate}")
        for name in ("per_frame_consecutive", "per_frame_to_initial"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def patch_cosine(fa: np.ndarray, fb: np.ndarray) -> float:
    """Mean over patch positions of cosine(fa[p], fb[p]).

    Both frames must be (patches, dim); the result lies in [-1, 1].
    """
    fa = np.asarray(fa, dtype=np.float64)
    fb = np.asarray(fb, dtype=np.float64)
    if fa.shape != fb.shape or fa.ndim != 2:
        raise ShapeMismatch(f"frame embeddings must share (patches, dim): {fa.shape} vs {fb.shape}")
    na = np.linalg.norm(fa, axis=1)
    nb = np.linalg.norm(fb, axis=1)
    if (na == 0).any() or (nb == 0).any():
        raise ZeroNormPatch("zero-norm patch vector; cosine undefined")
    cos = np.sum(fa * fb, axis=1) / (na * nb)
    return float(np.clip(cos, -1.0, 1.0).mean())


def scene_score(embeddings: EmbeddingTensor) -> SceneScore:
    """Score one video's patch_per_frame tensor (frames x patches x dim)."""
    if embeddings.kind is not EmbeddingKind.PATCH_PER_FRAME:
        raise ShapeMismatch(f"expected patch_per_frame tensor, got {embeddings.kind.name.lower()}")
    frames = embeddings.data
    if frames.shape[0] < 2:
        raise TooFewFrames(f"need >= 2 frames, got {frames.shape[0]}")
    consecutive = np.array(
        [patch_cosine(frames[i], frames[i + 1]) for i in range(frames.shape[0] - 1)]
    )
    to_initial = np.array(
        [patch_cosine(frames[0], frames[i + 1]) for i in range(frames.shape[0] - 1)]
    )
    combined = (consecutive + to_initial) / 2.0
    aggregate = (float(combined.mean()) + 1.0) / 2.0
    return SceneScore(
        per_frame_consecutive=consecutive,
        per_frame_to_initial=to_initial,
        aggregate=aggregate,
    )
