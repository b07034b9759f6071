"""Video decoding and normalization.

Two container forms are accepted:

* ``.npz`` holding ``frames`` (T, H, W, 3) uint8 and optionally a scalar
  ``fps``,
* a directory of image frames ordered by filename, with an optional
  ``meta.json`` carrying ``{"fps": ...}``.

Both decode to the same in-memory :class:`Video`, and every exporter first
normalizes that to a fixed size and frame rate so different sources feed the
encoders identically.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DecodeFailure, MissingInput, UsageError

DEFAULT_FPS = 30.0
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass(frozen=True)
class Video:
    """Decoded clip: uint8 RGB frames (T, H, W, 3) plus its frame rate."""

    frames: np.ndarray
    fps: float = DEFAULT_FPS

    def __post_init__(self):
        arr = np.asarray(self.frames)
        if arr.ndim != 4 or arr.shape[3] != 3:
            raise DecodeFailure(f"frames must be (T, H, W, 3), got {arr.shape}")
        if arr.shape[0] < 1:
            raise DecodeFailure("video has no frames")
        if arr.dtype != np.uint8:
            raise DecodeFailure(f"frames must be uint8, got {arr.dtype}")
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise DecodeFailure(f"fps must be a positive finite number, got {self.fps}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "frames", arr)
        object.__setattr__(self, "fps", float(self.fps))

    @property
    def size(self) -> tuple[int, int]:
        """(width, height) of each frame."""
        return self.frames.shape[2], self.frames.shape[1]

    def __len__(self) -> int:
        return self.frames.shape[0]


def _decode_npz(path: Path) -> Video:
    try:
        with np.load(path) as data:
            if "frames" not in data:
                raise DecodeFailure(f"{path}: npz carries no 'frames' array")
            frames = data["frames"]
            fps = float(data["fps"]) if "fps" in data else DEFAULT_FPS
    except DecodeFailure:
        raise
    except Exception as exc:
        raise DecodeFailure(f"{path}: not a readable npz container: {exc}") from exc
    return Video(frames=frames, fps=fps)


def _decode_frame_dir(path: Path) -> Video:
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise DecodeFailure(f"{path}: directory holds no frame images")
    frames = []
    for f in files:
        try:
            with Image.open(f) as img:
                frames.append(np.asarray(img.convert("RGB"), dtype=np.uint8))
        except Exception as exc:
            raise DecodeFailure(f"{f}: unreadable frame image: {exc}") from exc
    shapes = {fr.shape for fr in frames}
    if len(shapes) != 1:
        raise DecodeFailure(f"{path}: frame images disagree on size: {sorted(shapes)}")

    fps = DEFAULT_FPS
    meta = path / "meta.json"
    if meta.exists():
        try:
            fps = float(json.loads(meta.read_text(encoding="utf-8")).get("fps", DEFAULT_FPS))
        except (ValueError, TypeError) as exc:
            raise DecodeFailure(f"{meta}: bad metadata: {exc}") from exc
    return Video(frames=np.stack(frames), fps=fps)


def decode_video(path: str | Path) -> Video:
    """Decode an npz frame stack or a frame-image directory."""
    path = Path(path)
    if not path.exists():
        raise MissingInput(f"video not found: {path}")
    if path.is_dir():
        return _decode_frame_dir(path)
    if path.suffix.lower() == ".npz":
        return _decode_npz(path)
    raise DecodeFailure(f"{path}: unsupported video container '{path.suffix}'")


def _resample_indices(n_in: int, fps_in: float, fps_out: float) -> np.ndarray:
    """Nearest-frame index map onto the output timeline (center sampling)."""
    n_out = max(1, int(round(n_in * fps_out / fps_in)))
    idx = np.floor((np.arange(n_out) + 0.5) * fps_in / fps_out).astype(np.intp)
    return np.clip(idx, 0, n_in - 1)


def normalize_video(
    video: Video,
    size: tuple[int, int] = (640, 480),
    fps: float = DEFAULT_FPS,
) -> Video:
    """Resize to ``size`` (width, height) and resample to ``fps``.

    Temporal resampling picks the nearest source frame for each output
    instant; spatial resizing is bilinear.  A video already matching both
    targets is returned as-is.
    """
    width, height = size
    if width < 1 or height < 1:
        raise UsageError(f"target size must be positive, got {size}")
    if not (fps > 0 and math.isfinite(fps)):
        raise UsageError(f"target fps must be a positive finite number, got {fps}")

    frames = video.frames
    if video.fps != fps:
        frames = frames[_resample_indices(len(frames), video.fps, fps)]
    if video.size != (width, height):
        resized = [
            np.asarray(
                Image.fromarray(frame).resize((width, height), Image.BILINEAR),
                dtype=np.uint8,
            )
            for frame in frames
        ]
        frames = np.stack(resized)
    if frames is video.frames:
        return video
    return Video(frames=frames, fps=fps)
