"""Shared exporter configuration."""

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import UsageError


@dataclass(frozen=True)
class AdapterConfig:
    """Knobs shared by every exporter.

    ``frame_size`` is (width, height); all videos are normalized to it and to
    ``frame_rate`` before encoding, then thinned by ``frame_stride``.  With
    ``output_dir`` unset, outputs land next to their source video.
    """

    scene_encoder: str = "grid16"
    text_encoder: str = "trigram256"
    video_encoder: str = "vstats64"
    frame_stride: int = 1
    frame_size: tuple[int, int] = (640, 480)
    frame_rate: float = 30.0
    output_dir: Path | None = None

    def __post_init__(self):
        if not (isinstance(self.frame_stride, int) and self.frame_stride >= 1):
            raise UsageError(f"frame_stride must be an integer >= 1, got {self.frame_stride!r}")
        width, height = self.frame_size
        if width < 1 or height < 1:
            raise UsageError(f"frame_size must be positive, got {self.frame_size}")
        if not (self.frame_rate > 0 and math.isfinite(self.frame_rate)):
            raise UsageError(f"frame_rate must be a positive finite number, got {self.frame_rate}")
        if self.output_dir is not None:
            object.__setattr__(self, "output_dir", Path(self.output_dir))
