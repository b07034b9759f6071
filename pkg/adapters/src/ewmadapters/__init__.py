"""ewmadapters: evidence exporters feeding the ewmeval pipeline.

The exporters decode raw episode videos, normalize them to a fixed size and
frame rate, and write the interchange files the evaluator consumes: binary
embedding tensors plus caption/verdict JSON sidecars.  They are deliberately
score-free; all judgment lives on the evaluation side of the file boundary.
"""

from .config import AdapterConfig
from .encoders import (
    GlobalVideoEncoder,
    GridPatchEncoder,
    TrigramTextEncoder,
    patch_encoder,
    text_encoder,
    video_encoder,
)
from .errors import (
    AdapterError,
    DecodeFailure,
    EncoderLoadFailure,
    EndpointFailure,
    FormatError,
    MissingInput,
    SchemaViolation,
    UsageError,
)
from .ewmb import (
    GLOBAL_TEXT,
    GLOBAL_VIDEO,
    PATCH_PER_FRAME,
    STEP_TEXT,
    read_ewmb,
    write_ewmb,
)
from .exporters import (
    BatchResult,
    MllmBatch,
    export_mllm_batch,
    export_mllm_outputs,
    export_scene_batch,
    export_scene_embeddings,
    export_semantic_batch,
    export_semantic_embeddings,
    export_text_embeddings,
    iter_manifest_episodes,
)
from .mllm import (
    MllmClient,
    TEMPLATE_VERSION,
    describe_video,
    generation_prompt,
    load_template,
    templates_dir,
)
from .video import Video, decode_video, normalize_video

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "BatchResult",
    "DecodeFailure",
    "EncoderLoadFailure",
    "EndpointFailure",
    "FormatError",
    "GLOBAL_TEXT",
    "GLOBAL_VIDEO",
    "GlobalVideoEncoder",
    "GridPatchEncoder",
    "MissingInput",
    "MllmBatch",
    "MllmClient",
    "PATCH_PER_FRAME",
    "STEP_TEXT",
    "SchemaViolation",
    "TEMPLATE_VERSION",
    "TrigramTextEncoder",
    "UsageError",
    "Video",
    "decode_video",
    "describe_video",
    "export_mllm_batch",
    "export_mllm_outputs",
    "export_scene_batch",
    "export_scene_embeddings",
    "export_semantic_batch",
    "export_semantic_embeddings",
    "export_text_embeddings",
    "generation_prompt",
    "iter_manifest_episodes",
    "load_template",
    "normalize_video",
    "patch_encoder",
    "read_ewmb",
    "templates_dir",
    "text_encoder",
    "video_encoder",
    "write_ewmb",
]
