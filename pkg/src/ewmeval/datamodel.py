"""Domain types and loaders for the file-based interchange formats.

Three formats cross the tool boundary:

* manifest: JSON (``schema_version: 1``) listing models, tasks, episodes,
  and per-candidate evidence paths,
* trajectory: CSV with header ``t,x,y`` or ``t,x,y,z`` (or an equivalent
  JSON form),
* embedding tensor: little-endian binary with magic ``EWMB``, u32 version=1,
  u8 kind code, u8 rank, u32 shape[rank], then row-major f32 payload.

Loaded values are immutable and safe to share between worker threads.
"""

import csv
import io
import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    EmptyTrajectory,
    MissingEvidence,
    NonFinitePoint,
    NonFiniteValue,
    ParseError,
    SchemaError,
    TruncatedFile,
)

SCHEMA_VERSION = 1
DEFAULT_FRAME_RATE = 30.0  # videos are normalized to 30 FPS upstream

# Step captions outside this band are legal but unusual enough to warn about:
# tasks are decomposed into 4..10 atomic sub-actions.
STEP_CAPTION_HARD_RANGE = (1, 20)
STEP_CAPTION_SOFT_RANGE = (4, 10)


class Hand(Enum):
    LEFT = "left"
    RIGHT = "right"
    UNKNOWN = "unknown"


class EmbeddingKind(Enum):
    PATCH_PER_FRAME = 1  # rank 3: frames x patches x dim
    GLOBAL_VIDEO = 2     # rank 1: dim
    STEP_TEXT = 3        # rank 2: steps x dim
    GLOBAL_TEXT = 4      # rank 1: dim


class LogicVerdict(Enum):
    PASS = "pass"
    VIOLATION = "violation"


def _require_finite_xy(value: float, what: str):
    if not math.isfinite(value):
        raise NonFinitePoint(f"{what} is not finite: {value!r}")


@dataclass(frozen=True)
class Point2:
    """Detected end-effector position in image coordinates (pixels)."""

    x: float
    y: float

    def __post_init__(self):
        _require_finite_xy(self.x, "x")
        _require_finite_xy(self.y, "y")


@dataclass(frozen=True)
class Point3:
    """End-effector position in workspace coordinates (meters)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        _require_finite_xy(self.x, "x")
        _require_finite_xy(self.y, "y")
        _require_finite_xy(self.z, "z")


@dataclass(frozen=True)
class Trajectory:
    """Ordered end-effector point sequence, 2-D (pixels) or 3-D (meters).

    ``points`` is an (n, 2) or (n, 3) float64 array in time order.  The
    array is frozen; all metric code treats trajectories as values.
    """

    points: np.ndarray
    frame_rate: float = DEFAULT_FRAME_RATE
    hand: Hand = Hand.UNKNOWN

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise ParseError(f"trajectory points must be (n,2) or (n,3), got {pts.shape}")
        if pts.shape[0] < 1:
            raise EmptyTrajectory("trajectory has no points")
        if not np.isfinite(pts).all():
            bad = int(np.argwhere(~np.isfinite(pts).all(axis=1))[0][0])
            raise NonFinitePoint(f"non-finite point at index {bad}")
        if not (self.frame_rate > 0):
            raise ParseError(f"frame_rate must be > 0, got {self.frame_rate}")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class EmbeddingTensor:
    """Dense float32 tensor with a self-describing header."""

    data: np.ndarray  # row-major float32, already shaped
    kind: EmbeddingKind

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim < 1 or arr.ndim > 3:
            raise ParseError(f"embedding rank must be 1-3, got {arr.ndim}")
        if self.kind is EmbeddingKind.PATCH_PER_FRAME and arr.ndim != 3:
            raise ParseError(
                f"patch_per_frame tensors are rank 3 (frames x patches x dim), got rank {arr.ndim}"
            )
        if not np.isfinite(arr).all():
            raise NonFiniteValue("embedding tensor contains NaN/Inf")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape


@dataclass(frozen=True)
class CandidateRecord:
    """One generated video's evidence for a single episode."""

    model_id: str
    trajectory_path: Path | None = None
    scene_embeddings_path: Path | None = None          # patch_per_frame
    global_video_embedding_path: Path | None = None    # global_video
    caption: str | None = None
    step_captions: tuple[str, ...] = ()
    step_text_embeddings_path: Path | None = None      # step_text
    logic_verdict: LogicVerdict | None = None
    logic_tags: tuple[str, ...] = ()

    def evidence_paths(self) -> list[Path]:
        return [
            p
            for p in (
                self.trajectory_path,
                self.scene_embeddings_path,
                self.global_video_embedding_path,
                self.step_text_embeddings_path,
            )
            if p is not None
        ]


@dataclass(frozen=True)
class EpisodeRecord:
    """One ground-truth episode plus its generated candidates."""

    task_id: str
    episode_id: str
    instruction: str
    initial_images: tuple[Path, ...]
    gt_trajectory_path: Path
    gt_step_captions: tuple[str, ...]
    candidates: tuple[CandidateRecord, ...]
    action_trajectory_path: Path | None = None
    gt_step_embeddings_path: Path | None = None  # step_text tensor for CLIP-style alignment

    def evidence_paths(self) -> list[Path]:
        paths = [self.gt_trajectory_path, *self.initial_images]
        if self.action_trajectory_path is not None:
            paths.append(self.action_trajectory_path)
        if self.gt_step_embeddings_path is not None:
            paths.append(self.gt_step_embeddings_path)
        for cand in self.candidates:
            paths.extend(cand.evidence_paths())
        return paths


@dataclass(frozen=True)
class TaskRecord:
    task_id: str
    episodes: tuple[EpisodeRecord, ...]


@dataclass(frozen=True)
class Manifest:
    schema_version: int
    models: tuple[str, ...]
    tasks: tuple[TaskRecord, ...]
    root: Path = field(default_factory=Path)

    def episodes(self):
        for task in self.tasks:
            yield from task.episodes

    def candidate_count(self) -> int:
        return sum(len(ep.candidates) for ep in self.episodes())


# -- manifest loading -------------------------------------------------------

def _as_str(obj, key: str, ctx: str) -> str:
    val = obj.get(key)
    if not isinstance(val, str) or not val:
        raise SchemaError(f"{ctx}: missing or empty '{key}'")
    return val


def _as_path(root: Path, value, key: str, ctx: str) -> Path:
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{ctx}: '{key}' must be a non-empty path string")
    p = Path(value)
    return p if p.is_absolute() else root / p


def _parse_candidate(obj, root: Path, ctx: str) -> CandidateRecord:
    if not isinstance(obj, dict):
        raise SchemaError(f"{ctx}: candidate must be an object")
    model_id = _as_str(obj, "model_id", ctx)
    ctx = f"{ctx}, candidate '{model_id}'"

    def opt_path(key):
        return _as_path(root, obj[key], key, ctx) if obj.get(key) is not None else None

    logic = obj.get("logic")
    verdict, tags = None, ()
    if logic is not None:
        if not isinstance(logic, dict) or "verdict" not in logic:
            raise SchemaError(f"{ctx}: 'logic' must be an object with a 'verdict'")
        try:
            verdict = LogicVerdict(logic["verdict"])
        except ValueError:
            raise SchemaError(f"{ctx}: unknown logic verdict {logic['verdict']!r}") from None
        tags = tuple(logic.get("tags", ()))

    cand = CandidateRecord(
        model_id=model_id,
        trajectory_path=opt_path("trajectory"),
        scene_embeddings_path=opt_path("scene_embeddings"),
        global_video_embedding_path=opt_path("global_video_embedding"),
        caption=obj.get("caption"),
        step_captions=tuple(obj.get("step_captions", ())),
        step_text_embeddings_path=opt_path("step_text_embeddings"),
        logic_verdict=verdict,
        logic_tags=tags,
    )
    if not cand.evidence_paths() and cand.caption is None and verdict is None:
        raise SchemaError(f"{ctx}: candidate carries no evidence at all")
    return cand


def _parse_episode(obj, root: Path, task_id: str) -> EpisodeRecord:
    ctx = f"task '{task_id}'"
    episode_id = _as_str(obj, "episode_id", ctx)
    ctx = f"{ctx}, episode '{episode_id}'"

    images = obj.get("initial_images")
    if not isinstance(images, list) or not (1 <= len(images) <= 4):
        raise SchemaError(f"{ctx}: 'initial_images' must list 1-4 files")

    captions = obj.get("gt_step_captions")
    if not isinstance(captions, list) or not captions:
        raise SchemaError(f"{ctx}: 'gt_step_captions' must be a non-empty list")
    lo, hi = STEP_CAPTION_HARD_RANGE
    if not (lo <= len(captions) <= hi):
        raise SchemaError(f"{ctx}: {len(captions)} step captions outside [{lo}, {hi}]")
    soft_lo, soft_hi = STEP_CAPTION_SOFT_RANGE
    if not (soft_lo <= len(captions) <= soft_hi):
        warnings.warn(
            f"{ctx}: {len(captions)} step captions outside the usual "
            f"{soft_lo}-{soft_hi} decomposition band",
            stacklevel=2,
        )

    cands_raw = obj.get("candidates")
    if not isinstance(cands_raw, list) or not cands_raw:
        raise SchemaError(f"{ctx}: 'candidates' must be a non-empty list")

    return EpisodeRecord(
        task_id=task_id,
        episode_id=episode_id,
        instruction=_as_str(obj, "instruction", ctx),
        initial_images=tuple(_as_path(root, p, "initial_images", ctx) for p in images),
        gt_trajectory_path=_as_path(root, obj.get("gt_trajectory"), "gt_trajectory", ctx),
        gt_step_captions=tuple(captions),
        candidates=tuple(_parse_candidate(c, root, ctx) for c in cands_raw),
        action_trajectory_path=(
            _as_path(root, obj["action_trajectory"], "action_trajectory", ctx)
            if obj.get("action_trajectory") is not None
            else None
        ),
        gt_step_embeddings_path=(
            _as_path(root, obj["gt_step_embeddings"], "gt_step_embeddings", ctx)
            if obj.get("gt_step_embeddings") is not None
            else None
        ),
    )


def load_manifest(path: str | Path, check_files: bool = True) -> Manifest:
    """Load and validate a manifest; relative paths resolve against its directory.

    Unknown fields are ignored for forward compatibility.  With
    ``check_files`` every referenced evidence file must exist; the first
    dangling reference raises :class:`MissingEvidence` carrying the episode id.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise MissingEvidence(f"manifest not readable: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest is not valid JSON: {exc}") from exc

    if not isinstance(raw, dict):
        raise SchemaError("manifest root must be a JSON object")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")

    models = raw.get("models")
    if not isinstance(models, list) or not models or not all(isinstance(m, str) for m in models):
        raise SchemaError("'models' must be a non-empty list of model ids")
    if len(set(models)) != len(models):
        raise SchemaError("duplicate model id in 'models'")

    root = path.parent
    tasks = []
    seen_tasks = set()
    for task_obj in raw.get("tasks", ()):
        task_id = _as_str(task_obj, "task_id", "task list")
        if task_id in seen_tasks:
            raise SchemaError(f"duplicate task_id '{task_id}'")
        seen_tasks.add(task_id)
        episodes = []
        seen_eps = set()
        for ep_obj in task_obj.get("episodes", ()):
            ep = _parse_episode(ep_obj, root, task_id)
            if ep.episode_id in seen_eps:
                raise SchemaError(f"duplicate episode_id '{ep.episode_id}' in task '{task_id}'")
            seen_eps.add(ep.episode_id)
            episodes.append(ep)
        tasks.append(TaskRecord(task_id=task_id, episodes=tuple(episodes)))

    manifest = Manifest(
        schema_version=version, models=tuple(models), tasks=tuple(tasks), root=root
    )

    model_set = set(models)
    for ep in manifest.episodes():
        for cand in ep.candidates:
            if cand.model_id not in model_set:
                raise SchemaError(
                    f"episode '{ep.episode_id}': candidate model '{cand.model_id}' "
                    "not listed in 'models'"
                )
        if check_files:
            for p in ep.evidence_paths():
                if not p.exists():
                    raise MissingEvidence(
                        f"episode '{ep.episode_id}': missing evidence file {p}",
                        episode_id=ep.episode_id,
                    )
    return manifest


# -- trajectory loading ------------------------------------------------------

def _infer_frame_rate(t: np.ndarray) -> float:
    if len(t) < 2:
        return DEFAULT_FRAME_RATE
    dt = float(np.median(np.diff(t)))
    if dt <= 0 or not math.isfinite(dt):
        return DEFAULT_FRAME_RATE
    return 1.0 / dt


def _trajectory_from_rows(t, pts, hand: Hand, frame_rate: float | None) -> Trajectory:
    t = np.asarray(t, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64)
    order = np.argsort(t, kind="stable")  # verify/restore time order; stable keeps ties as stored
    t, pts = t[order], pts[order]
    rate = frame_rate if frame_rate is not None else _infer_frame_rate(t)
    return Trajectory(points=pts, frame_rate=rate, hand=hand)


def load_trajectory(path: str | Path) -> Trajectory:
    """Load a trajectory from CSV (``t,x,y[,z]``) or the JSON form.

    Points come back in time order exactly as stored (stable for tied
    timestamps); nothing is resampled.  The frame rate is inferred from the
    median timestamp spacing, defaulting to 30 Hz.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        return _load_trajectory_json(path)
    return _load_trajectory_csv(path)


def _load_trajectory_csv(path: Path) -> Trajectory:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MissingEvidence(f"trajectory not readable: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyTrajectory(f"{path}: empty file") from None
    header = [h.strip() for h in header]
    if header not in (["t", "x", "y"], ["t", "x", "y", "z"]):
        raise ParseError(f"{path}: header must be 't,x,y' or 't,x,y,z', got {header}")
    ncols = len(header)

    t, pts = [], []
    for i, row in enumerate(reader):
        if not row:
            continue
        if len(row) != ncols:
            raise ParseError(f"{path}: row {i} has {len(row)} fields, expected {ncols}")
        try:
            vals = [float(v) for v in row]
        except ValueError as exc:
            raise ParseError(f"{path}: row {i}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise NonFinitePoint(f"{path}: non-finite value at row {i}")
        t.append(vals[0])
        pts.append(vals[1:])
    if not pts:
        raise EmptyTrajectory(f"{path}: no data rows")
    return _trajectory_from_rows(t, pts, Hand.UNKNOWN, None)


def _load_trajectory_json(path: Path) -> Trajectory:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise MissingEvidence(f"trajectory not readable: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    points = raw.get("points")
    if not isinstance(points, list) or not points:
        raise EmptyTrajectory(f"{path}: 'points' missing or empty")
    t, pts = [], []
    for i, p in enumerate(points):
        try:
            row = [float(p["x"]), float(p["y"])] + ([float(p["z"])] if "z" in p else [])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: bad point at index {i}: {exc}") from None
        if not all(math.isfinite(v) for v in [p.get("t", i), *row]):
            raise NonFinitePoint(f"{path}: non-finite value at row {i}")
        t.append(float(p.get("t", i)))
        pts.append(row)
    dims = {len(r) for r in pts}
    if len(dims) != 1:
        raise ParseError(f"{path}: mixed 2-D/3-D points")
    hand = Hand(raw.get("hand", "unknown"))
    rate = raw.get("frame_rate")
    return _trajectory_from_rows(t, pts, hand, float(rate) if rate is not None else None)


def write_trajectory(path: str | Path, traj: Trajectory):
    """Write a trajectory as CSV with timestamps at the trajectory frame rate."""
    path = Path(path)
    cols = "t,x,y" if traj.dim == 2 else "t,x,y,z"
    lines = [cols]
    dt = 1.0 / traj.frame_rate
    for i, p in enumerate(traj.points):
        lines.append(",".join([repr(i * dt)] + [repr(float(v)) for v in p]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- embedding tensor IO -----------------------------------------------------

_MAGIC = b"EWMB"
_WIRE_VERSION = 1


def write_embedding(path: str | Path, tensor: EmbeddingTensor):
    """Serialize a tensor; ``load_embedding(write_embedding(x)) == x`` bitwise."""
    arr = tensor.data
    header = _MAGIC + struct.pack(
        "<IBB", _WIRE_VERSION, tensor.kind.value, arr.ndim
    ) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + arr.astype("<f4", copy=False).tobytes(order="C"))


def load_embedding(path: str | Path) -> EmbeddingTensor:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise MissingEvidence(f"embedding not readable: {exc}") from exc
    if blob[:4] != _MAGIC:
        raise BadMagic(f"{path}: expected magic {_MAGIC!r}, got {blob[:4]!r}")
    if len(blob) < 10:
        raise TruncatedFile(f"{path}: header cut short")
    version, kind_code, rank = struct.unpack_from("<IBB", blob, 4)
    if version != _WIRE_VERSION:
        raise ParseError(f"{path}: unsupported wire version {version}")
    try:
        kind = EmbeddingKind(kind_code)
    except ValueError:
        raise ParseError(f"{path}: unknown kind code {kind_code}") from None
    if not (1 <= rank <= 3):
        raise ParseError(f"{path}: rank must be 1-3, got {rank}")
    shape_end = 10 + 4 * rank
    if len(blob) < shape_end:
        raise TruncatedFile(f"{path}: shape vector cut short")
    shape = struct.unpack_from(f"<{rank}I", blob, 10)
    if any(d == 0 for d in shape):
        raise ParseError(f"{path}: zero dimension in shape {shape}")
    expected = int(np.prod(shape)) * 4
    payload = blob[shape_end:]
    if len(payload) != expected:
        raise TruncatedFile(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    data = np.frombuffer(payload, dtype="<f4").reshape(shape)
    return EmbeddingTensor(data=data, kind=kind)
