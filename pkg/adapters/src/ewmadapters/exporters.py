"""Evidence exporters: one video (or manifest) in, interchange files out.

Three exporters cover the three evidence families the evaluator reads:

* scene      -> ``<stem>_scene.ewmb``  (patch_per_frame tensor)
* semantic   -> ``<stem>_gvid.ewmb``, ``<stem>_steps.ewmb``, ``<stem>_gtext.ewmb``
* mllm       -> ``<stem>_mllm.json``   (captions plus logic verdict)

Exporters never score anything; they only normalize, encode, and write.
Batch drivers walk the evaluation manifest, read each candidate's optional
``video`` entry (a key the evaluator ignores), and run candidates in
parallel.  Every output file has exactly one writer and is written
atomically, and a failing episode is recorded and skipped rather than
aborting the run.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import ewmb
from .config import AdapterConfig
from .encoders import patch_encoder, text_encoder, video_encoder
from .errors import AdapterError, FormatError, MissingInput, UsageError
from .mllm import SIDECAR_SCHEMA_VERSION, TEMPLATE_VERSION, MllmClient, describe_video
from .video import decode_video, normalize_video

DEFAULT_CONFIG = AdapterConfig()


def _default_out(video_path: Path, cfg: AdapterConfig, suffix: str) -> Path:
    directory = cfg.output_dir if cfg.output_dir is not None else video_path.parent
    return Path(directory) / f"{video_path.stem}{suffix}"


def _write_json_atomic(path: Path, obj) -> Path:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path


def _encode_frames(video_path: Path, cfg: AdapterConfig):
    video = decode_video(video_path)
    video = normalize_video(video, cfg.frame_size, cfg.frame_rate)
    return video.frames[:: cfg.frame_stride]


# -- per-video exporters -----------------------------------------------------

def export_scene_embeddings(
    video_path: str | Path, out_path: str | Path | None = None, cfg: AdapterConfig = DEFAULT_CONFIG
) -> Path:
    """Encode one video into a patch_per_frame tensor file."""
    video_path = Path(video_path)
    encoder = patch_encoder(cfg.scene_encoder)
    frames = _encode_frames(video_path, cfg)
    tensor = encoder.encode_video(frames)
    out = Path(out_path) if out_path is not None else _default_out(video_path, cfg, "_scene.ewmb")
    return ewmb.write_ewmb(out, tensor, ewmb.PATCH_PER_FRAME)


def export_text_embeddings(
    captions,
    out_path: str | Path,
    kind: int = ewmb.STEP_TEXT,
    cfg: AdapterConfig = DEFAULT_CONFIG,
) -> Path:
    """Embed captions into a step_text (one row each) or global_text tensor."""
    captions = list(captions)
    if not captions:
        raise UsageError("no captions to embed")
    encoder = text_encoder(cfg.text_encoder)
    rows = encoder.encode(captions)
    if kind == ewmb.STEP_TEXT:
        return ewmb.write_ewmb(out_path, rows, ewmb.STEP_TEXT)
    if kind == ewmb.GLOBAL_TEXT:
        if len(captions) != 1:
            raise UsageError(f"global_text takes exactly one caption, got {len(captions)}")
        return ewmb.write_ewmb(out_path, rows[0], ewmb.GLOBAL_TEXT)
    raise UsageError(f"text embeddings are step_text or global_text, not kind {kind}")


def export_semantic_embeddings(
    video_path: str | Path,
    step_captions,
    global_caption: str | None = None,
    cfg: AdapterConfig = DEFAULT_CONFIG,
    out_paths: dict | None = None,
) -> dict[str, Path]:
    """Encode one video plus its captions into the three semantic tensors.

    With no explicit global caption the step captions are joined; either way
    every row is unit-norm and duplicate captions produce identical rows.
    ``out_paths`` may override any of the three destinations by key.
    """
    video_path = Path(video_path)
    steps = [str(s) for s in step_captions]
    if not steps:
        raise UsageError("no step captions to embed")
    tenc = text_encoder(cfg.text_encoder)
    venc = video_encoder(cfg.video_encoder)

    frames = _encode_frames(video_path, cfg)
    gvid = venc.encode(frames)
    step_rows = tenc.encode(steps)
    gtext = tenc.encode_one(global_caption if global_caption is not None else " ".join(steps))

    out_paths = out_paths or {}

    def dest(key, suffix):
        return Path(out_paths[key]) if out_paths.get(key) else _default_out(video_path, cfg, suffix)

    return {
        "global_video": ewmb.write_ewmb(dest("global_video", "_gvid.ewmb"), gvid, ewmb.GLOBAL_VIDEO),
        "step_text": ewmb.write_ewmb(dest("step_text", "_steps.ewmb"), step_rows, ewmb.STEP_TEXT),
        "global_text": ewmb.write_ewmb(dest("global_text", "_gtext.ewmb"), gtext, ewmb.GLOBAL_TEXT),
    }


@dataclass(frozen=True)
class MllmBatch:
    """Outcome of a description run: sidecar per succeeded candidate id."""

    written: dict[str, Path] = field(default_factory=dict)
    failed: dict[str, str] = field(default_factory=dict)


def export_mllm_outputs(
    videos,
    endpoint: str,
    out_dir: str | Path | None = None,
    cfg: AdapterConfig = DEFAULT_CONFIG,
    timeout: float = 10.0,
    max_retries: int = 3,
    backoff: float = 0.5,
    template_version: int = TEMPLATE_VERSION,
) -> MllmBatch:
    """Describe each video through the endpoint and write one JSON sidecar per
    candidate id.

    ``videos`` maps candidate id -> video path.  Replies are validated before
    anything is written; a candidate whose description fails (unreachable
    endpoint, malformed reply, undecodable video) lands in ``failed`` and the
    remaining candidates still run.
    """
    items = sorted(dict(videos).items())
    if not items:
        raise UsageError("no videos to describe")
    client = MllmClient(
        endpoint=endpoint, timeout=timeout, max_retries=max_retries, backoff=backoff
    )
    written: dict[str, Path] = {}
    failed: dict[str, str] = {}
    for cid, video_path in items:
        video_path = Path(video_path)
        try:
            video = decode_video(video_path)
            record = describe_video(client, video_path.name, len(video), template_version)
            record = {
                "schema_version": SIDECAR_SCHEMA_VERSION,
                "template_version": template_version,
                "candidate_id": cid,
                **record,
            }
            if out_dir is not None:
                safe = "".join(c if (c.isalnum() or c in "._-") else "_" for c in cid)
                out = Path(out_dir) / f"{safe}_mllm.json"
            else:
                out = _default_out(video_path, cfg, "_mllm.json")
            written[cid] = _write_json_atomic(out, record)
        except AdapterError as exc:
            failed[cid] = f"{type(exc).__name__}: {exc}"
    return MllmBatch(written=written, failed=failed)


# -- manifest walking --------------------------------------------------------

@dataclass(frozen=True)
class CandidateRef:
    """One manifest candidate, with the paths the adapters care about."""

    cid: str
    task_id: str
    episode_id: str
    model_id: str
    video_path: Path | None
    scene_path: Path | None
    global_video_path: Path | None
    step_text_path: Path | None
    caption: str | None
    step_captions: tuple[str, ...]


@dataclass(frozen=True)
class EpisodeRef:
    task_id: str
    episode_id: str
    instruction: str
    gt_step_captions: tuple[str, ...]
    gt_step_embeddings_path: Path | None
    candidates: tuple[CandidateRef, ...]


def _load_manifest_raw(path: Path) -> dict:
    if not path.exists():
        raise MissingInput(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: manifest is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or raw.get("schema_version") != 1:
        raise FormatError(f"{path}: expected a manifest object with schema_version 1")
    return raw


def _resolve(root: Path, value) -> Path | None:
    if not isinstance(value, str) or not value:
        return None
    p = Path(value)
    return p if p.is_absolute() else root / p


def iter_manifest_episodes(manifest_path: str | Path) -> list[EpisodeRef]:
    """Flatten a manifest into episode/candidate references.

    Only the keys the adapters use are read; everything else is left to the
    evaluator's stricter loader.  Candidate ids are ``task/episode/model#k``
    with ``k`` the position in the episode's candidate list.
    """
    manifest_path = Path(manifest_path)
    raw = _load_manifest_raw(manifest_path)
    root = manifest_path.parent
    episodes = []
    for task in raw.get("tasks", ()):
        task_id = str(task.get("task_id", ""))
        for ep in task.get("episodes", ()):
            episode_id = str(ep.get("episode_id", ""))
            cands = []
            for k, cand in enumerate(ep.get("candidates", ())):
                model_id = str(cand.get("model_id", ""))
                cands.append(
                    CandidateRef(
                        cid=f"{task_id}/{episode_id}/{model_id}#{k}",
                        task_id=task_id,
                        episode_id=episode_id,
                        model_id=model_id,
                        video_path=_resolve(root, cand.get("video")),
                        scene_path=_resolve(root, cand.get("scene_embeddings")),
                        global_video_path=_resolve(root, cand.get("global_video_embedding")),
                        step_text_path=_resolve(root, cand.get("step_text_embeddings")),
                        caption=cand.get("caption"),
                        step_captions=tuple(cand.get("step_captions", ())),
                    )
                )
            episodes.append(
                EpisodeRef(
                    task_id=task_id,
                    episode_id=episode_id,
                    instruction=str(ep.get("instruction", "")),
                    gt_step_captions=tuple(ep.get("gt_step_captions", ())),
                    gt_step_embeddings_path=_resolve(root, ep.get("gt_step_embeddings")),
                    candidates=tuple(cands),
                )
            )
    return episodes


@dataclass(frozen=True)
class BatchResult:
    """Outcome of a manifest batch: paths per candidate id, reasons per failure."""

    written: dict[str, tuple[Path, ...]] = field(default_factory=dict)
    failed: dict[str, str] = field(default_factory=dict)
    skipped: tuple[str, ...] = ()


def _run_batch(items, worker, jobs: int) -> BatchResult:
    """Run ``worker(item) -> (cid, paths)`` over items, isolating failures."""
    written: dict[str, tuple[Path, ...]] = {}
    failed: dict[str, str] = {}

    def guarded(item):
        try:
            cid, paths = worker(item)
            return cid, paths, None
        except AdapterError as exc:
            return item.cid, (), f"{type(exc).__name__}: {exc}"

    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(guarded, items))
    else:
        outcomes = [guarded(item) for item in items]
    for cid, paths, err in sorted(outcomes, key=lambda o: o[0]):
        if err is None:
            written[cid] = paths
        else:
            failed[cid] = err
    return BatchResult(written=written, failed=failed)


def _relativize(path: Path, root: Path) -> str:
    try:
        return Path(os.path.relpath(path, root)).as_posix()
    except ValueError:
        return str(path)


def _update_manifest(manifest_path: Path, patch):
    """Re-walk the raw manifest and let ``patch(kind, obj, cid_or_ref)`` edit it."""
    raw = _load_manifest_raw(manifest_path)
    for task in raw.get("tasks", ()):
        task_id = str(task.get("task_id", ""))
        for ep in task.get("episodes", ()):
            episode_id = str(ep.get("episode_id", ""))
            patch("episode", ep, f"{task_id}/{episode_id}")
            for k, cand in enumerate(ep.get("candidates", ())):
                model_id = str(cand.get("model_id", ""))
                patch("candidate", cand, f"{task_id}/{episode_id}/{model_id}#{k}")
    _write_json_atomic(manifest_path, raw)


# -- manifest batch drivers --------------------------------------------------

def export_scene_batch(
    manifest_path: str | Path,
    cfg: AdapterConfig = DEFAULT_CONFIG,
    jobs: int = 1,
    update_manifest: bool = False,
) -> BatchResult:
    """Export scene tensors for every candidate that declares a video."""
    manifest_path = Path(manifest_path)
    todo, skipped = [], []
    for ep in iter_manifest_episodes(manifest_path):
        for cand in ep.candidates:
            (todo if cand.video_path is not None else skipped).append(cand)

    def worker(cand: CandidateRef):
        out = cand.scene_path
        path = export_scene_embeddings(cand.video_path, out_path=out, cfg=cfg)
        return cand.cid, (path,)

    result = _run_batch(todo, worker, jobs)
    result = BatchResult(
        written=result.written, failed=result.failed, skipped=tuple(c.cid for c in skipped)
    )
    if update_manifest and result.written:
        root = manifest_path.parent

        def patch(kind, obj, cid):
            if kind == "candidate" and cid in result.written:
                obj["scene_embeddings"] = _relativize(result.written[cid][0], root)

        _update_manifest(manifest_path, patch)
    return result


def _sidecar_for(cand: CandidateRef, cfg: AdapterConfig) -> Path:
    return _default_out(cand.video_path, cfg, "_mllm.json")


def _candidate_captions(cand: CandidateRef, cfg: AdapterConfig):
    """Step captions and global caption for a candidate: its description
    sidecar when one exists, manifest fields otherwise."""
    sidecar = _sidecar_for(cand, cfg)
    if sidecar.exists():
        try:
            record = json.loads(sidecar.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{sidecar}: sidecar is not valid JSON: {exc}") from exc
        steps = record.get("step_captions") or ()
        caption = record.get("global_caption")
    else:
        steps, caption = cand.step_captions, cand.caption
    if not steps:
        raise UsageError(f"candidate '{cand.cid}' has no step captions anywhere")
    return list(steps), caption


def export_semantic_batch(
    manifest_path: str | Path,
    cfg: AdapterConfig = DEFAULT_CONFIG,
    jobs: int = 1,
    update_manifest: bool = False,
) -> BatchResult:
    """Export semantic tensors for every candidate with a video, plus one
    step_text tensor per episode from its reference step captions."""
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    episodes = iter_manifest_episodes(manifest_path)

    todo, skipped = [], []
    for ep in episodes:
        for cand in ep.candidates:
            (todo if cand.video_path is not None else skipped).append(cand)

    def worker(cand: CandidateRef):
        steps, caption = _candidate_captions(cand, cfg)
        paths = export_semantic_embeddings(
            cand.video_path,
            steps,
            caption,
            cfg=cfg,
            out_paths={
                "global_video": cand.global_video_path,
                "step_text": cand.step_text_path,
            },
        )
        return cand.cid, (paths["global_video"], paths["step_text"], paths["global_text"])

    result = _run_batch(todo, worker, jobs)

    gt_written: dict[str, Path] = {}
    gt_failed: dict[str, str] = {}
    for ep in episodes:
        eid = f"{ep.task_id}/{ep.episode_id}"
        if not ep.gt_step_captions:
            continue
        out = ep.gt_step_embeddings_path
        if out is None:
            out = root / f"{ep.task_id}_{ep.episode_id}_gtsteps.ewmb"
        try:
            gt_written[f"{eid}/gt"] = export_text_embeddings(
                ep.gt_step_captions, out, ewmb.STEP_TEXT, cfg=cfg
            )
        except AdapterError as exc:
            gt_failed[f"{eid}/gt"] = f"{type(exc).__name__}: {exc}"

    written = dict(result.written)
    written.update({cid: (p,) for cid, p in gt_written.items()})
    failed = dict(result.failed)
    failed.update(gt_failed)
    result = BatchResult(
        written=written, failed=failed, skipped=tuple(c.cid for c in skipped)
    )

    if update_manifest and (result.written or gt_written):

        def patch(kind, obj, cid):
            if kind == "candidate" and cid in result.written:
                gvid, steps_p, _ = result.written[cid]
                obj["global_video_embedding"] = _relativize(gvid, root)
                obj["step_text_embeddings"] = _relativize(steps_p, root)
            if kind == "episode" and f"{cid}/gt" in gt_written:
                obj["gt_step_embeddings"] = _relativize(gt_written[f"{cid}/gt"], root)

        _update_manifest(manifest_path, patch)
    return result


def export_mllm_batch(
    manifest_path: str | Path,
    endpoint: str,
    cfg: AdapterConfig = DEFAULT_CONFIG,
    timeout: float = 10.0,
    max_retries: int = 3,
    backoff: float = 0.5,
    template_version: int = TEMPLATE_VERSION,
    update_manifest: bool = False,
) -> MllmBatch:
    """Describe every candidate video in a manifest through the endpoint.

    With ``update_manifest`` each succeeded candidate's caption, step
    captions, and logic verdict are folded back into the manifest so the
    evaluator can read them directly.
    """
    manifest_path = Path(manifest_path)
    videos = {}
    for ep in iter_manifest_episodes(manifest_path):
        for cand in ep.candidates:
            if cand.video_path is not None:
                videos[cand.cid] = cand.video_path
    if not videos:
        raise UsageError(f"{manifest_path}: no candidate declares a 'video'")
    batch = export_mllm_outputs(
        videos,
        endpoint,
        out_dir=None,
        cfg=cfg,
        timeout=timeout,
        max_retries=max_retries,
        backoff=backoff,
        template_version=template_version,
    )
    if update_manifest and batch.written:
        records = {
            cid: json.loads(path.read_text(encoding="utf-8"))
            for cid, path in batch.written.items()
        }

        def patch(kind, obj, cid):
            if kind == "candidate" and cid in records:
                rec = records[cid]
                obj["caption"] = rec["global_caption"]
                obj["step_captions"] = list(rec["step_captions"])
                obj["logic"] = {"verdict": rec["verdict"], "tags": list(rec["tags"])}

        _update_manifest(manifest_path, patch)
    return batch
