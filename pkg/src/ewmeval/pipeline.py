"""Batch evaluation: manifest in, report files out.

Per (episode, model) pair the best-of-N candidate is selected by Hausdorff
distance against the ground-truth trajectory, then that candidate supplies
the scene, motion, and semantic scores.  Raw scores are cached per pair
under a content hash so interrupted sweeps resume cheaply; normalization
happens at assembly time, after the cache.
"""

import hashlib
import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .aggregation import (
    METRIC_COLUMNS,
    EpisodeScores,
    MetricReport,
    aggregate,
    build_report,
    normalize_scores,
    report_to_csv,
    report_to_dict,
    report_to_markdown,
)
from .datamodel import (
    EpisodeRecord,
    LogicVerdict,
    Manifest,
    load_embedding,
    load_manifest,
    load_trajectory,
)
from .errors import EvalError, MissingEvidence
from .scene import scene_score
from .semantics import bleu, semantic_diversity, step_alignment
from .trajectory import DynConfig, best_of_n

MOTION_METRICS = ("hsd", "dyn", "ndtw")
CACHE_ENV_VAR = "EWMEVAL_CACHE_DIR"


@dataclass(frozen=True)
class RunConfig:
    manifest_path: Path
    output_dir: Path
    alpha: float = 0.007
    beta: float = 0.003
    epsilon: float = 1e-8
    voxel_size: float = 0.05
    norm: str = "clamp"             # clamp | minmax
    ceiling: float = 1.0            # clamp policy ceiling
    jobs: int = 1
    seed: int = 0
    allow_partial: bool = False
    diversity_scope: str = "task"   # task | episode
    cache_dir: Path | None = None

    def __post_init__(self):
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        if self.norm not in ("clamp", "minmax"):
            raise ValueError(f"unknown normalization policy {self.norm!r}")
        if self.diversity_scope not in ("task", "episode"):
            raise ValueError(f"unknown diversity scope {self.diversity_scope!r}")

    def dyn_config(self) -> DynConfig:
        return DynConfig(alpha=self.alpha, beta=self.beta, epsilon=self.epsilon)

    def resolved_cache_dir(self) -> Path:
        env = os.environ.get(CACHE_ENV_VAR)
        if env:
            return Path(env)
        if self.cache_dir is not None:
            return Path(self.cache_dir)
        return Path(self.output_dir) / "cache"


# -- per-pair scoring with a content-hash cache -------------------------------

def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _cache_key(episode: EpisodeRecord, model_id: str, cfg: RunConfig) -> str:
    """Content hash over ids, scoring parameters, and every evidence file."""
    evidence = {}
    paths = [episode.gt_trajectory_path]
    if episode.gt_step_embeddings_path is not None:
        paths.append(episode.gt_step_embeddings_path)
    for cand in episode.candidates:
        if cand.model_id == model_id:
            paths.extend(cand.evidence_paths())
    for p in sorted(set(paths)):
        if p.exists():
            evidence[str(p)] = _sha256_file(p)
    payload = {
        "format": "ewmeval-episode-scores/1",
        "task_id": episode.task_id,
        "episode_id": episode.episode_id,
        "model_id": model_id,
        "dyn": {"alpha": cfg.alpha, "beta": cfg.beta, "epsilon": cfg.epsilon},
        "evidence": evidence,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _score_or_none(fn, allow_partial: bool):
    """Run one metric; under --allow-partial any evaluation failure is None."""
    try:
        return fn()
    except (EvalError, OSError) as exc:
        if allow_partial:
            return None
        if isinstance(exc, EvalError):
            raise
        raise MissingEvidence(str(exc)) from exc


def score_episode_model(
    episode: EpisodeRecord, model_id: str, cfg: RunConfig
) -> EpisodeScores:
    """Raw (un-normalized) scores for one model's candidates on one episode."""
    candidates = [c for c in episode.candidates if c.model_id == model_id]
    if not candidates:
        raise MissingEvidence(
            f"episode '{episode.episode_id}': no candidates for model '{model_id}'",
            episode_id=episode.episode_id,
        )

    selected_idx = None
    hsd = dyn = ndtw = None

    def motion():
        nonlocal selected_idx
        gt = load_trajectory(episode.gt_trajectory_path)
        preds = [load_trajectory(c.trajectory_path) for c in candidates]
        idx, scores = best_of_n(gt, preds, cfg.dyn_config())
        selected_idx = idx
        return scores

    if any(c.trajectory_path is None for c in candidates):
        if not cfg.allow_partial:
            raise MissingEvidence(
                f"episode '{episode.episode_id}': model '{model_id}' candidate "
                "lacks a trajectory",
                episode_id=episode.episode_id,
            )
    else:
        scores = _score_or_none(motion, cfg.allow_partial)
        if scores is not None:
            hsd, dyn, ndtw = scores.hsd, scores.dyn, scores.ndtw

    # Everything downstream keys off the best-of-N pick; without motion
    # evidence (partial runs) the first candidate stands in.
    chosen = candidates[selected_idx if selected_idx is not None else 0]

    def scene():
        if chosen.scene_embeddings_path is None:
            raise MissingEvidence("no scene embeddings", episode_id=episode.episode_id)
        return scene_score(load_embedding(chosen.scene_embeddings_path)).aggregate

    def caption_bleu():
        if chosen.caption is None:
            raise MissingEvidence("no caption", episode_id=episode.episode_id)
        return bleu(chosen.caption, episode.instruction)

    def clip():
        if chosen.step_text_embeddings_path is None or episode.gt_step_embeddings_path is None:
            raise MissingEvidence("no step embeddings", episode_id=episode.episode_id)
        return step_alignment(
            load_embedding(chosen.step_text_embeddings_path),
            load_embedding(episode.gt_step_embeddings_path),
        )

    def logic():
        if chosen.logic_verdict is None:
            raise MissingEvidence("no logic verdict", episode_id=episode.episode_id)
        return 1.0 if chosen.logic_verdict is LogicVerdict.PASS else 0.0

    return EpisodeScores(
        model_id=model_id,
        task_id=episode.task_id,
        episode_id=episode.episode_id,
        scene_c=_score_or_none(scene, cfg.allow_partial),
        hsd=hsd,
        dyn=dyn,
        ndtw=ndtw,
        bleu=_score_or_none(caption_bleu, cfg.allow_partial),
        clip=_score_or_none(clip, cfg.allow_partial),
        logics=_score_or_none(logic, cfg.allow_partial),
        selected_candidate=selected_idx,
    )


_CACHE_FIELDS = ("scene_c", "hsd", "dyn", "ndtw", "bleu", "clip", "logics", "selected_candidate")


def _scores_from_cache(path: Path, episode: EpisodeRecord, model_id: str):
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        return EpisodeScores(
            model_id=model_id,
            task_id=episode.task_id,
            episode_id=episode.episode_id,
            **{f: payload[f] for f in _CACHE_FIELDS},
        )
    except (OSError, ValueError, KeyError, TypeError):
        return None  # unreadable or stale cache entry; recompute


def _scores_to_cache(path: Path, scores: EpisodeScores):
    payload = {f: getattr(scores, f) for f in _CACHE_FIELDS}
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    tmp.replace(path)


def _scored_pair(episode: EpisodeRecord, model_id: str, cfg: RunConfig) -> EpisodeScores:
    cache_dir = cfg.resolved_cache_dir()
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = _cache_key(episode, model_id, cfg)
    cache_path = cache_dir / f"{key}.json"
    cached = _scores_from_cache(cache_path, episode, model_id) if cache_path.exists() else None
    if cached is not None:
        return cached
    scores = score_episode_model(episode, model_id, cfg)
    _scores_to_cache(cache_path, scores)
    return scores


# -- diversity (group-level, computed at assembly) ----------------------------

def _diversity_by_group(manifest: Manifest, scored: dict, cfg: RunConfig) -> dict:
    """Semantic diversity per (task, model) over selected global embeddings.

    With ``diversity_scope="episode"`` the group is instead every candidate
    of the model within a single episode.  Groups with fewer than two
    usable embeddings score 0.0 with a warning rather than failing, since
    single-episode manifests are legitimate.
    """
    out = {}
    groups: dict[tuple, list] = {}
    for ep in manifest.episodes():
        for model_id in manifest.models:
            row = scored.get((ep.task_id, ep.episode_id, model_id))
            if row is None:
                continue
            cands = [c for c in ep.candidates if c.model_id == model_id]
            if cfg.diversity_scope == "episode":
                key = (ep.task_id, ep.episode_id, model_id)
                paths = [c.global_video_embedding_path for c in cands]
            else:
                key = (ep.task_id, model_id)
                pick = row.selected_candidate if row.selected_candidate is not None else 0
                paths = [cands[pick].global_video_embedding_path] if cands else []
            groups.setdefault(key, []).extend(p for p in paths if p is not None)

    values = {}
    for key, paths in groups.items():
        try:
            if len(paths) < 2:
                raise MissingEvidence(f"group {key} has {len(paths)} embeddings")
            values[key] = semantic_diversity([load_embedding(p) for p in paths])
        except (EvalError, OSError) as exc:
            warnings.warn(
                f"diversity for group {key} unavailable ({exc}); scoring 0.0",
                stacklevel=2,
            )
            values[key] = 0.0

    for (task_id, episode_id, model_id) in scored:
        if cfg.diversity_scope == "episode":
            key = (task_id, episode_id, model_id)
        else:
            key = (task_id, model_id)
        out[(task_id, episode_id, model_id)] = values.get(key, 0.0)
    return out


# -- assembly ------------------------------------------------------------------

def _normalize_episode(row: EpisodeScores, cfg: RunConfig) -> EpisodeScores:
    """Clamp-policy normalization, applied per episode before averaging."""
    updates = {}
    for metric in METRIC_COLUMNS:
        val = getattr(row, metric)
        if val is not None:
            updates[metric] = min(float(val), cfg.ceiling) / cfg.ceiling
    return EpisodeScores(
        model_id=row.model_id,
        task_id=row.task_id,
        episode_id=row.episode_id,
        selected_candidate=row.selected_candidate,
        **updates,
    )


def _fill_missing_dimensions(rows: list, models, allow_partial: bool) -> list:
    """Under --allow-partial a model with zero evidence for a metric gets 0.0."""
    if not allow_partial:
        return rows
    have: dict[str, set] = {m: set() for m in models}
    for row in rows:
        for metric in METRIC_COLUMNS:
            if getattr(row, metric) is not None:
                have.setdefault(row.model_id, set()).add(metric)
    by_model: dict[str, list] = {}
    for i, row in enumerate(rows):
        by_model.setdefault(row.model_id, []).append(i)
    out = list(rows)
    for model_id, idxs in by_model.items():
        missing = [m for m in METRIC_COLUMNS if m not in have.get(model_id, set())]
        for metric in missing:
            warnings.warn(
                f"model '{model_id}' has no evidence for '{metric}'; filling 0.0",
                stacklevel=2,
            )
            for i in idxs:
                row = out[i]
                out[i] = EpisodeScores(
                    **{
                        **{f: getattr(row, f) for f in (
                            "model_id", "task_id", "episode_id", "selected_candidate",
                            *METRIC_COLUMNS,
                        )},
                        metric: 0.0,
                    }
                )
    return out


def _minmax_report(report: MetricReport) -> MetricReport:
    models = [r.model_id for r in report.rows]
    means = {r.model_id: {m: getattr(r, m) for m in METRIC_COLUMNS} for r in report.rows}
    for metric in METRIC_COLUMNS:
        normalized = normalize_scores([means[m][metric] for m in models], "minmax")
        for model_id, val in zip(models, normalized):
            means[model_id][metric] = val
    return build_report(means)


def evaluate(cfg: RunConfig) -> MetricReport:
    """Score every (episode, model) pair and write the report files.

    Returns the report; writes report.json / report.csv / report.md and
    episodes.json (raw per-episode scores) under ``cfg.output_dir``.  The
    output is byte-identical for any ``jobs`` value: workers only fill a
    dict keyed by (task, episode, model) and assembly sorts.
    """
    manifest = load_manifest(cfg.manifest_path, check_files=not cfg.allow_partial)

    pairs = [
        (ep, model_id)
        for ep in manifest.episodes()
        for model_id in manifest.models
        if any(c.model_id == model_id for c in ep.candidates)
    ]

    scored: dict[tuple, EpisodeScores] = {}
    if cfg.jobs == 1:
        for ep, model_id in pairs:
            scored[(ep.task_id, ep.episode_id, model_id)] = _scored_pair(ep, model_id, cfg)
    else:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = {
                (ep.task_id, ep.episode_id, model_id): pool.submit(
                    _scored_pair, ep, model_id, cfg
                )
                for ep, model_id in pairs
            }
            for key, fut in futures.items():
                scored[key] = fut.result()

    diversity = _diversity_by_group(manifest, scored, cfg)
    raw_rows = []
    for key in sorted(scored):
        row = scored[key]
        raw_rows.append(
            EpisodeScores(
                model_id=row.model_id,
                task_id=row.task_id,
                episode_id=row.episode_id,
                scene_c=row.scene_c,
                hsd=row.hsd,
                dyn=row.dyn,
                ndtw=row.ndtw,
                diversity=diversity[key],
                bleu=row.bleu,
                clip=row.clip,
                logics=row.logics,
                selected_candidate=row.selected_candidate,
            )
        )
    raw_rows = _fill_missing_dimensions(raw_rows, manifest.models, cfg.allow_partial)

    if cfg.norm == "clamp":
        report = aggregate(_normalize_episode(r, cfg) for r in raw_rows)
    else:
        report = _minmax_report(aggregate(raw_rows))

    write_report_files(report, cfg.output_dir)
    episodes_payload = {
        "schema_version": 1,
        "rows": [
            {
                "task_id": r.task_id,
                "episode_id": r.episode_id,
                "model_id": r.model_id,
                "selected_candidate": r.selected_candidate,
                **{m: getattr(r, m) for m in METRIC_COLUMNS},
            }
            for r in raw_rows
        ],
    }
    _write_text(
        Path(cfg.output_dir) / "episodes.json",
        json.dumps(episodes_payload, indent=2, sort_keys=True) + "\n",
    )
    return report


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def write_report_files(report: MetricReport, output_dir) -> list[Path]:
    out = Path(output_dir)
    targets = [
        (out / "report.json", json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"),
        (out / "report.csv", report_to_csv(report)),
        (out / "report.md", report_to_markdown(report)),
    ]
    for path, text in targets:
        _write_text(path, text)
    return [p for p, _ in targets]
