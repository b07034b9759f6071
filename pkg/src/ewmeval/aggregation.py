"""Score aggregation, normalization, perturbation study, and rank correlation.

Per-episode scores fold into one row per model: the three dimension columns
(scene / motion / semantics) plus an Overall column.  The motion and
semantics "Avg." columns of the published layout are arithmetically the
sums of their member columns, so they are implemented as sums.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .datamodel import Trajectory
from .errors import (
    DegenerateRange,
    InsufficientData,
    MissingDimension,
    ModelSetMismatch,
    SignatureMismatch,
    TooShort,
)
from .trajectory import (
    DynConfig,
    dyn_score_trajectories,
    hsd_score,
    ndtw_score,
    symmetric_hausdorff,
)

METRIC_COLUMNS = ("scene_c", "hsd", "dyn", "ndtw", "diversity", "bleu", "clip", "logics")
MOTION_COLUMNS = ("hsd", "dyn", "ndtw")
SEMANTIC_COLUMNS = ("diversity", "bleu", "clip", "logics")


@dataclass(frozen=True)
class EpisodeScores:
    """Scores for one model's best-of-N candidate on one episode.

    ``None`` marks a metric without evidence; aggregation averages over
    present values only.
    """

    model_id: str
    task_id: str
    episode_id: str
    scene_c: float | None = None
    hsd: float | None = None
    dyn: float | None = None
    ndtw: float | None = None
    diversity: float | None = None
    bleu: float | None = None
    clip: float | None = None
    logics: float | None = None
    selected_candidate: int | None = None


@dataclass(frozen=True)
class ModelRow:
    model_id: str
    scene_c: float
    hsd: float
    dyn: float
    ndtw: float
    motion_sum: float
    diversity: float
    bleu: float
    clip: float
    logics: float
    semantics_sum: float
    overall: float


@dataclass(frozen=True)
class MetricReport:
    rows: tuple[ModelRow, ...]  # sorted by model_id

    def row(self, model_id: str) -> ModelRow:
        for r in self.rows:
            if r.model_id == model_id:
                return r
        raise KeyError(model_id)


def build_report(means_by_model: dict[str, dict[str, float]]) -> MetricReport:
    """Assemble a report from per-model metric means, deriving the sums."""
    rows = []
    for model_id in sorted(means_by_model):
        means = {m: float(means_by_model[model_id][m]) for m in METRIC_COLUMNS}
        motion_sum = sum(means[m] for m in MOTION_COLUMNS)
        semantics_sum = sum(means[m] for m in SEMANTIC_COLUMNS)
        rows.append(
            ModelRow(
                model_id=model_id,
                **means,
                motion_sum=motion_sum,
                semantics_sum=semantics_sum,
                overall=means["scene_c"] + motion_sum + semantics_sum,
            )
        )
    return MetricReport(rows=tuple(rows))


def aggregate(per_episode_scores) -> MetricReport:
    """Mean each metric per model, then form dimension sums and Overall.

    Raises :class:`MissingDimension` if any model has no scored episode for
    some metric.
    """
    by_model: dict[str, dict[str, list[float]]] = {}
    for row in per_episode_scores:
        slot = by_model.setdefault(row.model_id, {m: [] for m in METRIC_COLUMNS})
        for metric in METRIC_COLUMNS:
            val = getattr(row, metric)
            if val is not None:
                slot[metric].append(float(val))

    means_by_model = {}
    for model_id, slot in by_model.items():
        means = {}
        for metric in METRIC_COLUMNS:
            if not slot[metric]:
                raise MissingDimension(f"model '{model_id}' has no scores for '{metric}'")
            means[metric] = float(np.mean(slot[metric]))
        means_by_model[model_id] = means
    return build_report(means_by_model)


def normalize_scores(values, policy: str, ceiling: float = 1.0) -> list[float]:
    """Map one metric's per-model values into [0, 1].

    ``clamp`` divides by a fixed ceiling after clamping (values already at
    or below the ceiling keep their relative scale; values above it tie at
    1).  ``minmax`` maps the per-metric min to 0 and max to 1, preserving
    the ordering exactly; a degenerate (all-equal) input maps everything to
    1 and warns.
    """
    vals = [float(v) for v in values]
    if policy == "clamp":
        if not ceiling > 0:
            raise ValueError("ceiling must be > 0")
        return [min(v, ceiling) / ceiling for v in vals]
    if policy == "minmax":
        lo, hi = min(vals), max(vals)
        if hi == lo:
            warnings.warn(
                DegenerateRange(f"all {len(vals)} values equal {lo}; mapping to 1.0"),
                stacklevel=2,
            )
            return [1.0 for _ in vals]
        return [(v - lo) / (hi - lo) for v in vals]
    raise ValueError(f"unknown normalization policy {policy!r}")


# -- trajectory perturbations -------------------------------------------------

def perturb(
    t: Trajectory,
    kind: str,
    count: int = 2,
    scale: float = 3.0,
    times: int = 2,
    seed: int = 0,
) -> Trajectory:
    """Apply one controlled corruption to a trajectory.

    ``reverse`` flips point order; ``outlier`` inserts ``count`` points at
    ``scale`` x the bounding-box diagonal from the centroid, at seeded
    random indices and directions; ``repeat`` duplicates every point
    ``times`` consecutive times (``times=1`` is the identity).
    """
    if len(t) < 3:
        raise TooShort(f"perturbation needs >= 3 points, got {len(t)}")
    pts = t.points
    if kind == "reverse":
        new = pts[::-1]
    elif kind == "repeat":
        if times < 1:
            raise ValueError("times must be >= 1")
        new = np.repeat(pts, times, axis=0)
    elif kind == "outlier":
        rng = np.random.default_rng(seed)
        centroid = pts.mean(axis=0)
        diag = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
        if diag == 0:
            diag = 1.0
        new = pts.copy()
        for _ in range(count):
            direction = rng.normal(size=pts.shape[1])
            direction /= np.linalg.norm(direction)
            outlier = centroid + scale * diag * direction
            pos = int(rng.integers(0, len(new) + 1))
            new = np.insert(new, pos, outlier, axis=0)
    else:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    return Trajectory(points=new, frame_rate=t.frame_rate, hand=t.hand)


DEFAULT_PERTURBATIONS = (
    ("reverse", {}),
    ("outlier", {"count": 2, "scale": 3.0}),
    ("repeat", {"times": 2}),
)


@dataclass(frozen=True)
class PerturbationRow:
    kind: str
    hsd_rel_change: float          # mean (perturbed - base) / base of 1/(d+eps)
    ndtw_rel_change: float
    dyn_rel_change: float
    raw_hausdorff_max_abs_delta: float


@dataclass(frozen=True)
class PerturbationTable:
    rows: tuple[PerturbationRow, ...]

    def row(self, kind: str) -> PerturbationRow:
        for r in self.rows:
            if r.kind == kind:
                return r
        raise KeyError(kind)

    def check_signature(self):
        """Verify each corruption moved the metrics in its expected direction.

        reverse must leave the raw Hausdorff distance untouched while nDTW
        drops; outlier must drop both HSD and DYN; repeat must drop DYN
        without dropping nDTW.  Only kinds present in the table are checked.
        """
        problems = []
        kinds = {r.kind for r in self.rows}
        if "reverse" in kinds:
            r = self.row("reverse")
            if r.raw_hausdorff_max_abs_delta != 0.0:
                problems.append("reverse changed the raw Hausdorff distance")
            if not r.ndtw_rel_change < 0:
                problems.append("reverse did not drop nDTW")
        if "outlier" in kinds:
            r = self.row("outlier")
            if not r.hsd_rel_change < 0:
                problems.append("outlier did not drop HSD")
            if not r.dyn_rel_change < 0:
                problems.append("outlier did not drop DYN")
        if "repeat" in kinds:
            r = self.row("repeat")
            if not r.dyn_rel_change < 0:
                problems.append("repeat did not drop DYN")
            if r.ndtw_rel_change < 0:
                problems.append("repeat dropped nDTW")
        if problems:
            raise SignatureMismatch("; ".join(problems))


def perturbation_study(
    trajectories,
    perturbations=DEFAULT_PERTURBATIONS,
    cfg: DynConfig = DynConfig(),
    seed: int = 0,
    check_signature: bool = True,
) -> PerturbationTable:
    """Mean relative score change per perturbation over a trajectory suite.

    Each trajectory is scored against its own perturbed copy, with the
    pristine self-comparison as baseline, so the table isolates what each
    corruption alone does to each metric.  With ``check_signature`` the
    expected per-kind directions are verified (only for the standard kinds
    actually run); a contradiction raises :class:`SignatureMismatch`.  Pass
    ``check_signature=False`` for non-standard parameterizations such as the
    identity (repeat x1), which legitimately moves nothing.
    """
    trajectories = list(trajectories)
    if len(trajectories) < 10:
        raise InsufficientData(f"need >= 10 trajectories, got {len(trajectories)}")

    rows = []
    for kind, params in perturbations:
        hsd_changes, ndtw_changes, dyn_changes, raw_deltas = [], [], [], []
        for i, traj in enumerate(trajectories):
            base_raw = symmetric_hausdorff(traj, traj)
            base_hsd = hsd_score(base_raw, cfg.epsilon)
            base_ndtw = ndtw_score(traj, traj, cfg.epsilon)
            base_dyn = dyn_score_trajectories(traj, traj, cfg)

            mutated = perturb(traj, kind, seed=seed + i, **params)
            pert_raw = symmetric_hausdorff(traj, mutated)
            hsd_changes.append((hsd_score(pert_raw, cfg.epsilon) - base_hsd) / base_hsd)
            ndtw_changes.append((ndtw_score(traj, mutated, cfg.epsilon) - base_ndtw) / base_ndtw)
            dyn_changes.append(
                (dyn_score_trajectories(traj, mutated, cfg) - base_dyn) / base_dyn
            )
            raw_deltas.append(abs(pert_raw - base_raw))
        rows.append(
            PerturbationRow(
                kind=kind,
                hsd_rel_change=float(np.mean(hsd_changes)),
                ndtw_rel_change=float(np.mean(ndtw_changes)),
                dyn_rel_change=float(np.mean(dyn_changes)),
                raw_hausdorff_max_abs_delta=float(np.max(raw_deltas)),
            )
        )
    table = PerturbationTable(rows=tuple(rows))
    if check_signature:
        table.check_signature()
    return table


# -- human-ranking comparison ---------------------------------------------------

@dataclass(frozen=True)
class HumanRanking:
    """Per-sample orderings (best first); default points are linear n-1 .. 0.

    For four models that gives 3/2/1/0, matching the published best=3,
    second=2, worst=0 anchors; the value for third place is a linear
    interpolation, so an explicit ``scheme`` (points by position) can
    replace it if a different convention is wanted.
    """

    samples: tuple[tuple[str, ...], ...]

    def points(self, scheme=None) -> dict[str, float]:
        totals: dict[str, float] = {}
        for sample in self.samples:
            n = len(sample)
            for pos, model in enumerate(sample):
                pts = float(scheme[pos]) if scheme is not None else float(n - 1 - pos)
                totals[model] = totals.get(model, 0.0) + pts
        return totals


@dataclass(frozen=True)
class RankCorrelation:
    spearman: float
    kendall: float


def _to_scores(ranking) -> dict[str, float]:
    """Accept an ordering (best first), a score mapping, or a HumanRanking."""
    if isinstance(ranking, HumanRanking):
        return ranking.points()
    if isinstance(ranking, dict):
        return {str(k): float(v) for k, v in ranking.items()}
    ordering = list(ranking)
    n = len(ordering)
    return {str(model): float(n - pos) for pos, model in enumerate(ordering)}


def rank_correlation(metric_ranking, human_ranking) -> RankCorrelation:
    """Spearman rho and Kendall tau between two model rankings.

    Ties are handled by average ranks (tau-b for Kendall).
    """
    a = _to_scores(metric_ranking)
    b = _to_scores(human_ranking)
    if set(a) != set(b):
        raise ModelSetMismatch(
            f"model sets differ: {sorted(set(a) ^ set(b))} not shared"
        )
    models = sorted(a)
    x = [a[m] for m in models]
    y = [b[m] for m in models]
    rho = stats.spearmanr(x, y).statistic
    tau = stats.kendalltau(x, y, variant="b").statistic
    return RankCorrelation(spearman=float(rho), kendall=float(tau))


# -- report serialization -------------------------------------------------------

REPORT_HEADER = (
    "Model",
    "SceneC",
    "HSD",
    "Dyn",
    "nDTW",
    "MotionSum",
    "Diversity",
    "BLEU",
    "CLIP",
    "Logics",
    "SemanticsSum",
    "Overall",
)

_ROW_FIELDS = (
    "scene_c",
    "hsd",
    "dyn",
    "ndtw",
    "motion_sum",
    "diversity",
    "bleu",
    "clip",
    "logics",
    "semantics_sum",
    "overall",
)


def report_to_dict(report: MetricReport) -> dict:
    return {
        "schema_version": 1,
        "columns": list(REPORT_HEADER),
        "rows": [
            {"model_id": r.model_id, **{f: getattr(r, f) for f in _ROW_FIELDS}}
            for r in report.rows
        ],
    }


def report_from_dict(payload: dict) -> MetricReport:
    rows = tuple(
        ModelRow(model_id=r["model_id"], **{f: float(r[f]) for f in _ROW_FIELDS})
        for r in payload["rows"]
    )
    return MetricReport(rows=rows)


def report_to_csv(report: MetricReport) -> str:
    lines = [",".join(REPORT_HEADER)]
    for r in report.rows:
        lines.append(",".join([r.model_id] + [repr(getattr(r, f)) for f in _ROW_FIELDS]))
    return "\n".join(lines) + "\n"


def report_to_markdown(report: MetricReport) -> str:
    lines = [
        "| " + " | ".join(REPORT_HEADER) + " |",
        "|" + "---|" * len(REPORT_HEADER),
    ]
    for r in report.rows:
        cells = [r.model_id] + [f"{getattr(r, f):.4f}" for f in _ROW_FIELDS]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def perturbation_table_to_csv(table: PerturbationTable) -> str:
    lines = ["kind,hsd_rel_change,ndtw_rel_change,dyn_rel_change,raw_hausdorff_max_abs_delta"]
    for r in table.rows:
        lines.append(
            f"{r.kind},{r.hsd_rel_change!r},{r.ndtw_rel_change!r},"
            f"{r.dyn_rel_change!r},{r.raw_hausdorff_max_abs_delta!r}"
        )
    return "\n".join(lines) + "\n"


def perturbation_table_to_svg(table: PerturbationTable) -> str:
    """Self-contained grouped bar chart of mean relative score changes."""
    metrics = ("hsd_rel_change", "ndtw_rel_change", "dyn_rel_change")
    labels = ("HSD", "nDTW", "DYN")
    colors = ("#4878cf", "#ee854a", "#6acc65")
    width, height, margin = 640, 360, 50
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    values = [[getattr(r, m) for m in metrics] for r in table.rows]
    vmax = max(0.05, max(abs(v) for row in values for v in row))
    zero_y = margin + plot_h / 2.0

    def bar_y(v: float) -> tuple[float, float]:
        h = abs(v) / vmax * (plot_h / 2.0)
        return (zero_y - h, h) if v >= 0 else (zero_y, h)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{zero_y}" x2="{width - margin}" y2="{zero_y}" '
        'stroke="#333" stroke-width="1"/>',
    ]
    group_w = plot_w / max(1, len(table.rows))
    bar_w = group_w / (len(metrics) + 1)
    for gi, row in enumerate(table.rows):
        gx = margin + gi * group_w
        for mi, (metric, color) in enumerate(zip(metrics, colors)):
            v = getattr(row, metric)
            y, h = bar_y(v)
            x = gx + (mi + 0.5) * bar_w
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" '
                f'fill="{color}"/>'
            )
        parts.append(
            f'<text x="{gx + group_w / 2:.1f}" y="{height - margin / 2:.1f}" '
            f'text-anchor="middle" font-size="13" font-family="sans-serif">{row.kind}</text>'
        )
    for mi, (label, color) in enumerate(zip(labels, colors)):
        lx = margin + mi * 90
        parts.append(f'<rect x="{lx}" y="12" width="12" height="12" fill="{color}"/>')
        parts.append(
            f'<text x="{lx + 18}" y="22" font-size="13" font-family="sans-serif">{label}</text>'
        )
    parts.append(
        f'<text x="{margin}" y="{margin - 8}" font-size="12" font-family="sans-serif" '
        f'fill="#555">mean relative change (full scale = {vmax:.2f})</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
