"""Motion metrics between ground-truth and generated end-effector trajectories.

Three complementary signals:

* HSD: symmetric Hausdorff distance, order-insensitive spatial deviation,
  scored as a stabilized reciprocal,
* nDTW: dynamic time warping cost normalized by alignment length,
  order-sensitive shape/timing similarity, scored as a reciprocal,
* DYN: weighted reciprocal 1-D Wasserstein distances between the speed and
  acceleration-magnitude distributions, amplitude-normalized.

Plus primary-hand selection (larger convex-hull diameter wins) and best-of-N
candidate selection by Hausdorff distance.  Everything here is a pure
function of its inputs.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from .datamodel import Trajectory
from .errors import (
    BothEmpty,
    DimensionMismatch,
    EmptyCandidateList,
    EmptySamples,
    EmptyTrajectory,
    TooShort,
)

DEFAULT_EPS = 1e-8


@dataclass(frozen=True)
class DynConfig:
    """Weights and stabilizer for the dynamic-consistency score.

    ``per_axis`` switches the Wasserstein terms from speed/acceleration
    magnitudes to per-axis signed series (summed over axes); magnitudes are
    the default because a 1-D transport distance needs scalar samples.
    """

    alpha: float = 0.007
    beta: float = 0.003
    epsilon: float = DEFAULT_EPS
    per_axis: bool = False

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True)
class DynamicsProfile:
    """Speed and acceleration magnitude series derived from one trajectory."""

    speeds: np.ndarray       # |p[i+1]-p[i]| * fps, length n-1
    accel_mags: np.ndarray   # |speeds[i+1]-speeds[i]| * fps, length n-2

    def __post_init__(self):
        for name in ("speeds", "accel_mags"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite values")
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class MotionScores:
    hsd: float
    ndtw: float
    dyn: float
    raw_hausdorff: float
    raw_ndtw_cost: float

    def __post_init__(self):
        for name in ("hsd", "ndtw", "dyn", "raw_hausdorff", "raw_ndtw_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def _points_of(t) -> np.ndarray:
    """Accept a Trajectory or a raw (n,) / (n, d) point sequence."""
    if isinstance(t, Trajectory):
        return t.points
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise EmptyTrajectory(f"expected a non-empty point sequence, got shape {arr.shape}")
    return arr


def _point_pair(g, p) -> tuple[np.ndarray, np.ndarray]:
    ga, pa = _points_of(g), _points_of(p)
    if ga.shape[1] != pa.shape[1]:
        raise DimensionMismatch(
            f"trajectory dims differ: {ga.shape[1]} vs {pa.shape[1]}"
        )
    return ga, pa


def symmetric_hausdorff(g, p) -> float:
    """max over both directions of nearest-neighbor distance between point sets.

    Order-insensitive: reversing either argument leaves the value unchanged.
    Accepts Trajectory values or raw point arrays.
    """
    ga, pa = _point_pair(g, p)
    d = cdist(ga, pa)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def hsd_score(d: float, eps: float = DEFAULT_EPS) -> float:
    """Reciprocal Hausdorff score, 1/(d + eps); the eps keeps a perfect match finite."""
    if d < 0:
        raise ValueError(f"distance must be >= 0, got {d}")
    return 1.0 / (d + eps)


class DtwResult(NamedTuple):
    cost: float
    path_length: int  # number of aligned cells, both endpoints included


def dtw_cost(g, p) -> DtwResult:
    """Classic DTW with Euclidean local cost and steps {(1,0),(0,1),(1,1)}.

    Boundary-to-boundary alignment; the reported path length is that of one
    optimal path, recovered with a deterministic diagonal-first tie-break.
    Accepts Trajectory values or raw (1-D or higher) point sequences.
    """
    ga, pa = _point_pair(g, p)
    local = cdist(ga, pa)
    n, m = local.shape
    acc = np.full((n, m), np.inf)
    acc[0, 0] = local[0, 0]
    for j in range(1, m):
        acc[0, j] = acc[0, j - 1] + local[0, j]
    for i in range(1, n):
        acc[i, 0] = acc[i - 1, 0] + local[i, 0]
        row_prev, row_cur = acc[i - 1], acc[i]
        for j in range(1, m):
            row_cur[j] = local[i, j] + min(row_prev[j - 1], row_prev[j], row_cur[j - 1])

    # Traceback for the alignment length; prefer diagonal, then up, then left.
    i, j, length = n - 1, m - 1, 1
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            best = min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
            if acc[i - 1, j - 1] == best:
                i, j = i - 1, j - 1
            elif acc[i - 1, j] == best:
                i -= 1
            else:
                j -= 1
        elif i > 0:
            i -= 1
        else:
            j -= 1
        length += 1
    return DtwResult(cost=float(acc[n - 1, m - 1]), path_length=length)


def ndtw_score(
    g: Trajectory,
    p: Trajectory,
    eps: float = DEFAULT_EPS,
    normalizer: str = "path",
) -> float:
    """Reciprocal of length-normalized DTW cost.

    ``normalizer`` is ``"path"`` (divide by the optimal alignment length) or
    ``"sum"`` (divide by len(G)+len(P)); the normalizer is a documented
    choice, not pinned by the metric's definition.  Unlike the Hausdorff
    score this is sensitive to temporal order.
    """
    res = dtw_cost(g, p)
    if normalizer == "path":
        denom = res.path_length
    elif normalizer == "sum":
        denom = len(_points_of(g)) + len(_points_of(p))
    else:
        raise ValueError(f"unknown normalizer {normalizer!r}")
    return 1.0 / (res.cost / denom + eps)


def dynamics_profile(t: Trajectory) -> DynamicsProfile:
    """Finite-difference speed and acceleration magnitudes, scaled by frame rate."""
    if len(t) < 3:
        raise TooShort(f"need >= 3 points for dynamics, got {len(t)}")
    steps = np.diff(t.points, axis=0)
    speeds = np.linalg.norm(steps, axis=1) * t.frame_rate
    accel = np.abs(np.diff(speeds)) * t.frame_rate
    return DynamicsProfile(speeds=speeds, accel_mags=accel)


def wasserstein_1d(u, w) -> float:
    """W1 between the empirical distributions of two sample sets.

    Computed as the integral of the CDF gap over the pooled support, which
    equals the quantile-function integral; sample sets may differ in length.
    """
    u = np.sort(np.asarray(u, dtype=np.float64))
    w = np.sort(np.asarray(w, dtype=np.float64))
    if u.size == 0 or w.size == 0:
        raise EmptySamples("wasserstein_1d needs non-empty sample sets")
    support = np.sort(np.concatenate([u, w]))
    deltas = np.diff(support)
    u_cdf = np.searchsorted(u, support[:-1], side="right") / u.size
    w_cdf = np.searchsorted(w, support[:-1], side="right") / w.size
    return float(np.sum(np.abs(u_cdf - w_cdf) * deltas))


def amplitude_ratio(x_gt, x_pred, eps: float = DEFAULT_EPS) -> float:
    """min-over-max ratio of the two sample ranges, stabilized by eps.

    Always in (0, 1]; equals 1 iff the ranges match (two constant series
    both have range 0 and compare as eps/eps = 1).
    """
    x_gt = np.asarray(x_gt, dtype=np.float64)
    x_pred = np.asarray(x_pred, dtype=np.float64)
    if x_gt.size == 0 or x_pred.size == 0:
        raise EmptySamples("amplitude_ratio needs non-empty sample sets")
    r_gt = float(x_gt.max() - x_gt.min())
    r_pred = float(x_pred.max() - x_pred.min())
    return (min(r_gt, r_pred) + eps) / (max(r_gt, r_pred) + eps)


def dyn_combine(vr: float, w_v: float, ar: float, w_a: float, cfg: DynConfig) -> float:
    """alpha*VR/(W(v)+eps) + beta*AR/(W(a)+eps); strictly decreasing in each W term."""
    return cfg.alpha * vr / (w_v + cfg.epsilon) + cfg.beta * ar / (w_a + cfg.epsilon)


def dyn_score(gt: DynamicsProfile, pred: DynamicsProfile, cfg: DynConfig = DynConfig()) -> float:
    """Dynamic consistency between two magnitude profiles."""
    if gt.speeds.size == 0 or pred.speeds.size == 0:
        raise EmptySamples("dyn_score needs non-empty speed series")
    if gt.accel_mags.size == 0 or pred.accel_mags.size == 0:
        raise EmptySamples("dyn_score needs non-empty acceleration series")
    vr = amplitude_ratio(gt.speeds, pred.speeds, cfg.epsilon)
    ar = amplitude_ratio(gt.accel_mags, pred.accel_mags, cfg.epsilon)
    w_v = wasserstein_1d(gt.speeds, pred.speeds)
    w_a = wasserstein_1d(gt.accel_mags, pred.accel_mags)
    return dyn_combine(vr, w_v, ar, w_a, cfg)


def _axis_profiles(t: Trajectory) -> list[DynamicsProfile]:
    if len(t) < 3:
        raise TooShort(f"need >= 3 points for dynamics, got {len(t)}")
    out = []
    for axis in range(t.dim):
        vel = np.diff(t.points[:, axis]) * t.frame_rate
        acc = np.abs(np.diff(vel)) * t.frame_rate
        out.append(DynamicsProfile(speeds=vel, accel_mags=acc))
    return out


def dyn_score_trajectories(gt: Trajectory, pred: Trajectory, cfg: DynConfig = DynConfig()) -> float:
    """DYN from raw trajectories, honoring ``cfg.per_axis``.

    Magnitude mode feeds |v| and |a| profiles to :func:`dyn_score`; per-axis
    mode scores each axis's signed velocity series separately and averages.
    """
    if gt.dim != pred.dim:
        raise DimensionMismatch(f"trajectory dims differ: {gt.dim} vs {pred.dim}")
    if not cfg.per_axis:
        return dyn_score(dynamics_profile(gt), dynamics_profile(pred), cfg)
    per_axis = [
        dyn_score(g_ax, p_ax, cfg)
        for g_ax, p_ax in zip(_axis_profiles(gt), _axis_profiles(pred))
    ]
    return float(np.mean(per_axis))


# -- primary hand selection ---------------------------------------------------

def _hull_vertices(points: np.ndarray) -> np.ndarray:
    """2-D convex hull by monotone chain; degenerate (collinear) input is fine."""
    pts = np.unique(points[:, :2], axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(seq):
        hull = []
        for p in seq:
            while len(hull) >= 2:
                o, a = hull[-2], hull[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0:
                    hull.pop()
                else:
                    break
            hull.append(p)
        return hull

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def hull_diameter(t) -> float:
    """Spatial extent: max pairwise distance between convex hull vertices.

    Accepts a Trajectory or a raw (n, 2+) point array; only the first two
    coordinates enter the hull.
    """
    verts = _hull_vertices(_points_of(t))
    if len(verts) == 1:
        return 0.0
    d = cdist(verts, verts)
    return float(d.max())


def primary_hand(left: Trajectory | None, right: Trajectory | None) -> Trajectory:
    """Pick the hand with the larger spatial extent (ties favor the left)."""
    if left is None and right is None:
        raise BothEmpty("no hand trajectory available")
    if left is None:
        return right
    if right is None:
        return left
    return left if hull_diameter(left) >= hull_diameter(right) else right


def motion_scores(
    gt: Trajectory, pred: Trajectory, cfg: DynConfig = DynConfig()
) -> MotionScores:
    """All three motion metrics for one (ground truth, candidate) pair."""
    d = symmetric_hausdorff(gt, pred)
    dtw = dtw_cost(gt, pred)
    return MotionScores(
        hsd=hsd_score(d, cfg.epsilon),
        ndtw=ndtw_score(gt, pred, cfg.epsilon),
        dyn=dyn_score_trajectories(gt, pred, cfg),
        raw_hausdorff=d,
        raw_ndtw_cost=dtw.cost / dtw.path_length,
    )


def best_of_n(
    gt: Trajectory, candidates: list[Trajectory], cfg: DynConfig = DynConfig()
) -> tuple[int, MotionScores]:
    """Select the candidate with minimal Hausdorff distance to ground truth.

    Ties resolve to the lowest index so reruns are deterministic.  Returns
    the winning index together with its full motion scores.
    """
    if not candidates:
        raise EmptyCandidateList("best_of_n needs at least one candidate")
    distances = [symmetric_hausdorff(gt, c) for c in candidates]
    idx = int(np.argmin(distances))  # argmin takes the first minimum
    return idx, motion_scores(gt, candidates[idx], cfg)
