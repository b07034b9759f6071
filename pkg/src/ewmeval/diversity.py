"""Diverse-trajectory sampling via voxel occupancy IoU.

Left/right end-effector tracks (in meters) are rasterized into shared-frame
voxel grids; pairwise similarity is a combined intersection-over-union of
the two hands' occupancy; a greedy pass repeatedly takes the trajectory
least similar to what is already selected.
"""

from dataclasses import dataclass

import numpy as np

from .datamodel import Point3, Trajectory
from .errors import (
    GridMismatch,
    KOutOfRange,
    NonPositiveVoxelSize,
    PointOutOfBounds,
)

DEFAULT_VOXEL_SIZE = 0.05  # meters; resolution is a tool parameter, not pinned upstream
DEFAULT_EPS = 1e-8


@dataclass(frozen=True)
class VoxelGrid:
    """Sparse occupancy counts over a regular 3-D grid."""

    origin: Point3
    voxel_size: float
    dims: tuple[int, int, int]
    cells: dict  # (i, j, k) -> visit count (>= 1)

    def __post_init__(self):
        if not self.voxel_size > 0:
            raise NonPositiveVoxelSize(f"voxel_size must be > 0, got {self.voxel_size}")
        for idx in self.cells:
            if not all(0 <= idx[a] < self.dims[a] for a in range(3)):
                raise PointOutOfBounds(f"cell {idx} outside dims {self.dims}")

    def occupied(self) -> frozenset:
        return frozenset(self.cells)

    def same_frame(self, other: "VoxelGrid") -> bool:
        return (
            self.origin == other.origin
            and self.voxel_size == other.voxel_size
            and self.dims == other.dims
        )


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric pairwise similarity in [0,1] with a unit diagonal."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"similarity matrix must be square, got {arr.shape}")
        if not np.allclose(arr, arr.T, atol=1e-12):
            raise ValueError("similarity matrix must be symmetric")
        if arr.min() < 0 or arr.max() > 1:
            raise ValueError("similarity values must lie in [0,1]")
        if not np.allclose(np.diag(arr), 1.0, atol=1e-12):
            raise ValueError("similarity diagonal must be 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def compute_bounds(trajectories, voxel_size: float, pad_voxels: int = 1):
    """Union bounding box of all points, padded; returns (origin, dims).

    A shared frame keeps pairwise IoU comparable across the whole task.
    """
    if not voxel_size > 0:
        raise NonPositiveVoxelSize(f"voxel_size must be > 0, got {voxel_size}")
    pts = np.vstack([t.points for t in trajectories if t is not None])
    lo = pts.min(axis=0) - pad_voxels * voxel_size
    hi = pts.max(axis=0) + pad_voxels * voxel_size
    dims = tuple(int(np.floor((hi[a] - lo[a]) / voxel_size)) + 1 for a in range(3))
    return Point3(*lo), dims


def _rasterize(traj, origin: Point3, voxel_size: float, dims, explicit_bounds: bool) -> dict:
    cells: dict = {}
    if traj is None:
        return cells
    o = np.array([origin.x, origin.y, origin.z])
    idx = np.floor((traj.points - o) / voxel_size).astype(np.int64)
    for row in idx:
        key = (int(row[0]), int(row[1]), int(row[2]))
        if not all(0 <= key[a] < dims[a] for a in range(3)):
            if explicit_bounds:
                raise PointOutOfBounds(f"point cell {key} outside dims {dims}")
            raise PointOutOfBounds(f"computed bounds too small for cell {key}")
        cells[key] = cells.get(key, 0) + 1
    return cells


def voxelize(
    left: Trajectory | None,
    right: Trajectory | None,
    voxel_size: float = DEFAULT_VOXEL_SIZE,
    bounds=None,
    binary: bool = True,
) -> tuple[VoxelGrid, VoxelGrid]:
    """Rasterize both hands' 3-D tracks into occupancy grids sharing one frame.

    A cell is occupied iff at least one point falls in it; with
    ``binary=False`` cells carry visit counts instead.  ``bounds`` is an
    (origin, dims) pair; absent, the padded union box of both tracks is used.
    """
    if not voxel_size > 0:
        raise NonPositiveVoxelSize(f"voxel_size must be > 0, got {voxel_size}")
    present = [t for t in (left, right) if t is not None]
    if not present:
        raise ValueError("voxelize needs at least one trajectory")
    for t in present:
        if t.dim != 3:
            raise ValueError("voxelize needs 3-D trajectories (meters)")
    explicit = bounds is not None
    origin, dims = bounds if explicit else compute_bounds(present, voxel_size)

    grids = []
    for traj in (left, right):
        cells = _rasterize(traj, origin, voxel_size, dims, explicit)
        if binary:
            cells = {k: 1 for k in cells}
        grids.append(VoxelGrid(origin=origin, voxel_size=voxel_size, dims=dims, cells=cells))
    return grids[0], grids[1]


def _min_max_sums(a: VoxelGrid, b: VoxelGrid) -> tuple[float, float]:
    keys = set(a.cells) | set(b.cells)
    mins = sum(min(a.cells.get(k, 0), b.cells.get(k, 0)) for k in keys)
    maxs = sum(max(a.cells.get(k, 0), b.cells.get(k, 0)) for k in keys)
    return float(mins), float(maxs)


def pair_iou(
    vi_l: VoxelGrid,
    vi_r: VoxelGrid,
    vj_l: VoxelGrid,
    vj_r: VoxelGrid,
    eps: float = DEFAULT_EPS,
) -> float:
    """Combined two-hand voxel IoU.

    (sum min(L_i, L_j) + sum min(R_i, R_j)) / (sum max(L_i, L_j) + sum
    max(R_i, R_j) + eps).  With binary grids the min/max sums reduce to
    intersection and union cell counts.  Always in [0, 1).
    """
    for a, b in ((vi_l, vj_l), (vi_r, vj_r)):
        if not a.same_frame(b):
            raise GridMismatch("voxel grids do not share origin/dims/voxel_size")
    inter_l, union_l = _min_max_sums(vi_l, vj_l)
    inter_r, union_r = _min_max_sums(vi_r, vj_r)
    return (inter_l + inter_r) / (union_l + union_r + eps)


def similarity_matrix(grid_pairs, eps: float = DEFAULT_EPS) -> SimilarityMatrix:
    """Pairwise IoU over a list of (left, right) grid pairs; diagonal pinned to 1."""
    n = len(grid_pairs)
    values = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            s = pair_iou(grid_pairs[i][0], grid_pairs[i][1], grid_pairs[j][0], grid_pairs[j][1], eps)
            values[i, j] = values[j, i] = s
    return SimilarityMatrix(values=values)


def greedy_diverse_select(s: SimilarityMatrix, k: int) -> list[int]:
    """Pick k indices greedily minimizing similarity to the growing selection.

    First pick: argmin of mean similarity to all other rows.  Then repeat:
    argmin over unselected rows of mean similarity to the selected set.
    Ties go to the lowest index; the returned list is in selection order.
    """
    n = s.n
    if not (1 <= k <= n):
        raise KOutOfRange(f"k must be in [1, {n}], got {k}")
    if n == 1:
        return [0]
    values = s.values
    off_diag_mean = (values.sum(axis=1) - np.diag(values)) / (n - 1)
    selected = [int(np.argmin(off_diag_mean))]
    remaining = [i for i in range(n) if i != selected[0]]
    while len(selected) < k:
        means = values[np.ix_(remaining, selected)].mean(axis=1)
        pick = remaining[int(np.argmin(means))]
        selected.append(pick)
        remaining.remove(pick)
    return selected


def select_diverse_trajectories(
    pairs: list[tuple[Trajectory | None, Trajectory | None]],
    k: int,
    voxel_size: float = DEFAULT_VOXEL_SIZE,
    eps: float = DEFAULT_EPS,
    binary: bool = True,
) -> tuple[list[int], SimilarityMatrix]:
    """Voxelize all (left, right) pairs in one shared frame, then greedy-select k."""
    present = [t for pair in pairs for t in pair if t is not None]
    if not present:
        raise ValueError("no trajectories to select from")
    bounds = compute_bounds(present, voxel_size)
    grids = [voxelize(lt, rt, voxel_size, bounds=bounds, binary=binary) for lt, rt in pairs]
    sim = similarity_matrix(grids, eps)
    if not (1 <= k <= sim.n):
        raise KOutOfRange(f"k must be in [1, {sim.n}], got {k}")
    return greedy_diverse_select(sim, k), sim
