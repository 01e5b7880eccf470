"""Shape metrics: solid voxelization, voxel IoU, surface sampling and Chamfer distance."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .carve import CROSS, BinaryGrid, GridSpec
from .errors import DegenerateCloud, EmptyCloud, EmptyGrid, EmptyMesh, SpecMismatch, ValidationError
from .mesh import TriangleMesh

# surface samples per voxel edge length when marking surface voxels
SAMPLES_PER_VOXEL = 4


@dataclass(frozen=True)
class MetricReport:
    iou: float
    chamfer_x100: float
    pose_accuracy: float | None
    pose_median_deg: float | None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        data = json.loads(text)
        return cls(**{k: data[k] for k in ("iou", "chamfer_x100", "pose_accuracy", "pose_median_deg")})


def _dense_surface_points(tri: np.ndarray, spacing: float) -> np.ndarray:
    """Barycentric lattice on every triangle with edge spacing at most ``spacing``."""
    chunks = []
    edge_len = np.max(
        np.linalg.norm(tri - np.roll(tri, 1, axis=1), axis=2), axis=1
    )
    steps = np.maximum(1, np.ceil(edge_len / spacing).astype(np.int64))
    for k in np.unique(steps):
        sel = tri[steps == k]
        i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
        keep = i + j <= k
        a = (i[keep] / k)[:, None]
        b = (j[keep] / k)[:, None]
        c = 1.0 - a - b
        # (T, L, 3)
        pts = a[None] * sel[:, None, 0] + b[None] * sel[:, None, 1] + c[None] * sel[:, None, 2]
        chunks.append(pts.reshape(-1, 3))
    return np.concatenate(chunks)


def voxelize_solid(mesh: TriangleMesh, rotation, spec: GridSpec = GridSpec()) -> BinaryGrid:
    """Solid voxelization of a closed mesh after rotating it by ``rotation``.

    Surface voxels are those hit by a dense surface sampling (at least
    ``SAMPLES_PER_VOXEL`` samples per voxel edge); the interior is whatever a
    6-connected flood fill from the grid boundary cannot reach.
    """
    if len(mesh.faces) == 0:
        raise EmptyMesh("mesh has no faces")
    tri = mesh.rotated(rotation).triangles
    pts = _dense_surface_points(tri, spec.voxel_size / SAMPLES_PER_VOXEL)
    idx = spec.world_to_index(pts)
    inside = np.all((idx >= 0) & (idx < spec.resolution), axis=1)
    idx = idx[inside]
    surface = np.zeros(spec.shape, dtype=bool)
    surface[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    # outside = empty voxels connected to the grid boundary
    labels, _ = ndimage.label(~surface, CROSS)
    border = np.zeros(spec.shape, dtype=bool)
    border[[0, -1], :, :] = border[:, [0, -1], :] = border[:, :, [0, -1]] = True
    outside_labels = np.unique(labels[border & ~surface])
    outside = np.isin(labels, outside_labels[outside_labels > 0])
    return BinaryGrid(spec, ~outside)


def _check_specs(a: BinaryGrid, b: BinaryGrid) -> None:
    if a.spec != b.spec:
        raise SpecMismatch(f"grid specs differ: {a.spec} vs {b.spec}")


def iou(a: BinaryGrid, b: BinaryGrid) -> float:
    """Intersection over union of occupied voxels; two empty grids score 1."""
    _check_specs(a, b)
    union = np.count_nonzero(a.bits | b.bits)
    if union == 0:
        return 1.0
    return np.count_nonzero(a.bits & b.bits) / union


def grid_to_cloud(grid: BinaryGrid) -> np.ndarray:
    """Centroids of occupied voxels, in ``[ix, iy, iz]`` scan order."""
    idx = np.argwhere(grid.bits)
    if len(idx) == 0:
        raise EmptyGrid("grid has no occupied voxel")
    return grid.spec.index_to_world(idx)


def sample_surface(mesh: TriangleMesh, n: int, seed: int = 0) -> np.ndarray:
    """``n`` area-uniform surface samples: triangle by area, then uniform barycentric."""
    if n < 1:
        raise ValidationError("sample count must be >= 1")
    areas = mesh.face_areas() if len(mesh.faces) else np.zeros(0)
    total = float(np.sum(areas))
    if len(areas) == 0 or total == 0.0:
        raise EmptyMesh("mesh has no surface area")
    rng = np.random.default_rng(seed)
    face = rng.choice(len(areas), size=n, p=areas / total)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    tri = mesh.triangles[face]
    a = (1.0 - r1)[:, None]
    b = (r1 * (1.0 - r2))[:, None]
    c = (r1 * r2)[:, None]
    return a * tri[:, 0] + b * tri[:, 1] + c * tri[:, 2]


def normalize_cloud(points) -> np.ndarray:
    """Centroid to the origin, then scale so the farthest point sits at radius 0.5."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        raise EmptyCloud("point cloud is empty")
    centered = points - points.mean(axis=0)
    radius = np.sqrt(np.max(np.sum(centered * centered, axis=1)))
    if radius == 0.0 or not math.isfinite(radius):
        raise DegenerateCloud("all points coincide")
    return centered * (0.5 / radius)


def nearest_distances(query: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Distance from every query point to its nearest reference point.

    The k-d tree only picks the neighbour; the distance itself is recomputed
    with plain numpy so results match a brute-force scan bit for bit.
    """
    _, nn = cKDTree(ref).query(query, k=1)
    diff = query - ref[nn]
    return np.sqrt(np.sum(diff * diff, axis=1))


def chamfer(a, b) -> float:
    """Symmetric mean nearest-neighbour distance of normalized clouds, times 100."""
    a = normalize_cloud(a)
    b = normalize_cloud(b)
    d_ab = nearest_distances(a, b).mean()
    d_ba = nearest_distances(b, a).mean()
    return float(100.0 * (d_ab + d_ba) / 2.0)
