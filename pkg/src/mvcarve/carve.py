"""Occupancy grids from silhouettes and rotations, binarization and cleanup.

Grids are ``(res, res, res)`` arrays indexed ``[ix, iy, iz]``; voxel
``(ix, iy, iz)`` has its centroid at ``center - extent/2 + (idx + 0.5) * extent/res``
and lives in the reference view's frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidThreshold, InvalidWeight, LengthMismatch, SizeMismatch, ValidationError
from .geometry import MIN_DEPTH, CameraModel, quat_rotate_point
from .raster import nearest_pixel

# 6-connected structuring element, radius 1
CROSS = ndimage.generate_binary_structure(3, 1)


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 32
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    extent: float = 1.1

    def __post_init__(self):
        if int(self.resolution) < 2:
            raise ValidationError("grid resolution must be >= 2")
        if not self.extent > 0:
            raise ValidationError("grid extent must be positive")
        object.__setattr__(self, "resolution", int(self.resolution))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def voxel_size(self) -> float:
        return self.extent / self.resolution

    @property
    def origin(self) -> np.ndarray:
        """World position of the grid's minimum corner."""
        return np.asarray(self.center) - 0.5 * self.extent

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.resolution,) * 3

    def index_to_world(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.float64)
        return self.origin + (idx + 0.5) * self.voxel_size

    def world_to_index(self, points) -> np.ndarray:
        return np.floor((np.asarray(points, dtype=np.float64) - self.origin) / self.voxel_size).astype(np.int64)

    def centroids(self) -> np.ndarray:
        """All voxel centroids, shape ``(res, res, res, 3)``."""
        ax = np.arange(self.resolution)
        idx = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1)
        return self.index_to_world(idx)


@dataclass(frozen=True)
class OccupancyGrid:
    spec: GridSpec
    values: np.ndarray  # float64 in [0, 1]


@dataclass(frozen=True)
class BinaryGrid:
    spec: GridSpec
    bits: np.ndarray  # bool

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))


def make_weights(n: int, w1: float) -> np.ndarray:
    """``[w1, (1 - w1)/(n - 1), ...]``; with a single view the weight is 1."""
    if n < 1:
        raise InvalidWeight("need at least one view")
    if n == 1:
        return np.array([1.0])
    if not 0.0 < w1 < 1.0:
        raise InvalidWeight(f"w1 must lie in (0, 1), got {w1}")
    rest = (1.0 - w1) / (n - 1)
    if w1 < rest - 1e-12:
        raise InvalidWeight(f"w1={w1} is below the other views' weight {rest}")
    return np.array([w1] + [rest] * (n - 1))


def silhouette_lookup(sil: np.ndarray, rotation, cam: CameraModel, points: np.ndarray) -> np.ndarray:
    """Nearest-pixel silhouette value at the projection of each point; 0 outside the image."""
    pts = quat_rotate_point(rotation, points) + cam.t
    z = pts[:, 2]
    front = z > MIN_DEPTH
    safe_z = np.where(front, z, 1.0)
    cx, cy = cam.principal_point
    uv = np.stack(
        [cam.focal_length * pts[:, 0] / safe_z + cx, cam.focal_length * pts[:, 1] / safe_z + cy], axis=-1
    )
    row, col = nearest_pixel(uv)
    ok = front & (row >= 0) & (row < cam.height) & (col >= 0) & (col < cam.width)
    out = np.zeros(len(pts), dtype=np.float64)
    out[ok] = np.asarray(sil)[row[ok], col[ok]] != 0
    return out


def build_occupancy(
    silhouettes,
    rotations,
    cam: CameraModel,
    spec: GridSpec = GridSpec(),
    weights=None,
) -> OccupancyGrid:
    """Weighted average of silhouette memberships at every voxel centroid.

    ``rotations[i]`` maps the reference frame into view ``i``'s camera frame.
    Views are accumulated in order, which keeps the result bit-identical
    under permutations of equally weighted views.
    """
    silhouettes = list(silhouettes)
    rotations = np.asarray(rotations, dtype=np.float64).reshape(-1, 4)
    if len(silhouettes) != len(rotations):
        raise LengthMismatch(f"{len(silhouettes)} silhouettes vs {len(rotations)} rotations")
    if len(silhouettes) == 0:
        raise LengthMismatch("need at least one view")
    if weights is None:
        weights = np.full(len(silhouettes), 1.0 / len(silhouettes))
    weights = np.asarray(weights, dtype=np.float64)
    if len(weights) != len(silhouettes):
        raise LengthMismatch(f"{len(weights)} weights vs {len(silhouettes)} views")
    for s in silhouettes:
        if np.shape(s) != (cam.height, cam.width):
            raise SizeMismatch(f"silhouette shape {np.shape(s)} does not match camera {(cam.height, cam.width)}")
    points = spec.centroids().reshape(-1, 3)
    acc = np.zeros(len(points))
    for sil, q, w in zip(silhouettes, rotations, weights):
        acc += w * silhouette_lookup(sil, q, cam, points)
    values = acc / float(np.sum(weights))
    return OccupancyGrid(spec, values.reshape(spec.shape))


def binarize(grid: OccupancyGrid, tau: float) -> BinaryGrid:
    if not 0.0 < tau < 1.0:
        raise InvalidThreshold(f"threshold must lie in (0, 1), got {tau}")
    return BinaryGrid(grid.spec, np.asarray(grid.values) >= tau)


def cleanup(grid: BinaryGrid) -> BinaryGrid:
    """Morphological closing (6-connected, radius 1), then keep the largest 6-connected component.

    Ties between equally large components go to the one met first in
    ``[ix, iy, iz]`` scan order.
    """
    bits = np.asarray(grid.bits, dtype=bool)
    if not bits.any():
        return BinaryGrid(grid.spec, bits.copy())
    # pad so that closing never erodes voxels touching the grid border
    padded = np.pad(bits, 1)
    closed = ndimage.binary_erosion(ndimage.binary_dilation(padded, CROSS), CROSS)[1:-1, 1:-1, 1:-1]
    labels, count = ndimage.label(closed, CROSS)
    sizes = np.bincount(labels.ravel())[1:]
    keep = int(np.argmax(sizes)) + 1
    return BinaryGrid(grid.spec, labels == keep)
