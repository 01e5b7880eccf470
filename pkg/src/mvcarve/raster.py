"""Silhouette rasterization, contour extraction and exact distance transforms.

Images are ``(height, width)`` numpy arrays indexed ``[row, col]``; pixel
``(row, col)`` has its centre at image coordinates ``(u, v) = (col, row)``.
Silhouettes are ``uint8`` arrays holding 0 (background) or 1 (object).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import EmptyRender, EmptySilhouette, NoContourPoints, NoSeeds, ValidationError
from .geometry import MIN_DEPTH, CameraModel, project
from .mesh import TriangleMesh

DEFAULT_MAX_CONTOUR_POINTS = 200


def _edge_function(p0, p1, px, py):
    """Edge function of the directed edge p0->p1, antisymmetric bit-for-bit.

    The product is always evaluated with the lexicographically smaller
    endpoint first so that the two triangles sharing an edge see exactly
    opposite values.
    """
    flip = (p1[0], p1[1]) < (p0[0], p0[1])
    a, b = (p1, p0) if flip else (p0, p1)
    e = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])
    return -e if flip else e


def _is_top_left(p0, p1) -> bool:
    dx = p1[0] - p0[0]
    dy = p1[1] - p0[1]
    return dy < 0 or (dy == 0 and dx > 0)


def _fill_triangle(mask: np.ndarray, a, b, c) -> None:
    area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if area == 0:
        return
    if area < 0:
        b, c = c, b
    height, width = mask.shape
    us = (a[0], b[0], c[0])
    vs = (a[1], b[1], c[1])
    c0 = max(math.ceil(min(us)), 0)
    c1 = min(math.floor(max(us)), width - 1)
    r0 = max(math.ceil(min(vs)), 0)
    r1 = min(math.floor(max(vs)), height - 1)
    if c0 > c1 or r0 > r1:
        return
    px, py = np.meshgrid(
        np.arange(c0, c1 + 1, dtype=np.float64), np.arange(r0, r1 + 1, dtype=np.float64)
    )
    inside = np.ones(px.shape, dtype=bool)
    for p0, p1 in ((a, b), (b, c), (c, a)):
        e = _edge_function(p0, p1, px, py)
        if _is_top_left(p0, p1):
            inside &= e >= 0
        else:
            inside &= e > 0
    mask[r0 : r1 + 1, c0 : c1 + 1] |= inside


def render_silhouette(mesh: TriangleMesh, rotation, cam: CameraModel) -> np.ndarray:
    """Binary mask of ``mesh`` seen under ``rotation`` through ``cam``.

    A pixel is set iff its centre lies inside the projection of at least one
    triangle (top-left fill rule, no anti-aliasing). Triangles with a vertex
    at or behind the camera plane are skipped.
    """
    pts = cam.to_camera_frame(rotation, mesh.vertices)
    in_front = pts[:, 2] > MIN_DEPTH
    uv = np.full((len(pts), 2), np.nan)
    if in_front.any():
        uv[in_front] = project(cam, pts[in_front])
    mask = np.zeros((cam.height, cam.width), dtype=bool)
    for face in mesh.faces:
        if not in_front[face].all():
            continue
        a, b, c = (tuple(uv[k]) for k in face)
        _fill_triangle(mask, a, b, c)
    if not mask.any():
        raise EmptyRender("no pixel covered; object is out of frame or behind the camera")
    return mask.astype(np.uint8)


def contour_mask(sil: np.ndarray) -> np.ndarray:
    """Foreground pixels with at least one background 4-neighbour (border counts as background)."""
    fg = np.asarray(sil) != 0
    padded = np.pad(fg, 1, constant_values=False)
    interior = padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    return fg & ~interior


def extract_contour_pixels(sil: np.ndarray) -> np.ndarray:
    """``(K, 2)`` array of ``(row, col)`` contour pixels in row-major order."""
    if not np.any(sil):
        raise EmptySilhouette("silhouette has no foreground pixel")
    return np.argwhere(contour_mask(sil))


def nearest_pixel(uv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(row, col)`` of the pixel whose centre is nearest; halves round up."""
    col = np.floor(uv[..., 0] + 0.5).astype(np.int64)
    row = np.floor(uv[..., 1] + 0.5).astype(np.int64)
    return row, col


def lift_contour_points(
    cloud,
    rotation,
    cam: CameraModel,
    sil: np.ndarray,
    max_points: int = DEFAULT_MAX_CONTOUR_POINTS,
    seed: int = 0,
) -> np.ndarray:
    """Cloud points whose projection rounds onto a contour pixel of ``sil``.

    Returned points are expressed in the camera frame of this view, with
    ``t*`` included, which is what the contour loss consumes. At most
    ``max_points`` are kept (seeded uniform subsample, original order).
    """
    cloud = np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
    if len(cloud) == 0:
        raise ValidationError("point cloud is empty")
    if max_points < 1:
        raise ValidationError("max_points must be >= 1")
    pts = cam.to_camera_frame(rotation, cloud)
    keep = pts[:, 2] > MIN_DEPTH
    idx = np.flatnonzero(keep)
    row, col = nearest_pixel(project(cam, pts[idx])) if len(idx) else (idx, idx)
    inb = (row >= 0) & (row < cam.height) & (col >= 0) & (col < cam.width)
    idx, row, col = idx[inb], row[inb], col[inb]
    on_contour = contour_mask(sil)[row, col]
    idx = idx[on_contour]
    if len(idx) == 0:
        raise NoContourPoints("no cloud point projects onto the silhouette contour")
    if len(idx) > max_points:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(idx, size=max_points, replace=False))
    return pts[idx]


def _squared_edt_1d(f: list[float]) -> list[float]:
    """Lower envelope of parabolas ``(x - q)^2 + f[q]`` over finite samples."""
    n = len(f)
    sites = [q for q in range(n) if f[q] != math.inf]
    if not sites:
        return [math.inf] * n
    v = [sites[0]]
    z = [-math.inf, math.inf]
    for q in sites[1:]:
        while True:
            p = v[-1]
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2 * q - 2 * p)
            if s <= z[-2] and len(v) > 1:
                v.pop()
                z.pop()
                continue
            break
        v.append(q)
        z[-1] = s
        z.append(math.inf)
    out = [0.0] * n
    k = 0
    for x in range(n):
        while z[k + 1] < x:
            k += 1
        d = x - v[k]
        out[x] = d * d + f[v[k]]
    return out


def distance_transform(seeds, width: int, height: int) -> np.ndarray:
    """Exact Euclidean distance from every pixel centre to the nearest seed.

    ``seeds`` is a sequence of ``(row, col)``. Squared distances are built
    with a column pass followed by a lower-envelope row pass, both exact in
    integer arithmetic, then square-rooted.
    """
    seeds = np.asarray(seeds, dtype=np.int64).reshape(-1, 2)
    if len(seeds) == 0:
        raise NoSeeds("distance transform needs at least one seed")
    if (
        seeds[:, 0].min() < 0
        or seeds[:, 0].max() >= height
        or seeds[:, 1].min() < 0
        or seeds[:, 1].max() >= width
    ):
        raise ValidationError("seed outside the image")
    is_seed = np.zeros((height, width), dtype=bool)
    is_seed[seeds[:, 0], seeds[:, 1]] = True

    # column pass: distance in rows to the nearest seed of the same column
    big = height + width + 1
    down = np.full((height, width), big, dtype=np.int64)
    prev = np.full(width, big, dtype=np.int64)
    for r in range(height):
        prev = np.where(is_seed[r], 0, prev + 1)
        down[r] = prev
    up = np.full((height, width), big, dtype=np.int64)
    prev = np.full(width, big, dtype=np.int64)
    for r in range(height - 1, -1, -1):
        prev = np.where(is_seed[r], 0, prev + 1)
        up[r] = prev
    col_dist = np.minimum(down, up)
    g = np.where(col_dist < height, col_dist.astype(np.float64) ** 2, np.inf)

    sq = np.empty((height, width), dtype=np.float64)
    for r in range(height):
        sq[r] = _squared_edt_1d(g[r].tolist())
    return np.sqrt(sq)


def sample_field_bilinear(field: np.ndarray, u, v):
    """Bilinear lookup at real ``(u, v)``; coordinates are clamped to the border first."""
    field = np.asarray(field, dtype=np.float64)
    height, width = field.shape
    u = np.clip(np.asarray(u, dtype=np.float64), 0.0, width - 1)
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, height - 1)
    u0 = np.minimum(np.floor(u).astype(np.int64), max(width - 2, 0))
    v0 = np.minimum(np.floor(v).astype(np.int64), max(height - 2, 0))
    u1 = np.minimum(u0 + 1, width - 1)
    v1 = np.minimum(v0 + 1, height - 1)
    fu = u - u0
    fv = v - v0
    top = (1.0 - fu) * field[v0, u0] + fu * field[v0, u1]
    bottom = (1.0 - fu) * field[v1, u0] + fu * field[v1, u1]
    out = (1.0 - fv) * top + fv * bottom
    return float(out) if np.ndim(out) == 0 else out
