"""Triangle meshes: container, normalization and a few primitive solids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .errors import EmptyMesh, ValidationError
from .geometry import quat_rotate_point


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int64

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise ValidationError("face index out of range")
        if np.any(
            (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
        ):
            raise ValidationError("degenerate face with repeated vertex index")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)

    @property
    def triangles(self) -> np.ndarray:
        """Corner coordinates, shape ``(F, 3, 3)``."""
        return self.vertices[self.faces]

    def rotated(self, q) -> "TriangleMesh":
        return TriangleMesh(quat_rotate_point(q, self.vertices), self.faces)

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=np.float64), self.faces)

    def face_areas(self) -> np.ndarray:
        tri = self.triangles
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)


def normalize_mesh(mesh: TriangleMesh) -> TriangleMesh:
    """Centre on the bounding-box midpoint and scale to a unit-diameter sphere."""
    if len(mesh.faces) == 0:
        raise EmptyMesh("mesh has no faces")
    used = mesh.vertices[np.unique(mesh.faces)]
    center = 0.5 * (used.min(axis=0) + used.max(axis=0))
    radius = np.linalg.norm(used - center, axis=1).max()
    if radius == 0.0:
        raise EmptyMesh("mesh has zero extent")
    return TriangleMesh((mesh.vertices - center) * (0.5 / radius), mesh.faces)


def cube(size: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    h = 0.5 * size
    corners = np.array(
        [[x, y, z] for x in (-h, h) for y in (-h, h) for z in (-h, h)], dtype=np.float64
    ) + np.asarray(center, dtype=np.float64)
    # corner index = 4*ix + 2*iy + iz
    faces = [
        (0, 1, 3), (0, 3, 2),  # x-
        (4, 6, 7), (4, 7, 5),  # x+
        (0, 4, 5), (0, 5, 1),  # y-
        (2, 3, 7), (2, 7, 6),  # y+
        (0, 2, 6), (0, 6, 4),  # z-
        (1, 5, 7), (1, 7, 3),  # z+
    ]
    return TriangleMesh(corners, faces)


def box(half_extents, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    unit = cube(2.0)
    return TriangleMesh(
        unit.vertices * np.asarray(half_extents, dtype=np.float64) + np.asarray(center, dtype=np.float64),
        unit.faces,
    )


def icosahedron(radius: float = 0.5) -> TriangleMesh:
    phi = (1.0 + 5.0 ** 0.5) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts *= radius / np.linalg.norm(verts[0])
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return TriangleMesh(verts, faces)


def icosphere(subdivisions: int = 2, radius: float = 0.5) -> TriangleMesh:
    base = icosahedron(1.0)
    verts = [tuple(v) for v in base.vertices]
    faces = [tuple(f) for f in base.faces]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = (np.asarray(verts[a]) + np.asarray(verts[b])) / 2.0
                verts.append(tuple(m / np.linalg.norm(m)))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return TriangleMesh(np.asarray(verts) * radius, faces)


def convex_hull(points) -> TriangleMesh:
    points = np.asarray(points, dtype=np.float64)
    hull = ConvexHull(points)
    return TriangleMesh(points, hull.simplices)


def prism(outline_xy, half_depth: float) -> TriangleMesh:
    """Extrude a convex 2-D outline (counter-clockwise, in x-y) symmetrically along z."""
    outline = np.asarray(outline_xy, dtype=np.float64)
    k = len(outline)
    front = np.column_stack([outline, np.full(k, half_depth)])
    back = np.column_stack([outline, np.full(k, -half_depth)])
    verts = np.vstack([front, back])
    faces = []
    for i in range(1, k - 1):
        faces.append((0, i, i + 1))
        faces.append((k, k + i + 1, k + i))
    for i in range(k):
        j = (i + 1) % k
        faces.append((i, k + i, k + j))
        faces.append((i, k + j, j))
    return TriangleMesh(verts, faces)


BUILTIN = {
    "cube": lambda: cube(1.0),
    "icosahedron": lambda: icosahedron(0.5),
    "icosphere": lambda: icosphere(2, 0.5),
    "wedge": lambda: prism([(-0.5, -0.3), (0.5, -0.3), (0.1, 0.4), (-0.5, 0.1)], 0.25),
}
