"""Quaternion algebra, pinhole projection and view sampling.

Conventions used everywhere in the package:

* quaternions are float64 arrays ``[w, x, y, z]`` (scalar first),
  composed with the Hamilton product;
* ``quat_to_matrix(q) @ p`` rotates ``p`` exactly like the sandwich
  ``q p q^-1``, so ``R(a b) = R(a) R(b)``;
* an absolute view rotation maps object coordinates into that camera's
  frame, the camera then adds the fixed translation ``t*``.

Functions accept anything ``np.asarray`` understands and most of them
broadcast over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDepth, ValidationError

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

# Smallest camera-frame depth accepted by ``project``.
MIN_DEPTH = 1e-6


def as_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-1] != 4:
        raise ValidationError(f"quaternion must have 4 components, got shape {q.shape}")
    return q


def quat_normalize(q) -> np.ndarray:
    q = as_quat(q)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise ValidationError("cannot normalize a zero quaternion")
    return q / norm


def quat_multiply(a, b) -> np.ndarray:
    """Hamilton product ``a * b``, re-normalized."""
    a = as_quat(a)
    b = as_quat(b)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    out = np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )
    return quat_normalize(out)


def quat_conjugate(q) -> np.ndarray:
    q = as_quat(q)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_rotate_point(q, p) -> np.ndarray:
    """Rotate point(s) ``p`` (shape ``(..., 3)``) by a single unit quaternion."""
    q = as_quat(q)
    p = np.asarray(p, dtype=np.float64)
    w = q[0]
    u = q[1:]
    # q p q^-1 expanded: p + 2w (u x p) + 2 u x (u x p)
    t = 2.0 * np.cross(u, p)
    return p + w * t + np.cross(u, t)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(m) -> np.ndarray:
    """Inverse of :func:`quat_to_matrix`, returned with ``w >= 0``."""
    m = np.asarray(m, dtype=np.float64)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0:
        s = 2.0 * math.sqrt(trace + 1.0)
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    q = quat_normalize(q)
    return -q if q[0] < 0 else q


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        raise ValidationError("rotation axis must be non-zero")
    half = 0.5 * angle
    return np.concatenate([[math.cos(half)], math.sin(half) * axis / norm])


def quat_exp(omega) -> np.ndarray:
    """Quaternion of the rotation vector ``omega`` (axis * angle)."""
    omega = np.asarray(omega, dtype=np.float64)
    theta = float(np.linalg.norm(omega))
    if theta < 1e-12:
        return quat_normalize(np.concatenate([[1.0], 0.5 * omega]))
    return np.concatenate([[math.cos(0.5 * theta)], math.sin(0.5 * theta) * omega / theta])


def geodesic_angle(a, b) -> np.ndarray | float:
    """Rotation angle of ``a * b^-1`` in radians, in ``[0, pi]``.

    Uses ``|Re(.)|`` so that ``q`` and ``-q`` are the same rotation.
    Broadcasts over leading axes.
    """
    a = quat_normalize(a)
    b = quat_normalize(b)
    # Re(a * conj(b)) is the 4-vector dot product.
    dot = np.abs(np.sum(a * b, axis=-1))
    angle = 2.0 * np.arccos(np.clip(dot, 0.0, 1.0))
    return float(angle) if np.ndim(angle) == 0 else angle


def random_quaternion(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform rotation(s) from three uniform scalars (Shoemake's subgroup method)."""
    shape = () if size is None else (size,)
    u1, u2, u3 = rng.random((3, *shape))
    a = np.sqrt(1.0 - u1)
    b = np.sqrt(u1)
    q = np.stack(
        [
            b * np.cos(2 * np.pi * u3),
            a * np.sin(2 * np.pi * u2),
            a * np.cos(2 * np.pi * u2),
            b * np.sin(2 * np.pi * u3),
        ],
        axis=-1,
    )
    return quat_normalize(q)


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera with a fixed translation ``t*``.

    Pixel ``(row, col)`` has its centre at ``(u, v) = (col, row)``.
    """

    focal_length: float = 140.0
    principal_point: tuple[float, float] = (64.0, 64.0)
    image_size: tuple[int, int] = (128, 128)  # (width, height)
    translation: tuple[float, float, float] = (0.0, 0.0, 2.2)
    _t: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.focal_length > 0:
            raise ValidationError("focal_length must be positive")
        width, height = self.image_size
        if width < 8 or height < 8:
            raise ValidationError("image_size components must be >= 8")
        if not self.translation[2] > 0:
            raise ValidationError("camera translation needs a positive depth component")
        object.__setattr__(self, "image_size", (int(width), int(height)))
        object.__setattr__(self, "principal_point", tuple(float(c) for c in self.principal_point))
        object.__setattr__(self, "translation", tuple(float(c) for c in self.translation))
        object.__setattr__(self, "_t", np.array(self.translation))

    @property
    def width(self) -> int:
        return self.image_size[0]

    @property
    def height(self) -> int:
        return self.image_size[1]

    @property
    def t(self) -> np.ndarray:
        return self._t.copy()

    @classmethod
    def with_overrides(cls, overrides: dict | None) -> "CameraModel":
        if not overrides:
            return cls()
        known = {"focal_length", "principal_point", "image_size", "translation"}
        unknown = set(overrides) - known
        if unknown:
            raise ValidationError(f"unknown camera fields: {sorted(unknown)}")
        kwargs = dict(overrides)
        for key in ("principal_point", "image_size", "translation"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        if "image_size" in kwargs and "principal_point" not in kwargs:
            w, h = kwargs["image_size"]
            kwargs["principal_point"] = (w / 2.0, h / 2.0)
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "focal_length": self.focal_length,
            "principal_point": list(self.principal_point),
            "image_size": list(self.image_size),
            "translation": list(self.translation),
        }

    def to_camera_frame(self, q, points) -> np.ndarray:
        """Rotate object points by ``q`` and add ``t*``."""
        return quat_rotate_point(q, points) + self._t

    def unproject(self, u, v, depth) -> np.ndarray:
        cx, cy = self.principal_point
        depth = np.asarray(depth, dtype=np.float64)
        x = (np.asarray(u, dtype=np.float64) - cx) * depth / self.focal_length
        y = (np.asarray(v, dtype=np.float64) - cy) * depth / self.focal_length
        return np.stack(np.broadcast_arrays(x, y, depth), axis=-1)


def project(cam: CameraModel, p) -> np.ndarray:
    """Pinhole projection of camera-frame point(s) to real-valued ``(u, v)``.

    Raises DegenerateDepth if any depth is at or below ``MIN_DEPTH``.
    """
    p = np.asarray(p, dtype=np.float64)
    z = p[..., 2]
    if np.any(z <= MIN_DEPTH):
        raise DegenerateDepth(f"point depth {float(np.min(z))} is not in front of the camera")
    cx, cy = cam.principal_point
    u = cam.focal_length * p[..., 0] / z + cx
    v = cam.focal_length * p[..., 1] / z + cy
    return np.stack([u, v], axis=-1)


@dataclass(frozen=True)
class ViewRotation:
    azimuth: float  # degrees, [0, 360)
    elevation: float  # degrees, [-90, 90]

    def __post_init__(self):
        if not 0.0 <= self.azimuth < 360.0:
            raise ValidationError(f"azimuth {self.azimuth} outside [0, 360)")
        if not -90.0 <= self.elevation <= 90.0:
            raise ValidationError(f"elevation {self.elevation} outside [-90, 90]")


def view_rotation_to_quat(view: ViewRotation) -> np.ndarray:
    """Object-to-camera rotation: azimuth about y, then elevation about x."""
    q_az = quat_from_axis_angle([0.0, 1.0, 0.0], math.radians(view.azimuth))
    q_el = quat_from_axis_angle([1.0, 0.0, 0.0], math.radians(view.elevation))
    return quat_multiply(q_el, q_az)


def sample_view_rotations(
    rng: np.random.Generator,
    n: int,
    azimuth_range=(0.0, 360.0),
    elevation_range=(-20.0, 40.0),
) -> list[ViewRotation]:
    az_lo, az_hi = azimuth_range
    el_lo, el_hi = elevation_range
    views = []
    for _ in range(n):
        az = float(rng.uniform(az_lo, az_hi)) % 360.0
        el = float(rng.uniform(el_lo, el_hi)) if el_hi > el_lo else float(el_lo)
        views.append(ViewRotation(az, el))
    return views
