"""Relative-pose evaluation objectives: contour, angular and their weighted sum.

``q_star`` is the ground-truth relative rotation from a source view to a
target view and ``q_tilde`` the predicted one. These are plain evaluation
functions; nothing here is differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyContourSet, ValidationError
from .geometry import CameraModel, project, quat_conjugate, quat_multiply, quat_rotate_point
from .raster import sample_field_bilinear


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.1
    beta: float = 0.9

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValidationError("loss weights must be non-negative")
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ValidationError(f"alpha + beta must be 1, got {self.alpha + self.beta}")


def angular_loss(q_star, q_tilde) -> float:
    """``1 - |Re(q* q~^-1)|`` of the normalized product, i.e. ``1 - cos(theta / 2)``."""
    rel = quat_multiply(q_star, quat_conjugate(q_tilde))
    return float(1.0 - min(abs(rel[0]), 1.0))


def transform_contour_points(q_tilde, q_star, points, cam: CameraModel) -> np.ndarray:
    """Take target-view contour points back to the source view with ``q*``, then forward with ``q~``."""
    t = cam.t
    back = quat_rotate_point(quat_conjugate(q_star), np.asarray(points, dtype=np.float64) - t)
    return quat_rotate_point(q_tilde, back) + t


def contour_loss(
    q_tilde,
    q_star,
    d_t: np.ndarray,
    v_t,
    cam: CameraModel,
    normalize: bool = True,
) -> float:
    """Distance-field value at the re-projected contour points, averaged (or summed).

    ``v_t`` holds the target view's contour points in its camera frame (see
    :func:`mvcarve.raster.lift_contour_points`) and ``d_t`` the distance
    transform of that view's contour. Projections outside the image are
    clamped to the field border.
    """
    v_t = np.asarray(v_t, dtype=np.float64).reshape(-1, 3)
    if len(v_t) == 0:
        raise EmptyContourSet("contour point set is empty")
    moved = transform_contour_points(q_tilde, q_star, v_t, cam)
    uv = project(cam, moved)
    values = sample_field_bilinear(d_t, uv[:, 0], uv[:, 1])
    total = float(np.sum(values))
    return total / len(v_t) if normalize else total


def pose_loss(
    q_star,
    q_tilde,
    d_t: np.ndarray,
    v_t,
    cam: CameraModel,
    weights: LossWeights = LossWeights(),
) -> float:
    return weights.alpha * angular_loss(q_star, q_tilde) + weights.beta * contour_loss(
        q_tilde, q_star, d_t, v_t, cam
    )
