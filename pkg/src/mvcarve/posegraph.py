"""Relative-pose graphs and their rectification into absolute rotations.

Views are indexed from 0 and view 0 is the reference: its absolute rotation
is pinned to the identity. Edge ``(i, j)`` holds the predicted rotation
taking view ``i``'s frame to view ``j``'s, so ground truth is
``q_j * q_i^-1``.

Rectification minimizes

    sum_{i != j} || R(q_j) R(q_i)^T - R(q~_ij) ||_F^2

over the non-reference rotations with Levenberg-Marquardt. Each rotation is
updated on the left, ``q_k <- exp(delta_k) * q_k``, so the unknowns live in
a 3-dof tangent space per view.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DuplicateEdge, EmptyInput, IncompleteGraph, IndexOutOfRange, LengthMismatch, ValidationError
from .geometry import IDENTITY, as_quat, geodesic_angle, quat_conjugate, quat_exp, quat_multiply, quat_normalize, quat_to_matrix

# Stop once the objective is this small; nothing left to fit.
_NEGLIGIBLE_OBJECTIVE = 1e-28
_UNIT_TOLERANCE = 1e-12
_MAX_DAMPING = 1e16


@dataclass(frozen=True)
class RelativePoseGraph:
    n_views: int
    edges: Mapping[tuple[int, int], np.ndarray]

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def __getitem__(self, pair: tuple[int, int]) -> np.ndarray:
        return self.edges[pair]


@dataclass(frozen=True)
class RectifyOptions:
    max_iterations: int = 100
    tolerance: float = 1e-12
    initial_damping: float = 1e-4

    def __post_init__(self):
        if self.max_iterations <= 0 or self.tolerance <= 0 or self.initial_damping <= 0:
            raise ValidationError("rectify options must all be positive")


@dataclass(frozen=True)
class AbsolutePoseSet:
    rotations: np.ndarray  # (n, 4); rotations[0] is the identity
    residual: float
    iterations: int
    # objective after initialization and after every accepted step
    history: tuple[float, ...] = field(default=(), compare=False)

    @property
    def n_views(self) -> int:
        return len(self.rotations)


def expected_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def build_graph(n: int, predictions: Iterable[tuple[int, int, object]]) -> RelativePoseGraph:
    """Collect predicted relatives into a complete, bidirectional graph."""
    if n < 2:
        raise ValidationError("a pose graph needs at least two views")
    edges: dict[tuple[int, int], np.ndarray] = {}
    for i, j, q in predictions:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ValidationError(f"invalid edge ({i}, {j}) for {n} views")
        if (i, j) in edges:
            raise DuplicateEdge(f"edge ({i}, {j}) given twice")
        q = as_quat(q).copy()
        if abs(np.linalg.norm(q) - 1.0) > _UNIT_TOLERANCE:
            # already-unit inputs are stored verbatim so exact values survive
            q = quat_normalize(q)
        q.setflags(write=False)
        edges[(i, j)] = q
    missing = set(expected_pairs(n)) - set(edges)
    if missing:
        raise IncompleteGraph(missing)
    return RelativePoseGraph(n, MappingProxyType(edges))


def _check_complete(graph: RelativePoseGraph) -> None:
    missing = set(expected_pairs(graph.n_views)) - set(graph.edges)
    if missing:
        raise IncompleteGraph(missing)


def _edge_arrays(graph: RelativePoseGraph):
    pairs = graph.pairs()
    src = np.array([p[0] for p in pairs])
    dst = np.array([p[1] for p in pairs])
    measured = np.stack([quat_to_matrix(graph[p]) for p in pairs])
    return src, dst, measured


def _matrices(rotations: np.ndarray) -> np.ndarray:
    return np.stack([quat_to_matrix(q) for q in rotations])


def residuals(graph: RelativePoseGraph, rotations) -> np.ndarray:
    """Stacked ``R_j R_i^T - R~_ij`` entries, edges in sorted order, shape ``(9 E,)``."""
    src, dst, measured = _edge_arrays(graph)
    mats = _matrices(np.asarray(rotations, dtype=np.float64))
    pred = mats[dst] @ np.transpose(mats[src], (0, 2, 1))
    return (pred - measured).reshape(-1)


def objective(graph: RelativePoseGraph, rotations) -> float:
    r = residuals(graph, rotations)
    return float(r @ r)


_GENERATORS = np.array(
    [
        [[0, 0, 0], [0, 0, -1], [0, 1, 0]],
        [[0, 0, 1], [0, 0, 0], [-1, 0, 0]],
        [[0, -1, 0], [1, 0, 0], [0, 0, 0]],
    ],
    dtype=np.float64,
)


def residuals_and_jacobian(graph: RelativePoseGraph, rotations) -> tuple[np.ndarray, np.ndarray]:
    """Residual vector and its Jacobian w.r.t. the left tangent updates of views 1..n-1."""
    rotations = np.asarray(rotations, dtype=np.float64)
    n = graph.n_views
    src, dst, measured = _edge_arrays(graph)
    mats = _matrices(rotations)
    pred = mats[dst] @ np.transpose(mats[src], (0, 2, 1))
    r = (pred - measured).reshape(-1)
    jac = np.zeros((9 * len(src), 3 * (n - 1)))
    for e, (i, j) in enumerate(zip(src, dst)):
        rows = slice(9 * e, 9 * e + 9)
        m = pred[e]
        if j > 0:
            # d/d delta_j of Exp(delta) R_j R_i^T
            jac[rows, 3 * (j - 1) : 3 * j] = np.stack([(g @ m).ravel() for g in _GENERATORS], axis=1)
        if i > 0:
            # d/d delta_i of R_j (Exp(delta) R_i)^T = R_j R_i^T Exp(-delta)
            jac[rows, 3 * (i - 1) : 3 * i] = np.stack([(-m @ g).ravel() for g in _GENERATORS], axis=1)
    return r, jac


def retract(rotations, delta) -> np.ndarray:
    """Apply tangent updates ``delta`` (``3 (n-1)`` values) to views 1..n-1."""
    rotations = np.array(rotations, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64).reshape(-1, 3)
    for k, d in enumerate(delta, start=1):
        rotations[k] = quat_multiply(quat_exp(d), rotations[k])
    rotations[0] = IDENTITY
    return rotations


def initialize_absolute(graph: RelativePoseGraph) -> AbsolutePoseSet:
    """Star-tree start: view 0 is the identity, view i takes edge (0, i) verbatim."""
    _check_complete(graph)
    rotations = np.empty((graph.n_views, 4))
    rotations[0] = IDENTITY
    for i in range(1, graph.n_views):
        rotations[i] = graph[(0, i)]
    f = objective(graph, rotations)
    return AbsolutePoseSet(rotations, f, 0, (f,))


def rectify(graph: RelativePoseGraph, opts: RectifyOptions = RectifyOptions()) -> AbsolutePoseSet:
    """Levenberg-Marquardt rectification of a complete relative-pose graph.

    Damping is multiplied by 10 after a rejected step and halved after an
    accepted one. Stops when the relative decrease of an accepted step drops
    below ``opts.tolerance``, after ``opts.max_iterations`` attempted steps,
    or when the damping overflows.
    """
    start = initialize_absolute(graph)
    rotations = start.rotations.copy()
    f = start.residual
    history = [f]
    lam = opts.initial_damping
    iterations = 0
    while iterations < opts.max_iterations and f > _NEGLIGIBLE_OBJECTIVE:
        iterations += 1
        r, jac = residuals_and_jacobian(graph, rotations)
        grad = jac.T @ r
        hess = jac.T @ jac
        try:
            step = -cho_solve(cho_factor(hess + lam * np.eye(len(grad))), grad)
        except LinAlgError:
            step = None
        if step is not None:
            candidate = retract(rotations, step)
            f_new = objective(graph, candidate)
        if step is not None and f_new < f:
            decrease = (f - f_new) / f
            rotations, f = candidate, f_new
            history.append(f)
            lam *= 0.5
            if decrease < opts.tolerance:
                break
        else:
            lam *= 10.0
            if lam > _MAX_DAMPING:
                break
    rotations[0] = IDENTITY
    return AbsolutePoseSet(rotations, f, iterations, tuple(history))


def relative_from_absolute(poses: AbsolutePoseSet, i: int, j: int) -> np.ndarray:
    """Rectified rotation from view ``i`` to view ``j``, ``q_j * q_i^-1``.

    Computed once per unordered pair so that ``(j, i)`` is exactly the
    conjugate of ``(i, j)``.
    """
    n = poses.n_views
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"view index out of range for {n} views: ({i}, {j})")
    if i == j:
        return IDENTITY.copy()
    lo, hi = min(i, j), max(i, j)
    rel = quat_multiply(poses.rotations[hi], quat_conjugate(poses.rotations[lo]))
    return rel if i == lo else quat_conjugate(rel)


def relative_rotations(poses: AbsolutePoseSet) -> dict[tuple[int, int], np.ndarray]:
    return {(i, j): relative_from_absolute(poses, i, j) for i, j in expected_pairs(poses.n_views)}


def align_to_reference(rotations, reference: int = 0) -> np.ndarray:
    """Express absolute rotations relative to ``reference`` (gauge alignment)."""
    rotations = np.asarray(rotations, dtype=np.float64)
    inv_ref = quat_conjugate(rotations[reference])
    out = np.stack([quat_multiply(q, inv_ref) for q in rotations])
    out[reference] = IDENTITY
    return out


def pose_metrics(predicted, truth, threshold_deg: float = 30.0) -> tuple[float, float]:
    """Accuracy (fraction of errors below ``threshold_deg``) and lower-median error in degrees."""
    predicted = np.asarray(predicted, dtype=np.float64).reshape(-1, 4)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1, 4)
    if len(predicted) == 0 or len(truth) == 0:
        raise EmptyInput("pose metrics need at least one pair")
    if len(predicted) != len(truth):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(truth)} ground-truth poses")
    errors = np.degrees(np.atleast_1d(geodesic_angle(predicted, truth)))
    return pose_metrics_from_errors(errors, threshold_deg)


def pose_metrics_from_errors(errors_deg, threshold_deg: float = 30.0) -> tuple[float, float]:
    errors = np.sort(np.asarray(errors_deg, dtype=np.float64))
    if len(errors) == 0:
        raise EmptyInput("pose metrics need at least one pair")
    accuracy = float(np.count_nonzero(errors < threshold_deg)) / len(errors)
    return accuracy, float(errors[(len(errors) - 1) // 2])


def lower_median(values) -> float:
    values = np.sort(np.asarray(values, dtype=np.float64))
    return float(values[(len(values) - 1) // 2])
