import math

import numpy as np
import pytest

from mvcarve import io
from mvcarve.errors import DuplicateEdge, EmptyInput, IncompleteGraph, IndexOutOfRange, LengthMismatch
from mvcarve.geometry import (
    IDENTITY,
    geodesic_angle,
    quat_conjugate,
    quat_from_axis_angle,
    quat_multiply,
    random_quaternion,
)
from mvcarve.posegraph import (
    AbsolutePoseSet,
    RectifyOptions,
    align_to_reference,
    build_graph,
    expected_pairs,
    initialize_absolute,
    objective,
    pose_metrics,
    rectify,
    relative_from_absolute,
    residuals,
    residuals_and_jacobian,
    retract,
)

from oracles import quat_matrix


def consistent_graph(rotations):
    n = len(rotations)
    return build_graph(n, [(i, j, quat_multiply(rotations[j], quat_conjugate(rotations[i]))) for i, j in expected_pairs(n)])


def noisy_graph(rotations, deg, rng):
    n = len(rotations)
    preds = []
    for i, j in expected_pairs(n):
        q = quat_multiply(rotations[j], quat_conjugate(rotations[i]))
        preds.append((i, j, quat_multiply(quat_from_axis_angle(rng.normal(size=3), math.radians(rng.uniform(0, deg))), q)))
    return build_graph(n, preds)


def brute_objective(graph, rotations):
    total = 0.0
    for (i, j), q in graph.edges.items():
        d = quat_matrix(rotations[j]) @ quat_matrix(rotations[i]).T - quat_matrix(q)
        total += sum(x * x for x in d.ravel())
    return total


# --- graph construction --------------------------------------------------------------


def test_graph_sizes():
    for n in (2, 5):
        g = consistent_graph(random_quaternion(np.random.default_rng(n), n))
        assert len(g.edges) == n * (n - 1)


def test_incomplete_graph_names_missing_pair():
    preds = [(i, j, IDENTITY) for i, j in expected_pairs(3) if (i, j) != (2, 1)]
    with pytest.raises(IncompleteGraph, match=r"\(2, 1\)"):
        build_graph(3, preds)


def test_duplicate_edge():
    preds = [(i, j, IDENTITY) for i, j in expected_pairs(2)] + [(0, 1, IDENTITY)]
    with pytest.raises(DuplicateEdge):
        build_graph(2, preds)


def test_graph_json_round_trip(rng):
    g = noisy_graph(random_quaternion(rng, 4), 10, rng)
    back = io.graph_from_dict(io.graph_to_dict(g))
    assert back.pairs() == g.pairs()
    for p in g.pairs():
        assert np.allclose(back[p], g[p], atol=1e-15)


# --- initialization and rectification ------------------------------------------------


def test_initialization_on_consistent_graph(rng):
    truth = random_quaternion(rng, 4)
    start = initialize_absolute(consistent_graph(truth))
    aligned = align_to_reference(truth)
    assert np.array_equal(start.rotations[0], IDENTITY)
    assert all(geodesic_angle(a, b) < 1e-7 for a, b in zip(start.rotations, aligned))
    assert start.residual < 1e-25


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_noise_free_recovery(n):
    rng = np.random.default_rng(100 + n)
    truth = random_quaternion(rng, n)
    poses = rectify(consistent_graph(truth))
    aligned = align_to_reference(truth)
    assert np.array_equal(poses.rotations[0], IDENTITY)
    assert max(geodesic_angle(a, b) for a, b in zip(poses.rotations, aligned)) < 1e-6
    assert poses.residual < 1e-18


def test_two_views_take_the_forward_edge(rng):
    q = random_quaternion(rng)
    g = build_graph(2, [(0, 1, q), (1, 0, quat_conjugate(q))])
    poses = rectify(g)
    assert geodesic_angle(poses.rotations[1], q) < 1e-9
    assert poses.residual < 1e-20


def test_two_views_inconsistent_edges_meet_halfway(rng):
    # forward and backward edges disagree by 10 degrees; the optimum splits it
    q = random_quaternion(rng)
    tilt = quat_from_axis_angle([0.0, 1.0, 0.0], math.radians(10))
    g = build_graph(2, [(0, 1, q), (1, 0, quat_conjugate(quat_multiply(tilt, q)))])
    poses = rectify(g)
    assert math.degrees(geodesic_angle(poses.rotations[1], q)) == pytest.approx(5.0, abs=1e-6)


def test_noisy_rectification_improves_objective(rng):
    truth = random_quaternion(rng, 6)
    g = noisy_graph(truth, 15, rng)
    start = initialize_absolute(g)
    poses = rectify(g)
    assert poses.residual <= start.residual
    assert poses.history[0] == start.residual
    assert all(b <= a for a, b in zip(poses.history, poses.history[1:]))
    assert poses.residual == pytest.approx(objective(g, poses.rotations), rel=1e-12)


def test_rectify_respects_max_iterations(rng):
    g = noisy_graph(random_quaternion(rng, 5), 20, rng)
    assert rectify(g, RectifyOptions(max_iterations=2)).iterations <= 2


def test_objective_matches_brute_force(rng):
    for _ in range(10):
        truth = random_quaternion(rng, 4)
        g = noisy_graph(truth, 30, rng)
        rot = random_quaternion(rng, 4)
        assert objective(g, rot) == pytest.approx(brute_objective(g, rot), abs=1e-10)


def test_jacobian_matches_finite_differences(rng):
    g = noisy_graph(random_quaternion(rng, 4), 20, rng)
    rot = random_quaternion(rng, 4)
    rot[0] = IDENTITY
    r, jac = residuals_and_jacobian(g, rot)
    h = 1e-6
    num = np.empty_like(jac)
    for k in range(jac.shape[1]):
        e = np.zeros(jac.shape[1])
        e[k] = h
        num[:, k] = (residuals(g, retract(rot, e)) - residuals(g, retract(rot, -e))) / (2 * h)
    assert np.linalg.norm(num - jac) / np.linalg.norm(jac) < 1e-5


# --- relatives from absolutes ------------------------------------------------------------


def _poses(rotations):
    return AbsolutePoseSet(np.asarray(rotations), 0.0, 0)


def test_relative_identity_and_range(rng):
    p = _poses(random_quaternion(rng, 3))
    assert np.array_equal(relative_from_absolute(p, 1, 1), IDENTITY)
    with pytest.raises(IndexOutOfRange):
        relative_from_absolute(p, 0, 3)


def test_relative_composition_and_exact_inverse(rng):
    p = _poses(random_quaternion(rng, 4))
    for i, j, k in [(0, 1, 2), (3, 1, 0), (2, 3, 1)]:
        composed = quat_multiply(relative_from_absolute(p, j, k), relative_from_absolute(p, i, j))
        assert geodesic_angle(composed, relative_from_absolute(p, i, k)) < 1e-7
    for i, j in expected_pairs(4):
        assert np.array_equal(relative_from_absolute(p, j, i), quat_conjugate(relative_from_absolute(p, i, j)))


def test_gauge_invariance(rng):
    # right-multiplying every absolute by the same rotation changes no relative
    rot = random_quaternion(rng, 4)
    g = random_quaternion(rng)
    moved = _poses(quat_multiply(rot, g))
    for i, j in expected_pairs(4):
        assert geodesic_angle(relative_from_absolute(moved, i, j), relative_from_absolute(_poses(rot), i, j)) < 1e-7


# --- pose metrics ---------------------------------------------------------------------------


def _with_errors(degs, rng):
    truth = random_quaternion(rng, len(degs))
    pred = [quat_multiply(quat_from_axis_angle(rng.normal(size=3), math.radians(d)), t) for d, t in zip(degs, truth)]
    return pred, truth


def test_pose_metrics_example(rng):
    acc, med = pose_metrics(*_with_errors([5.0, 10.0, 40.0], rng))
    assert acc == pytest.approx(2 / 3)
    assert med == pytest.approx(10.0, abs=1e-6)


def test_pose_metrics_perfect_and_errors(rng):
    t = random_quaternion(rng, 3)
    assert pose_metrics(t, -t) == (1.0, 0.0)
    with pytest.raises(EmptyInput):
        pose_metrics(np.zeros((0, 4)), np.zeros((0, 4)))
    with pytest.raises(LengthMismatch):
        pose_metrics(t, t[:2])


def test_pose_metrics_even_count_uses_lower_median(rng):
    acc, med = pose_metrics(*_with_errors([1.0, 2.0, 3.0, 50.0], rng))
    assert acc == 0.75
    assert med == pytest.approx(2.0, abs=1e-6)


def test_pose_metrics_uniform_errors(rng):
    acc, med = pose_metrics(*_with_errors(rng.uniform(0, 60, 1000), rng))
    assert acc == pytest.approx(0.5, abs=0.05)
    assert med == pytest.approx(30.0, abs=3.0)
