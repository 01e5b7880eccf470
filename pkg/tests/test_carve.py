import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvcarve import io
from mvcarve.carve import (
    BinaryGrid,
    GridSpec,
    OccupancyGrid,
    binarize,
    build_occupancy,
    cleanup,
    make_weights,
)
from mvcarve.errors import InvalidThreshold, InvalidWeight, LengthMismatch, SizeMismatch, ValidationError
from mvcarve.geometry import IDENTITY, quat_from_axis_angle, quat_to_matrix, random_quaternion

from oracles import brute_cleanup, brute_occupancy

Y90 = quat_from_axis_angle([0.0, 1.0, 0.0], math.pi / 2)


def random_silhouettes(rng, n, shape=(128, 128)):
    # blobby masks: a random disc per view
    rows, cols = np.mgrid[: shape[0], : shape[1]]
    sils = []
    for _ in range(n):
        r0, c0 = rng.uniform(40, 88, size=2)
        rad = rng.uniform(20, 50)
        sils.append(((rows - r0) ** 2 + (cols - c0) ** 2 < rad**2).astype(np.uint8))
    return sils


# --- weights -------------------------------------------------------------------------


def test_make_weights_examples():
    assert make_weights(5, 0.4).tolist() == [0.4, 0.15, 0.15, 0.15, 0.15]
    assert make_weights(5, 0.4).sum() == 1.0
    assert make_weights(1, 0.4).tolist() == [1.0]
    assert np.allclose(make_weights(4, 0.25), 0.25)


@pytest.mark.parametrize("n, w1", [(5, 0.1), (3, 0.0), (3, 1.0), (0, 0.5)])
def test_make_weights_rejects(n, w1):
    with pytest.raises(InvalidWeight):
        make_weights(n, w1)


# --- occupancy ------------------------------------------------------------------------


def test_full_foreground_gives_one(cam):
    rng = np.random.default_rng(0)
    sils = [np.ones((128, 128), np.uint8)] * 5
    grid = build_occupancy(sils, random_quaternion(rng, 5), cam, GridSpec(8), make_weights(5, 0.4))
    # the whole 1.1-wide grid stays inside the frustum of every view
    assert np.all(grid.values == 1.0)


def test_two_view_hand_scene(cam):
    full = np.ones((128, 128), np.uint8)
    left = np.zeros((128, 128), np.uint8)
    left[:, :64] = 1
    grid = build_occupancy([full, left], [IDENTITY, Y90], cam, GridSpec(4))
    # the second camera looks along -x; its left half is z < 0 in the reference frame
    expected = np.empty((4, 4, 4))
    expected[:, :, :2] = 1.0
    expected[:, :, 2:] = 0.5
    assert np.array_equal(grid.values, expected)
    brute = brute_occupancy([full, left], [np.eye(3), quat_to_matrix(Y90)], [0.5, 0.5], 4, 1.1)
    assert np.array_equal(grid.values, brute)


def test_matches_brute_force_on_8_cubed(cam):
    rng = np.random.default_rng(3)
    rot = random_quaternion(rng, 3)
    sils = random_silhouettes(rng, 3)
    w = make_weights(3, 0.5)
    grid = build_occupancy(sils, rot, cam, GridSpec(8), w)
    brute = brute_occupancy(sils, [quat_to_matrix(q) for q in rot], w, 8, 1.1)
    assert np.array_equal(grid.values, brute)


def test_single_view_is_back_projection(cam):
    rng = np.random.default_rng(4)
    q = random_quaternion(rng)
    sil = random_silhouettes(rng, 1)[0]
    grid = build_occupancy([sil], [q], cam, GridSpec(8), make_weights(1, 0.4))
    brute = brute_occupancy([sil], [quat_to_matrix(q)], [1.0], 8, 1.1)
    assert np.array_equal(grid.values, brute)
    assert set(np.unique(grid.values)) <= {0.0, 1.0}


def test_values_are_partial_sums(cam):
    rng = np.random.default_rng(5)
    w = make_weights(5, 0.4)
    grid = build_occupancy(random_silhouettes(rng, 5), random_quaternion(rng, 5), cam, GridSpec(10), w)
    sums = set()
    for mask in itertools.product([0, 1], repeat=5):
        acc = 0.0
        for m, wk in zip(mask, w):
            if m:
                acc += wk
        sums.add(acc / w.sum())
    assert set(np.unique(grid.values)) <= sums


def test_adding_foreground_never_lowers_occupancy(cam):
    rng = np.random.default_rng(6)
    rot = random_quaternion(rng, 3)
    sils = random_silhouettes(rng, 3)
    base = build_occupancy(sils, rot, cam, GridSpec(10), make_weights(3, 0.4)).values
    grown = [s.copy() for s in sils]
    grown[1][30:90, 30:90] = 1
    more = build_occupancy(grown, rot, cam, GridSpec(10), make_weights(3, 0.4)).values
    assert np.all(more >= base)


def test_permuting_equal_weight_views_is_bit_identical(cam):
    rng = np.random.default_rng(7)
    rot = random_quaternion(rng, 5)
    sils = random_silhouettes(rng, 5)
    w = make_weights(5, 0.4)
    a = build_occupancy(sils, rot, cam, GridSpec(8), w).values
    order = [0, 3, 1, 4, 2]
    b = build_occupancy([sils[k] for k in order], rot[order], cam, GridSpec(8), w).values
    assert np.array_equal(a, b)


def test_occupancy_errors(cam):
    sil = np.ones((128, 128), np.uint8)
    with pytest.raises(LengthMismatch):
        build_occupancy([sil, sil], [IDENTITY], cam)
    with pytest.raises(LengthMismatch):
        build_occupancy([sil], [IDENTITY], cam, weights=[0.5, 0.5])
    with pytest.raises(SizeMismatch):
        build_occupancy([np.ones((64, 64))], [IDENTITY], cam)
    with pytest.raises(ValidationError):
        GridSpec(1)


def test_grid_geometry():
    spec = GridSpec(4, (1.0, 0.0, 0.0), 2.0)
    assert spec.voxel_size == 0.5
    assert np.allclose(spec.index_to_world([0, 0, 0]), [0.25, -0.75, -0.75])
    assert spec.world_to_index([[1.0, 0.0, 0.0]]).tolist() == [[2, 2, 2]]
    c = spec.centroids()
    assert c.shape == (4, 4, 4, 3)
    assert np.allclose(c[3, 1, 2], spec.index_to_world([3, 1, 2]))


# --- binarize --------------------------------------------------------------------------


def test_binarize_boundaries():
    values = np.array([0.0, 0.84999, 0.85, 0.9, 1.0]).reshape(5, 1, 1)
    spec = GridSpec(2)
    out = binarize(OccupancyGrid(spec, values), 0.85)
    assert out.bits.ravel().tolist() == [False, False, True, True, True]
    for tau in (0.0, 1.0, -0.1):
        with pytest.raises(InvalidThreshold):
            binarize(OccupancyGrid(spec, values), tau)


def test_default_threshold_needs_reference_and_three_others():
    w = make_weights(5, 0.4)
    for mask in itertools.product([0, 1], repeat=5):
        acc = 0.0
        for m, wk in zip(mask, w):
            if m:
                acc += wk
        passes = acc / w.sum() >= 0.85
        assert passes == (mask[0] == 1 and sum(mask[1:]) >= 3), mask


# --- cleanup ---------------------------------------------------------------------------------


def _bits(shape, coords):
    b = np.zeros(shape, dtype=bool)
    for c in coords:
        b[c] = True
    return b


def test_cleanup_cases():
    spec = GridSpec(6)
    assert cleanup(BinaryGrid(spec, np.zeros(spec.shape, bool))).count() == 0
    single = _bits(spec.shape, [(2, 3, 4)])
    assert np.array_equal(cleanup(BinaryGrid(spec, single)).bits, single)
    # a hollow 3x3x3 block gets its centre filled
    block = np.zeros(spec.shape, bool)
    block[1:4, 1:4, 1:4] = True
    hollow = block.copy()
    hollow[2, 2, 2] = False
    assert np.array_equal(cleanup(BinaryGrid(spec, hollow)).bits, block)
    # the smaller of two far-apart pieces is dropped
    two = _bits(spec.shape, [(0, 0, 0), (0, 0, 1), (5, 5, 5), (5, 5, 4), (5, 4, 5)])
    kept = cleanup(BinaryGrid(spec, two)).bits
    assert kept.sum() == 3 and kept[5, 5, 5]
    # voxels on the grid border survive
    full = np.ones(spec.shape, bool)
    assert cleanup(BinaryGrid(spec, full)).count() == full.size


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 0.7))
def test_cleanup_matches_brute_force(seed, density):
    bits = np.random.default_rng(seed).random((5, 5, 5)) < density
    spec = GridSpec(5)
    assert np.array_equal(cleanup(BinaryGrid(spec, bits)).bits, brute_cleanup(bits))


# --- file format -----------------------------------------------------------------------------


def test_voxg_round_trip(tmp_path, rng):
    spec = GridSpec(5, (0.1, -0.2, 0.3), 1.1)
    occ = OccupancyGrid(spec, rng.random(spec.shape).astype(np.float32).astype(np.float64))
    io.write_voxg(tmp_path / "a.voxg", occ)
    back = io.read_voxg(tmp_path / "a.voxg")
    assert back.spec == spec and np.array_equal(back.values, occ.values)
    bits = BinaryGrid(spec, rng.random(spec.shape) < 0.5)
    io.write_voxg(tmp_path / "b.voxg", bits)
    back = io.read_voxg(tmp_path / "b.voxg")
    assert back.spec == spec and np.array_equal(back.bits, bits.bits)
    assert (tmp_path / "b.voxg").read_bytes() == io.encode_voxg(back)


def test_voxg_layout():
    spec = GridSpec(2)
    bits = np.zeros(spec.shape, bool)
    bits[1, 0, 0] = True  # x varies fastest, so this is bit 1
    raw = io.encode_voxg(BinaryGrid(spec, bits))
    assert raw == b"VOXG1 2 0.0 0.0 0.0 1.1\nBIT\n\x02"
    with pytest.raises(ValidationError):
        io.decode_voxg(raw[:-1])
    with pytest.raises(ValidationError):
        io.decode_voxg(b"BINVOX 2\n")
