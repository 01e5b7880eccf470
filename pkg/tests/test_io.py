import numpy as np
import pytest

from mvcarve import io
from mvcarve.errors import MeshLoadError, ValidationError
from mvcarve.mesh import icosphere
from mvcarve.posegraph import AbsolutePoseSet


def test_pgm_round_trip(tmp_path, rng):
    sil = (rng.random((12, 17)) < 0.5).astype(np.uint8)
    io.write_pgm(tmp_path / "s.pgm", sil)
    raw = (tmp_path / "s.pgm").read_bytes()
    assert raw.startswith(b"P5\n17 12\n255\n")
    assert np.array_equal(io.read_pgm(tmp_path / "s.pgm"), sil)


def test_pgm_from_other_writers(tmp_path):
    # comments in the header and grey levels thresholded at 128
    body = bytes([0, 127, 128, 255, 200, 10])
    (tmp_path / "g.pgm").write_bytes(b"P5\n# made elsewhere\n3 2\n# max\n255\n" + body)
    assert io.read_pgm(tmp_path / "g.pgm").tolist() == [[0, 0, 1], [1, 1, 0]]
    (tmp_path / "bad.pgm").write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValidationError):
        io.read_pgm(tmp_path / "bad.pgm")


def test_obj_round_trip(tmp_path):
    mesh = icosphere(1)
    io.write_obj(tmp_path / "m.obj", mesh)
    back = io.read_obj(tmp_path / "m.obj")
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.faces, mesh.faces)


def test_obj_polygons_and_attributes(tmp_path):
    text = """# a unit square with texture coordinates
o square
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vt 0 0
vn 0 0 1
f 1/1/1 2/1/1 3/1/1 4/1/1
f -4 -3 -1
"""
    (tmp_path / "q.obj").write_text(text)
    mesh = io.read_obj(tmp_path / "q.obj")
    assert mesh.faces.tolist() == [[0, 1, 2], [0, 2, 3], [0, 1, 3]]


@pytest.mark.parametrize("text", ["", "v 0 0 0\n", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 x\n", "v 0 0 0\nf 1 2 9\n"])
def test_obj_errors(tmp_path, text):
    (tmp_path / "e.obj").write_text(text)
    with pytest.raises(MeshLoadError):
        io.read_obj(tmp_path / "e.obj")


def test_pose_json_round_trip(tmp_path, rng):
    rot = rng.normal(size=(3, 4))
    rot /= np.linalg.norm(rot, axis=1, keepdims=True)
    poses = AbsolutePoseSet(rot, 0.25, 7)
    io.write_json(tmp_path / "p.json", io.poses_to_dict(poses))
    back = io.poses_from_dict(io.read_json(tmp_path / "p.json"))
    assert np.allclose(back.rotations, rot, atol=1e-15)
    assert (back.residual, back.iterations) == (0.25, 7)
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ValidationError):
        io.read_json(tmp_path / "bad.json")
    with pytest.raises(ValidationError):
        io.poses_from_dict({"rot": []})
