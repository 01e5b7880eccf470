"""File formats: PGM silhouettes, OBJ meshes, VOXG1 grids, XYZ clouds and pose JSON."""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .carve import BinaryGrid, GridSpec, OccupancyGrid
from .errors import MeshLoadError, ValidationError
from .geometry import quat_normalize
from .mesh import TriangleMesh
from .posegraph import AbsolutePoseSet, RelativePoseGraph, build_graph

PathLike = str | os.PathLike


# --- PGM -------------------------------------------------------------------


def write_pgm(path: PathLike, sil: np.ndarray) -> None:
    sil = np.asarray(sil)
    height, width = sil.shape
    data = np.where(sil != 0, 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def _pgm_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValidationError("truncated PGM header")
        tokens.append(buf[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(path: PathLike) -> np.ndarray:
    """Binary P5 PGM to a 0/1 ``uint8`` mask; values >= 128 are foreground."""
    buf = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(buf, 4)
    if tokens[0] != b"P5":
        raise ValidationError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval > 255:
        raise ValidationError(f"{path}: 16-bit PGM not supported")
    data = np.frombuffer(buf, dtype=np.uint8, count=width * height, offset=offset)
    return (data.reshape(height, width) >= 128).astype(np.uint8)


# --- OBJ -------------------------------------------------------------------


def read_obj(path: PathLike) -> TriangleMesh:
    """ASCII OBJ reader honouring ``v`` and ``f`` records; polygons are fan-triangulated."""
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise MeshLoadError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        parts = line.split()
        if not parts:
            continue
        try:
            if parts[0] == "v":
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for token in parts[1:]:
                    k = int(token.split("/")[0])
                    idx.append(k - 1 if k > 0 else len(vertices) + k)
                for a, b in zip(idx[1:-1], idx[2:]):
                    if len({idx[0], a, b}) == 3:
                        faces.append((idx[0], a, b))
        except ValueError as exc:
            raise MeshLoadError(f"{path}:{lineno}: malformed record: {line!r}") from exc
    if not vertices or not faces:
        raise MeshLoadError(f"{path}: no triangles found")
    try:
        return TriangleMesh(np.array(vertices), np.array(faces))
    except ValidationError as exc:
        raise MeshLoadError(f"{path}: {exc}") from exc


def write_obj(path: PathLike, mesh: TriangleMesh) -> None:
    with open(path, "w") as fh:
        for x, y, z in mesh.vertices.tolist():
            fh.write(f"v {x!r} {y!r} {z!r}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


# --- VOXG1 -----------------------------------------------------------------


def _voxg_header(spec: GridSpec) -> bytes:
    cx, cy, cz = spec.center
    return f"VOXG1 {spec.resolution} {cx!r} {cy!r} {cz!r} {spec.extent!r}\n".encode("ascii")


def encode_voxg(grid: OccupancyGrid | BinaryGrid) -> bytes:
    """Serialize a grid. Payload order is x-fastest (``[ix, iy, iz]`` in Fortran order)."""
    head = _voxg_header(grid.spec)
    if isinstance(grid, BinaryGrid):
        flat = np.asarray(grid.bits, dtype=bool).ravel(order="F")
        return head + b"BIT\n" + np.packbits(flat, bitorder="little").tobytes()
    flat = np.asarray(grid.values).ravel(order="F").astype("<f4")
    return head + b"F32\n" + flat.tobytes()


def decode_voxg(buf: bytes) -> OccupancyGrid | BinaryGrid:
    end = buf.find(b"\n")
    if end < 0 or not buf.startswith(b"VOXG1 "):
        raise ValidationError("not a VOXG1 file")
    fields = buf[:end].split()
    if len(fields) != 6:
        raise ValidationError("malformed VOXG1 header")
    res = int(fields[1])
    spec = GridSpec(res, tuple(float(x) for x in fields[2:5]), float(fields[5]))
    kind = buf[end + 1 : end + 4]
    payload = buf[end + 5 :]
    n = res**3
    if kind == b"F32":
        if len(payload) != 4 * n:
            raise ValidationError("VOXG1 F32 payload has the wrong size")
        values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        return OccupancyGrid(spec, values.reshape(spec.shape, order="F"))
    if kind == b"BIT":
        if len(payload) != math.ceil(n / 8):
            raise ValidationError("VOXG1 BIT payload has the wrong size")
        bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=n, bitorder="little")
        return BinaryGrid(spec, bits.astype(bool).reshape(spec.shape, order="F"))
    raise ValidationError(f"unknown VOXG1 payload token {kind!r}")


def write_voxg(path: PathLike, grid: OccupancyGrid | BinaryGrid) -> None:
    Path(path).write_bytes(encode_voxg(grid))


def read_voxg(path: PathLike) -> OccupancyGrid | BinaryGrid:
    return decode_voxg(Path(path).read_bytes())


# --- XYZ -------------------------------------------------------------------


def write_xyz(path: PathLike, points) -> None:
    with open(path, "w") as fh:
        for x, y, z in np.asarray(points, dtype=np.float64).reshape(-1, 3).tolist():
            fh.write(f"{x!r} {y!r} {z!r}\n")


def read_xyz(path: PathLike) -> np.ndarray:
    rows = [line.split() for line in Path(path).read_text().splitlines() if line.strip()]
    if any(len(r) != 3 for r in rows):
        raise ValidationError(f"{path}: every line must hold exactly three numbers")
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


# --- JSON ------------------------------------------------------------------


def _quat_list(q) -> list[float]:
    return [float(c) for c in np.asarray(q).ravel()]


def graph_to_dict(graph: RelativePoseGraph) -> dict:
    return {
        "n_views": graph.n_views,
        "edges": [{"i": i, "j": j, "q": _quat_list(graph[(i, j)])} for i, j in graph.pairs()],
    }


def graph_from_dict(data: dict) -> RelativePoseGraph:
    try:
        n = int(data["n_views"])
        preds = [(e["i"], e["j"], quat_normalize(e["q"])) for e in data["edges"]]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed graph document: {exc}") from exc
    return build_graph(n, preds)


def poses_to_dict(poses: AbsolutePoseSet) -> dict:
    return {
        "rotations": [_quat_list(q) for q in poses.rotations],
        "residual": float(poses.residual),
        "iterations": int(poses.iterations),
    }


def poses_from_dict(data: dict) -> AbsolutePoseSet:
    try:
        rotations = quat_normalize(np.array(data["rotations"], dtype=np.float64).reshape(-1, 4))
        return AbsolutePoseSet(rotations, float(data.get("residual", 0.0)), int(data.get("iterations", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed pose document: {exc}") from exc


def write_json(path: PathLike, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def read_json(path: PathLike) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
