"""Synthetic scenarios, the pose-noise model and the end-to-end pipeline.

A scenario is a normalized mesh seen from ``n`` random views: ground-truth
rotations, rendered silhouettes and a dense surface cloud. Noisy relative
poses stand in for a learned pose predictor. ``run_pipeline`` chains
perturbation, rectification, carving, cleanup and evaluation, writing every
intermediate artifact to disk.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .carve import BinaryGrid, GridSpec, OccupancyGrid, binarize, build_occupancy, cleanup, make_weights
from .errors import ConfigError, ReconError, StageError, ValidationError
from .evaluation import MetricReport, chamfer, grid_to_cloud, iou, sample_surface, voxelize_solid
from .geometry import (
    CameraModel,
    ViewRotation,
    geodesic_angle,
    quat_conjugate,
    quat_from_axis_angle,
    quat_multiply,
    quat_rotate_point,
    sample_view_rotations,
    view_rotation_to_quat,
)
from .losses import LossWeights, angular_loss, contour_loss
from .mesh import BUILTIN, TriangleMesh, normalize_mesh
from .posegraph import (
    AbsolutePoseSet,
    RectifyOptions,
    RelativePoseGraph,
    build_graph,
    expected_pairs,
    pose_metrics,
    rectify,
    relative_from_absolute,
)
from .raster import distance_transform, extract_contour_pixels, lift_contour_points, render_silhouette

log = logging.getLogger(__name__)

CLOUD_POINTS = 8192
GRID_EXTENT = 1.1


@dataclass(frozen=True)
class ScenarioConfig:
    mesh_path: str
    n_views: int = 5
    seed: int = 0
    azimuth_range: tuple[float, float] = (0.0, 360.0)
    elevation_range: tuple[float, float] = (-20.0, 40.0)
    noise_max_deg: float = 10.0
    w1: float = 0.4
    carve_tau: float = 0.85
    resolution: int = 32
    camera: dict | None = None

    def __post_init__(self):
        if self.n_views < 1:
            raise ConfigError("n_views must be >= 1")
        az_lo, az_hi = self.azimuth_range
        el_lo, el_hi = self.elevation_range
        if not (0.0 <= az_lo <= az_hi <= 360.0):
            raise ConfigError(f"azimuth_range {self.azimuth_range} must lie within [0, 360)")
        if not (-90.0 <= el_lo <= el_hi <= 90.0):
            raise ConfigError(f"elevation_range {self.elevation_range} must lie within [-90, 90]")
        if self.noise_max_deg < 0:
            raise ConfigError("noise_max_deg must be >= 0")
        if not 0.0 < self.carve_tau < 1.0:
            raise ConfigError("carve_tau must lie in (0, 1)")
        if self.resolution < 2:
            raise ConfigError("resolution must be >= 2")
        object.__setattr__(self, "azimuth_range", tuple(float(x) for x in self.azimuth_range))
        object.__setattr__(self, "elevation_range", tuple(float(x) for x in self.elevation_range))

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "mesh_path" not in data:
            raise ConfigError("config needs mesh_path")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["azimuth_range"] = list(self.azimuth_range)
        d["elevation_range"] = list(self.elevation_range)
        return d

    @property
    def camera_model(self) -> CameraModel:
        return CameraModel.with_overrides(self.camera)

    @property
    def grid_spec(self) -> GridSpec:
        return GridSpec(self.resolution, (0.0, 0.0, 0.0), GRID_EXTENT)


@dataclass
class Scenario:
    mesh: TriangleMesh  # normalized, object frame
    camera: CameraModel
    views: list[ViewRotation]
    rotations: np.ndarray  # (n, 4) object -> camera
    silhouettes: list[np.ndarray]
    cloud: np.ndarray  # (CLOUD_POINTS, 3) object frame
    config: ScenarioConfig | None = None
    _relatives: dict | None = field(default=None, repr=False)

    @property
    def n_views(self) -> int:
        return len(self.rotations)

    def relatives(self) -> dict[tuple[int, int], np.ndarray]:
        """Ground-truth ``q_j * q_i^-1`` for every ordered pair."""
        if self._relatives is None:
            self._relatives = {
                (i, j): quat_multiply(self.rotations[j], quat_conjugate(self.rotations[i]))
                for i, j in expected_pairs(self.n_views)
            }
        return self._relatives

    def reference_rotations(self) -> np.ndarray:
        """Ground-truth rotations expressed relative to view 0."""
        rel = self.relatives()
        out = np.empty_like(self.rotations)
        out[0] = (1.0, 0.0, 0.0, 0.0)
        for i in range(1, self.n_views):
            out[i] = rel[(0, i)]
        return out


def load_mesh(path: str) -> TriangleMesh:
    """OBJ file, or ``builtin:<name>`` for one of the primitive solids."""
    if path.startswith("builtin:"):
        name = path.split(":", 1)[1]
        if name not in BUILTIN:
            raise ConfigError(f"unknown builtin mesh {name!r}; choose from {sorted(BUILTIN)}")
        return BUILTIN[name]()
    return io.read_obj(path)


def _render_all(mesh, rotations, cam, workers: int) -> list[np.ndarray]:
    if workers <= 1:
        return [render_silhouette(mesh, q, cam) for q in rotations]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda q: render_silhouette(mesh, q, cam), rotations))


def generate_views(
    cfg: ScenarioConfig,
    views: list[ViewRotation] | None = None,
    workers: int = 1,
) -> Scenario:
    """Normalize the mesh, sample views, render silhouettes and a surface cloud.

    ``views`` overrides the sampled view rotations.
    """
    mesh = normalize_mesh(load_mesh(cfg.mesh_path))
    cam = cfg.camera_model
    if views is None:
        rng = np.random.default_rng([cfg.seed, 0])
        views = sample_view_rotations(rng, cfg.n_views, cfg.azimuth_range, cfg.elevation_range)
    rotations = np.stack([view_rotation_to_quat(v) for v in views])
    silhouettes = _render_all(mesh, rotations, cam, workers)
    cloud = sample_surface(mesh, CLOUD_POINTS, seed=cfg.seed)
    return Scenario(mesh, cam, list(views), rotations, silhouettes, cloud, cfg)


def perturb_relatives(
    relatives: dict[tuple[int, int], np.ndarray],
    n_views: int,
    noise_max_deg: float,
    seed: int,
) -> RelativePoseGraph:
    """Left-multiply each directed edge by an independent random rotation.

    Axis uniform on the sphere, angle uniform in ``[0, noise_max_deg]``.
    """
    if noise_max_deg < 0:
        raise ValidationError("noise_max_deg must be >= 0")
    rng = np.random.default_rng(seed)
    preds = []
    for i, j in expected_pairs(n_views):
        axis = rng.normal(size=3)
        angle = math.radians(rng.uniform(0.0, noise_max_deg)) if noise_max_deg > 0 else 0.0
        q = relatives[(i, j)]
        if angle > 0.0:
            q = quat_multiply(quat_from_axis_angle(axis, angle), q)
        preds.append((i, j, q))
    return build_graph(n_views, preds)


def perturb_relative_poses(scenario: Scenario, noise_max_deg: float, seed: int) -> RelativePoseGraph:
    return perturb_relatives(scenario.relatives(), scenario.n_views, noise_max_deg, seed)


def rectified_pose_errors(poses: AbsolutePoseSet, scenario: Scenario) -> np.ndarray:
    """Geodesic error in degrees of every rectified relative pose, ordered pairs in sorted order."""
    truth = scenario.relatives()
    return np.array(
        [
            math.degrees(geodesic_angle(relative_from_absolute(poses, i, j), truth[(i, j)]))
            for i, j in expected_pairs(scenario.n_views)
        ]
    )


def evaluate(
    pred: BinaryGrid,
    scenario: Scenario,
    poses: AbsolutePoseSet | None = None,
) -> MetricReport:
    """Compare a reconstruction, expressed in view 0's frame, against the ground truth."""
    ref = scenario.rotations[0]
    truth_grid = voxelize_solid(scenario.mesh, ref, pred.spec)
    truth_cloud = quat_rotate_point(ref, scenario.cloud)
    acc = med = None
    if poses is not None:
        if poses.n_views != scenario.n_views:
            raise ValidationError(f"pose file has {poses.n_views} views, scenario has {scenario.n_views}")
        truth = scenario.relatives()
        pairs = expected_pairs(scenario.n_views)
        acc, med = pose_metrics(
            [relative_from_absolute(poses, i, j) for i, j in pairs], [truth[p] for p in pairs]
        )
    return MetricReport(iou(pred, truth_grid), chamfer(grid_to_cloud(pred), truth_cloud), acc, med)


def contour_targets(scenario: Scenario, t: int, max_points: int = 200, seed: int = 0):
    """Distance field and lifted contour points for target view ``t``."""
    sil = scenario.silhouettes[t]
    cam = scenario.camera
    field_ = distance_transform(extract_contour_pixels(sil), cam.width, cam.height)
    points = lift_contour_points(scenario.cloud, scenario.rotations[t], cam, sil, max_points, seed)
    return field_, points


def pair_losses(scenario: Scenario, predicted: dict, weights: LossWeights = LossWeights(), seed: int = 0):
    """``(i, j, angular, contour, pose)`` rows for every ordered pair."""
    truth = scenario.relatives()
    targets = {}
    rows = []
    for i, j in expected_pairs(scenario.n_views):
        if j not in targets:
            targets[j] = contour_targets(scenario, j, seed=seed)
        d_t, v_t = targets[j]
        q_star = truth[(i, j)]
        q_tilde = predicted[(i, j)]
        ang = angular_loss(q_star, q_tilde)
        con = contour_loss(q_tilde, q_star, d_t, v_t, scenario.camera)
        rows.append((i, j, ang, con, weights.alpha * ang + weights.beta * con))
    return rows


# --- persistence -----------------------------------------------------------


def save_scenario(scenario: Scenario, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k, sil in enumerate(scenario.silhouettes):
        io.write_pgm(out / f"sil_{k:03d}.pgm", sil)
    io.write_obj(out / "mesh.obj", scenario.mesh)
    io.write_xyz(out / "cloud.xyz", scenario.cloud)
    doc = {
        "n_views": scenario.n_views,
        "camera": scenario.camera.to_dict(),
        "views": [{"azimuth": v.azimuth, "elevation": v.elevation} for v in scenario.views],
        "rotations": [[float(c) for c in q] for q in scenario.rotations],
        "config": scenario.config.to_dict() if scenario.config else None,
    }
    io.write_json(out / "scenario.json", doc)
    return out


def load_scenario(path) -> Scenario:
    root = Path(path)
    if not (root / "scenario.json").is_file():
        raise ValidationError(f"{root} is not a scenario directory (no scenario.json)")
    doc = io.read_json(root / "scenario.json")
    n = int(doc["n_views"])
    cam = CameraModel.with_overrides(doc["camera"])
    views = [ViewRotation(v["azimuth"], v["elevation"]) for v in doc["views"]]
    rotations = np.array(doc["rotations"], dtype=np.float64).reshape(n, 4)
    sils = [io.read_pgm(root / f"sil_{k:03d}.pgm") for k in range(n)]
    mesh = io.read_obj(root / "mesh.obj")
    cloud = io.read_xyz(root / "cloud.xyz")
    cfg = ScenarioConfig.from_dict(doc["config"]) if doc.get("config") else None
    return Scenario(mesh, cam, views, rotations, sils, cloud, cfg)


# --- pipeline --------------------------------------------------------------


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (ReconError, ValueError, OSError)) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


@dataclass
class Reconstruction:
    graph: RelativePoseGraph
    poses: AbsolutePoseSet
    grid: OccupancyGrid
    final: BinaryGrid
    report: MetricReport


def reconstruct(scenario: Scenario, cfg: ScenarioConfig, noise_seed: int | None = None) -> Reconstruction:
    """In-memory perturb -> rectify -> carve -> binarize -> cleanup -> evaluate."""
    seed = cfg.seed if noise_seed is None else noise_seed
    graph = perturb_relative_poses(scenario, cfg.noise_max_deg, seed=seed)
    poses = rectify(graph, RectifyOptions())
    weights = make_weights(scenario.n_views, cfg.w1)
    grid = build_occupancy(scenario.silhouettes, poses.rotations, scenario.camera, cfg.grid_spec, weights)
    final = cleanup(binarize(grid, cfg.carve_tau))
    return Reconstruction(graph, poses, grid, final, evaluate(final, scenario, poses))


def run_pipeline(cfg: ScenarioConfig, out_dir, workers: int = 1) -> MetricReport:
    """generate -> perturb -> rectify -> carve -> binarize -> cleanup -> evaluate.

    Artifacts written under ``out_dir``: ``scenario/`` (silhouettes, mesh,
    cloud, ground-truth rotations), ``graph.json``, ``poses.json``,
    ``grid.voxg``, ``final.voxg`` and ``report.json``. A failing stage
    raises :class:`StageError` naming it; later stages do not run.
    """
    if cfg.n_views < 2:
        raise ConfigError("the pipeline needs n_views >= 2")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with _Stage("render"):
        scenario = generate_views(cfg, workers=workers)
        save_scenario(scenario, out / "scenario")
    with _Stage("perturb"):
        graph = perturb_relative_poses(scenario, cfg.noise_max_deg, seed=cfg.seed)
        io.write_json(out / "graph.json", io.graph_to_dict(graph))
    with _Stage("rectify"):
        poses = rectify(graph, RectifyOptions())
        io.write_json(out / "poses.json", io.poses_to_dict(poses))
    with _Stage("carve"):
        weights = make_weights(cfg.n_views, cfg.w1)
        grid = build_occupancy(scenario.silhouettes, poses.rotations, scenario.camera, cfg.grid_spec, weights)
        io.write_voxg(out / "grid.voxg", grid)
    with _Stage("binarize"):
        final = cleanup(binarize(grid, cfg.carve_tau))
        io.write_voxg(out / "final.voxg", final)
    with _Stage("eval"):
        report = evaluate(final, scenario, poses)
        (out / "report.json").write_text(report.to_json())
    return report
