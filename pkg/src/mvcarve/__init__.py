"""Classical multi-view shape reconstruction from silhouettes with unknown relative poses.

Pose-graph rectification, silhouette carving into an occupancy grid, the
pose evaluation losses and the shape/pose metrics, plus a synthetic
scenario generator that drives them end to end.
"""

from .carve import BinaryGrid, GridSpec, OccupancyGrid, binarize, build_occupancy, cleanup, make_weights
from .evaluation import MetricReport, chamfer, grid_to_cloud, iou, sample_surface, voxelize_solid
from .geometry import (
    CameraModel,
    ViewRotation,
    geodesic_angle,
    project,
    quat_conjugate,
    quat_multiply,
    quat_rotate_point,
    quat_to_matrix,
    view_rotation_to_quat,
)
from .losses import LossWeights, angular_loss, contour_loss, pose_loss
from .mesh import TriangleMesh
from .posegraph import (
    AbsolutePoseSet,
    RectifyOptions,
    RelativePoseGraph,
    build_graph,
    initialize_absolute,
    pose_metrics,
    rectify,
    relative_from_absolute,
)
from .raster import (
    distance_transform,
    extract_contour_pixels,
    lift_contour_points,
    render_silhouette,
    sample_field_bilinear,
)
from .scenario import Scenario, ScenarioConfig, generate_views, perturb_relative_poses, run_pipeline

__version__ = "0.1.0"
