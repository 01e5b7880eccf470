"""Command-line interface.

Exit codes: 0 on success, 2 on invalid input, 1 on runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .carve import BinaryGrid, GridSpec, OccupancyGrid, binarize, build_occupancy, cleanup, make_weights
from .errors import ReconError, StageError, ValidationError
from .losses import LossWeights
from .posegraph import RectifyOptions, rectify, relative_rotations
from .scenario import (
    GRID_EXTENT,
    ScenarioConfig,
    evaluate,
    generate_views,
    load_scenario,
    pair_losses,
    perturb_relative_poses,
    run_pipeline,
    save_scenario,
)

log = logging.getLogger("mvcarve")


def _load_pose_like(path: str, n_views: int) -> dict:
    """Relative rotations from either a pose-set or a graph JSON document."""
    doc = io.read_json(path)
    if "edges" in doc:
        graph = io.graph_from_dict(doc)
        return dict(graph.edges)
    poses = io.poses_from_dict(doc)
    if poses.n_views != n_views:
        raise ValidationError(f"{path}: {poses.n_views} rotations for a {n_views}-view scenario")
    return relative_rotations(poses)


def cmd_render(args) -> int:
    cfg = ScenarioConfig(mesh_path=args.mesh, n_views=args.views, seed=args.seed)
    scenario = generate_views(cfg, workers=args.workers)
    save_scenario(scenario, args.out)
    print(f"wrote {scenario.n_views} silhouettes to {args.out}")
    return 0


def cmd_perturb(args) -> int:
    scenario = load_scenario(args.scenario)
    graph = perturb_relative_poses(scenario, args.noise_deg, args.seed)
    io.write_json(args.out, io.graph_to_dict(graph))
    return 0


def cmd_rectify(args) -> int:
    graph = io.graph_from_dict(io.read_json(args.graph))
    opts = RectifyOptions(max_iterations=args.max_iter, tolerance=args.tol)
    poses = rectify(graph, opts)
    io.write_json(args.out, io.poses_to_dict(poses))
    print(f"residual {poses.residual:.6g} after {poses.iterations} iterations")
    return 0


def cmd_carve(args) -> int:
    scenario = load_scenario(args.scenario)
    poses = io.poses_from_dict(io.read_json(args.poses))
    if poses.n_views != scenario.n_views:
        raise ValidationError(f"{args.poses}: {poses.n_views} rotations for a {scenario.n_views}-view scenario")
    spec = GridSpec(args.res, (0.0, 0.0, 0.0), GRID_EXTENT)
    weights = make_weights(scenario.n_views, args.w1)
    grid = build_occupancy(scenario.silhouettes, poses.rotations, scenario.camera, spec, weights)
    io.write_voxg(args.out, grid)
    return 0


def cmd_binarize(args) -> int:
    grid = io.read_voxg(args.grid)
    if isinstance(grid, BinaryGrid):
        raise ValidationError(f"{args.grid} already holds a binary grid")
    out = binarize(grid, args.tau)
    if args.cleanup:
        out = cleanup(out)
    io.write_voxg(args.out, out)
    print(f"{out.count()} occupied voxels")
    return 0


def cmd_eval(args) -> int:
    scenario = load_scenario(args.scenario)
    pred = io.read_voxg(args.pred)
    if isinstance(pred, OccupancyGrid):
        raise ValidationError(f"{args.pred} holds a real-valued grid; binarize it first")
    poses = io.poses_from_dict(io.read_json(args.poses)) if args.poses else None
    report = evaluate(pred, scenario, poses)
    Path(args.out).write_text(report.to_json())
    sys.stdout.write(report.to_json())
    return 0


def cmd_eval_loss(args) -> int:
    scenario = load_scenario(args.scenario)
    predicted = _load_pose_like(args.pose_file, scenario.n_views)
    weights = LossWeights(args.alpha, args.beta)
    print("i j angular contour pose")
    for i, j, ang, con, total in pair_losses(scenario, predicted, weights):
        print(f"{i} {j} {ang:.9f} {con:.9f} {total:.9f}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = ScenarioConfig.from_dict(io.read_json(args.config))
    report = run_pipeline(cfg, args.out, workers=args.workers)
    sys.stdout.write(report.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvcarve", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render silhouettes of a mesh from random views")
    p.add_argument("--mesh", required=True, help="OBJ path or builtin:<name>")
    p.add_argument("--views", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("perturb", help="noisy relative-pose graph from a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--noise-deg", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("rectify", help="absolute poses from a relative-pose graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_rectify)

    p = sub.add_parser("carve", help="occupancy grid from silhouettes and poses")
    p.add_argument("--scenario", required=True)
    p.add_argument("--poses", required=True)
    p.add_argument("--w1", type=float, default=0.4)
    p.add_argument("--res", type=int, default=32)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_carve)

    p = sub.add_parser("binarize", help="threshold (and optionally clean up) an occupancy grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--tau", type=float, default=0.85)
    p.add_argument("--cleanup", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_binarize)

    p = sub.add_parser("eval", help="IoU / Chamfer (and pose metrics) of a binary grid")
    p.add_argument("--pred", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--poses", help="rectified poses; pose metrics are null without it")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-loss", help="angular / contour / combined loss per ordered pair")
    p.add_argument("--scenario", required=True)
    p.add_argument("--pose-file", required=True, help="pose-set or graph JSON")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.9)
    p.set_defaults(func=cmd_eval_loss)

    p = sub.add_parser("pipeline", help="run every stage from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.cause, ValidationError) else 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ReconError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
