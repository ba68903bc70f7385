"""Quantitative check that projected pixels land back on their source geometry.

A projector is a camera run in reverse: where a camera maps world points to
pixels, the projector maps pixels to world rays. With matched intrinsics and
pose, the ray cast through the pixel that renders a point must pass within
the pixel-quantization bound of that point. This module simulates jig
measurements from known intrinsics, casts pixel rays, and aggregates the
point-to-ray alignment error over a rendered scene.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .camera import CalibrationMeasurement, Intrinsics, unproject_pixel
from .errors import InvalidIntrinsicsError
from .pointcloud import Scene
from .renderer import RenderOptions, splat_scene
from .transforms import FrameTree, RigidTransform, lookup, rotation_matrix, transform_points

__all__ = [
    "Ray",
    "AlignmentReport",
    "simulate_measurement",
    "raycast_pixel",
    "point_ray_distance",
    "alignment_samples",
    "verify_alignment",
]


@dataclass(frozen=True, eq=False)
class Ray:
    """Half-line from the lens: origin in meters, unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.array(self.origin, dtype=np.float64).reshape(3)
        d = np.array(self.direction, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(o)) and np.all(np.isfinite(d))):
            raise ValueError("ray components must be finite")
        norm = float(np.linalg.norm(d))
        if norm < 1e-12:
            raise ValueError("ray direction must be nonzero")
        d = d / norm
        o.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class AlignmentReport:
    """Error statistics between rendered pixels and their source points."""

    samples: int
    max_error: float
    rms_error: float
    predicted_bound: float

    def to_json(self) -> str:
        return (
            json.dumps(
                {
                    "samples": self.samples,
                    "max_error_m": self.max_error,
                    "rms_error_m": self.rms_error,
                    "predicted_bound_m": self.predicted_bound,
                }
            )
            + "\n"
        )


def simulate_measurement(i: Intrinsics, distance_m: float) -> CalibrationMeasurement:
    """Synthesize the jig measurement a perfect pinhole would produce.

    Exact algebraic inverse of the calibration math: W = w*Z/fx, H = h*Z/fy,
    X = cx*W/w, Y = cy*H/h.
    """
    if not isinstance(i, Intrinsics):
        raise InvalidIntrinsicsError("expected an Intrinsics instance")
    i.validate()
    width_m = i.width * distance_m / i.fx
    height_m = i.height * distance_m / i.fy
    return CalibrationMeasurement(
        distance_m=distance_m,
        width_m=width_m,
        height_m=height_m,
        offset_x_m=i.cx * width_m / i.width,
        offset_y_m=i.cy * height_m / i.height,
        width_px=i.width,
        height_px=i.height,
    )


def raycast_pixel(u: float, v: float, i: Intrinsics, projector_pose: RigidTransform) -> Ray:
    """World-frame ray emitted through pixel (u, v).

    `projector_pose` maps optical-frame coordinates into the world frame; the
    ray origin is the optical center and the direction passes through the
    pixel at unit depth.
    """
    direction_optical = unproject_pixel(u, v, 1.0, i)
    r = rotation_matrix(projector_pose)
    return Ray(origin=projector_pose.translation, direction=r @ direction_optical)


def point_ray_distance(point, ray: Ray) -> float:
    """Perpendicular distance from a point to the ray's supporting line."""
    rel = np.asarray(point, dtype=np.float64).reshape(3) - ray.origin
    return float(np.linalg.norm(np.cross(ray.direction, rel)))


def alignment_samples(
    scene: Scene,
    tree: FrameTree,
    projector_frame: str,
    i: Intrinsics,
    raycast_intrinsics: Intrinsics | None = None,
    opts: RenderOptions | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-point alignment errors for every point that wins its pixel.

    Renders at splat radius 0, then for each unoccluded in-frustum point casts
    a ray through the center of the pixel it lit (optionally with different
    raycast intrinsics) and measures the world-frame perpendicular distance
    back to the point. Occluded points are excluded: a projector cannot light
    geometry hidden behind nearer geometry.

    Returns (errors, depths): the per-sample error in meters and the
    projector-frame depth of each sampled point.
    """
    if opts is None:
        opts = RenderOptions(splat_radius=0)
    if opts.splat_radius != 0:
        raise ValueError("alignment verification requires splat_radius 0")
    ri = i if raycast_intrinsics is None else raycast_intrinsics
    result = splat_scene(scene, tree, projector_frame, i, opts)
    winner = result.winner

    pose = lookup(tree, projector_frame, tree.root)
    r_world = rotation_matrix(pose)
    origin = pose.translation

    errors: list[np.ndarray] = []
    depths: list[np.ndarray] = []
    base = 0
    for cluster in scene.clusters:
        n = len(cluster.cloud)
        if n == 0:
            continue
        seq = np.arange(base, base + n)
        px = result.center_px[seq]
        py = result.center_py[seq]
        lit = px >= 0
        if lit.any():
            sampled = lit.copy()
            sampled[lit] = winner[py[lit], px[lit]] == seq[lit]
            if sampled.any():
                # Same unprojection as raycast_pixel, batched over pixel centers.
                du = (px[sampled] - ri.cx) / ri.fx
                dv = (py[sampled] - ri.cy) / ri.fy
                dirs = np.column_stack((du, dv, np.ones_like(du))) @ r_world.T
                dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
                to_world = lookup(tree, cluster.cloud.frame, tree.root)
                world_pts = transform_points(to_world, cluster.cloud.points)[sampled]
                rel = world_pts - origin
                errors.append(np.linalg.norm(np.cross(dirs, rel), axis=1))
                depths.append(result.depth[seq[sampled]])
        base += n
    if errors:
        return np.concatenate(errors), np.concatenate(depths)
    return np.empty(0), np.empty(0)


def verify_alignment(
    scene: Scene,
    tree: FrameTree,
    projector_frame: str,
    i: Intrinsics,
    raycast_intrinsics: Intrinsics | None = None,
    opts: RenderOptions | None = None,
) -> AlignmentReport:
    """Aggregate alignment errors into a report with the quantization bound.

    The predicted bound is max over sampled points of
    (depth / 2) * hypot(1/fx, 1/fy): the worst-case effect of rounding the
    continuous projection to a pixel center by at most half a pixel per axis.
    It is computed from the render intrinsics; with matched raycast
    intrinsics the measured max error can never exceed it.
    """
    errors, depths = alignment_samples(
        scene, tree, projector_frame, i, raycast_intrinsics=raycast_intrinsics, opts=opts
    )
    if errors.size == 0:
        return AlignmentReport(samples=0, max_error=0.0, rms_error=0.0, predicted_bound=0.0)
    pixel_term = 0.5 * math.hypot(1.0 / i.fx, 1.0 / i.fy)
    return AlignmentReport(
        samples=int(errors.size),
        max_error=float(errors.max()),
        rms_error=float(np.sqrt(np.mean(errors**2))),
        predicted_bound=float(depths.max() * pixel_term),
    )
