"""Projection mapping toolkit: calibrate a projector as a pinhole lens,
render perception results from a pose-matched virtual camera, and verify
that projected pixels land on their source geometry."""

from .camera import (
    CalibrationMeasurement,
    Intrinsics,
    assemble_K,
    calibrate_focal,
    calibrate_intrinsics,
    calibrate_principal,
    parse_camera_info,
    project_point,
    unproject_pixel,
    write_camera_info,
)
from .errors import (
    BehindCameraError,
    DimensionMismatchError,
    InconsistentKError,
    InvalidDepthError,
    InvalidIntrinsicsError,
    InvalidMeasurementError,
    MissingFileError,
    ParseError,
    ProjmapError,
    UnknownFrameError,
    UnsupportedEncodingError,
)
from .pointcloud import Cluster, PointCloud, Scene, load_scene, parse_pcd, write_pcd
from .renderer import (
    NEAR_PLANE_M,
    ImageBuffer,
    RenderOptions,
    parse_ppm,
    render_path,
    render_scene,
    write_image,
)
from .transforms import (
    FrameTree,
    RigidTransform,
    compose,
    invert,
    load_frame_tree,
    lookup,
    transform_point,
    transform_points,
)
from .verifier import (
    AlignmentReport,
    Ray,
    point_ray_distance,
    raycast_pixel,
    simulate_measurement,
    verify_alignment,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "BehindCameraError",
    "CalibrationMeasurement",
    "Cluster",
    "DimensionMismatchError",
    "FrameTree",
    "ImageBuffer",
    "InconsistentKError",
    "Intrinsics",
    "InvalidDepthError",
    "InvalidIntrinsicsError",
    "InvalidMeasurementError",
    "MissingFileError",
    "NEAR_PLANE_M",
    "ParseError",
    "PointCloud",
    "ProjmapError",
    "Ray",
    "RenderOptions",
    "RigidTransform",
    "Scene",
    "UnknownFrameError",
    "UnsupportedEncodingError",
    "assemble_K",
    "calibrate_focal",
    "calibrate_intrinsics",
    "calibrate_principal",
    "compose",
    "invert",
    "load_frame_tree",
    "load_scene",
    "lookup",
    "parse_camera_info",
    "parse_pcd",
    "parse_ppm",
    "point_ray_distance",
    "project_point",
    "raycast_pixel",
    "render_path",
    "render_scene",
    "simulate_measurement",
    "transform_point",
    "transform_points",
    "unproject_pixel",
    "verify_alignment",
    "write_camera_info",
    "write_image",
    "write_pcd",
]
