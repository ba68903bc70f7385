"""File-in/file-out command line surface.

Four commands tie the pipeline together: `calibrate` turns jig measurements
into a camera-info file, `render` draws a scene from the projector's pose,
`path` draws a ground-plane navigation band, and `verify` reports projection
alignment error. Every command is a pure function of its input files and
writes only to the paths named in its flags.

Exit codes: 0 success, 2 config/parse error, 3 unknown frame, 4 alignment
bound violated.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .camera import calibrate_intrinsics, parse_camera_info, parse_measurements, write_camera_info
from .errors import MissingFileError, ProjmapError, UnknownFrameError
from .pointcloud import load_scene
from .renderer import RenderOptions, parse_path_file, render_path, render_scene, write_image
from .transforms import load_frame_tree
from .verifier import verify_alignment

__all__ = ["RunManifest", "build_parser", "run", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNKNOWN_FRAME = 3
EXIT_BOUND_VIOLATED = 4

# A projector band of light reads best at full brightness.
PATH_COLOR = (255, 255, 255)


@dataclass(frozen=True)
class RunManifest:
    """Record of one CLI run: command, files touched, and the exit code."""

    command: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    exit_code: int


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projmap",
        description="Projector calibration, virtual-camera rendering, and alignment verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_cal = sub.add_parser("calibrate", help="compute a camera-info file from jig measurements")
    p_cal.add_argument("--measurements", required=True, help="measurement YAML (Z W H X Y w h)")
    p_cal.add_argument("--out", required=True, help="camera-info YAML to write")

    p_render = sub.add_parser("render", help="render a scene from the projector's pose")
    _add_render_flags(p_render)
    p_render.add_argument("--scene", required=True, help="scene config YAML")

    p_path = sub.add_parser("path", help="render a navigation path band on the ground plane")
    _add_render_flags(p_path)
    p_path.add_argument("--path", required=True, help="path YAML (frame, band_width_m, points)")
    p_path.add_argument(
        "--band-width", type=float, default=None, help="band width in meters (overrides the file)"
    )
    p_path.add_argument(
        "--ground-frame", default=None, help="ground plane frame (overrides the file)"
    )

    p_verify = sub.add_parser("verify", help="report alignment error of projected pixels")
    p_verify.add_argument("--scene", required=True)
    p_verify.add_argument("--frames", required=True)
    p_verify.add_argument("--camera-info", required=True)
    p_verify.add_argument("--projector-frame", required=True)
    p_verify.add_argument("--report", required=True, help="JSON report to write")
    p_verify.add_argument(
        "--raycast-camera-info",
        default=None,
        help="camera-info used for raycasting only (perturbation studies)",
    )
    return parser


def _add_render_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--frames", required=True, help="frame-tree YAML")
    p.add_argument("--camera-info", required=True, help="projector camera-info YAML")
    p.add_argument("--projector-frame", required=True, help="projector optical frame name")
    p.add_argument("--splat-radius", type=int, default=2, help="point splat radius in pixels")
    p.add_argument("--out", required=True, help="image to write (.ppm or .png)")


def run(argv: Sequence[str] | None = None) -> RunManifest:
    """Parse arguments, execute one command, and return its manifest."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_CONFIG
        return RunManifest(command="", inputs=(), outputs=(), exit_code=code)
    handler = {
        "calibrate": _cmd_calibrate,
        "render": _cmd_render,
        "path": _cmd_path,
        "verify": _cmd_verify,
    }[args.command]
    try:
        return handler(args)
    except UnknownFrameError as exc:
        return _fail(args.command, exc, EXIT_UNKNOWN_FRAME)
    except (ProjmapError, ValueError) as exc:
        return _fail(args.command, exc, EXIT_CONFIG)
    except OSError as exc:
        return _fail(args.command, exc, EXIT_CONFIG)


def main() -> None:
    logging.basicConfig(level=logging.WARNING)
    sys.exit(run().exit_code)


def _fail(command: str, exc: Exception, code: int) -> RunManifest:
    print(f"projmap {command}: error: {exc}", file=sys.stderr)
    return RunManifest(command=command, inputs=(), outputs=(), exit_code=code)


def _read(path: str) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise MissingFileError(path)
    return p.read_bytes()


def _image_format(out: str) -> str:
    suffix = Path(out).suffix.lower()
    if suffix == ".ppm":
        return "ppm"
    if suffix == ".png":
        return "png"
    raise ValueError(f"output file must end in .ppm or .png, got {out!r}")


def _cmd_calibrate(args) -> RunManifest:
    measurement = parse_measurements(_read(args.measurements))
    intrinsics = calibrate_intrinsics(measurement)
    Path(args.out).write_bytes(write_camera_info(intrinsics))
    return RunManifest(
        command="calibrate",
        inputs=(args.measurements,),
        outputs=(args.out,),
        exit_code=EXIT_OK,
    )


def _cmd_render(args) -> RunManifest:
    fmt = _image_format(args.out)
    scene = load_scene(_read(args.scene), Path(args.scene).parent)
    tree = load_frame_tree(_read(args.frames))
    intrinsics = parse_camera_info(_read(args.camera_info))
    opts = RenderOptions(splat_radius=args.splat_radius)
    buf = render_scene(scene, tree, args.projector_frame, intrinsics, opts)
    Path(args.out).write_bytes(write_image(buf, fmt))
    return RunManifest(
        command="render",
        inputs=(args.scene, args.frames, args.camera_info),
        outputs=(args.out,),
        exit_code=EXIT_OK,
    )


def _cmd_path(args) -> RunManifest:
    fmt = _image_format(args.out)
    file_frame, file_band, points = parse_path_file(_read(args.path))
    tree = load_frame_tree(_read(args.frames))
    intrinsics = parse_camera_info(_read(args.camera_info))
    band_width = file_band if args.band_width is None else args.band_width
    ground_frame = file_frame if args.ground_frame is None else args.ground_frame
    opts = RenderOptions(splat_radius=args.splat_radius)
    buf = render_path(
        points,
        ground_frame,
        band_width,
        PATH_COLOR,
        tree,
        args.projector_frame,
        intrinsics,
        opts,
    )
    Path(args.out).write_bytes(write_image(buf, fmt))
    return RunManifest(
        command="path",
        inputs=(args.path, args.frames, args.camera_info),
        outputs=(args.out,),
        exit_code=EXIT_OK,
    )


def _cmd_verify(args) -> RunManifest:
    scene = load_scene(_read(args.scene), Path(args.scene).parent)
    tree = load_frame_tree(_read(args.frames))
    intrinsics = parse_camera_info(_read(args.camera_info))
    raycast = None
    inputs = [args.scene, args.frames, args.camera_info]
    if args.raycast_camera_info is not None:
        raycast = parse_camera_info(_read(args.raycast_camera_info))
        inputs.append(args.raycast_camera_info)
    report = verify_alignment(
        scene, tree, args.projector_frame, intrinsics, raycast_intrinsics=raycast
    )
    Path(args.report).write_text(report.to_json(), encoding="ascii")
    ok = report.max_error <= report.predicted_bound
    if not ok:
        print(
            f"projmap verify: alignment bound violated: max_error "
            f"{report.max_error:.6g} m > bound {report.predicted_bound:.6g} m",
            file=sys.stderr,
        )
    return RunManifest(
        command="verify",
        inputs=tuple(inputs),
        outputs=(args.report,),
        exit_code=EXIT_OK if ok else EXIT_BOUND_VIOLATED,
    )
