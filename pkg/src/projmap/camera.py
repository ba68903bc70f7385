"""Pinhole model for the projector lens: manual calibration, projection,
unprojection, and the camera-info file format.

Calibration follows the flat-surface jig procedure: the projector throws a
full-white frame perpendicular onto a plane at a measured distance, the image
corners are marked, and the focal lengths and principal point fall out of
similar triangles. Pixel coordinates put (0, 0) at the center of the top-left
pixel, u rightward, v downward.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import (
    BehindCameraError,
    InconsistentKError,
    InvalidDepthError,
    InvalidIntrinsicsError,
    InvalidMeasurementError,
    ParseError,
)

__all__ = [
    "CalibrationMeasurement",
    "Intrinsics",
    "calibrate_focal",
    "calibrate_principal",
    "calibrate_intrinsics",
    "assemble_K",
    "project_point",
    "unproject_pixel",
    "parse_camera_info",
    "write_camera_info",
    "parse_measurements",
    "MEASUREMENT_KEYS",
]


@dataclass(frozen=True)
class CalibrationMeasurement:
    """Physical jig measurements taken off the projection plane.

    distance_m: projector-to-plane distance.
    width_m / height_m: size of the projected image on the plane.
    offset_x_m / offset_y_m: distance from the marked top-left projected
        corner to the point where the optical axis pierces the plane.
    width_px / height_px: projector native resolution.
    """

    distance_m: float
    width_m: float
    height_m: float
    offset_x_m: float
    offset_y_m: float
    width_px: int
    height_px: int

    def __post_init__(self):
        for name in ("distance_m", "width_m", "height_m", "offset_x_m", "offset_y_m"):
            value = getattr(self, name)
            if not isinstance(value, numbers.Real) or isinstance(value, bool):
                raise InvalidMeasurementError(f"{name} must be a number")
            object.__setattr__(self, name, float(value))
        for name in ("width_px", "height_px"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, numbers.Integral):
                raise InvalidMeasurementError(f"{name} must be an integer pixel count")
            object.__setattr__(self, name, int(value))
        if not all(
            np.isfinite(
                [self.distance_m, self.width_m, self.height_m, self.offset_x_m, self.offset_y_m]
            )
        ):
            raise InvalidMeasurementError("measurements must be finite")
        for name in ("distance_m", "width_m", "height_m", "width_px", "height_px"):
            if getattr(self, name) <= 0:
                raise InvalidMeasurementError(f"{name} must be positive")
        if not 0.0 <= self.offset_x_m <= self.width_m:
            raise InvalidMeasurementError("offset_x_m must lie within [0, width_m]")
        if not 0.0 <= self.offset_y_m <= self.height_m:
            raise InvalidMeasurementError("offset_y_m must lie within [0, height_m]")


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole parameters in pixel units plus the image size they apply to."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, numbers.Real):
                raise InvalidIntrinsicsError(f"{name} must be a number")
            object.__setattr__(self, name, float(value))
        for name in ("width", "height"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, numbers.Integral):
                raise InvalidIntrinsicsError(f"{name} must be an integer")
            object.__setattr__(self, name, int(value))
        self.validate()

    def validate(self) -> None:
        if not all(np.isfinite([self.fx, self.fy, self.cx, self.cy])):
            raise InvalidIntrinsicsError("intrinsics must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidIntrinsicsError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise InvalidIntrinsicsError("image dimensions must be positive")
        if not 0 < self.cx < self.width:
            raise InvalidIntrinsicsError("cx must lie strictly inside image width")
        if not 0 < self.cy < self.height:
            raise InvalidIntrinsicsError("cy must lie strictly inside image height")


def calibrate_focal(m: CalibrationMeasurement) -> tuple[float, float]:
    """Focal lengths from similar triangles: fx = w*Z/W, fy = h*Z/H."""
    fx = m.width_px * m.distance_m / m.width_m
    fy = m.height_px * m.distance_m / m.height_m
    return fx, fy


def calibrate_principal(m: CalibrationMeasurement) -> tuple[float, float]:
    """Principal point from the marked-corner offsets: cx = w*X/W, cy = h*Y/H."""
    cx = m.width_px * m.offset_x_m / m.width_m
    cy = m.height_px * m.offset_y_m / m.height_m
    return cx, cy


def calibrate_intrinsics(m: CalibrationMeasurement) -> Intrinsics:
    """Full intrinsics from one jig measurement."""
    fx, fy = calibrate_focal(m)
    cx, cy = calibrate_principal(m)
    return Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy, width=m.width_px, height=m.height_px)


def assemble_K(i: Intrinsics) -> np.ndarray:
    """Row-major 3x3 camera matrix [[fx,0,cx],[0,fy,cy],[0,0,1]]."""
    return np.array(
        [
            [i.fx, 0.0, i.cx],
            [0.0, i.fy, i.cy],
            [0.0, 0.0, 1.0],
        ]
    )


def project_point(p, i: Intrinsics) -> tuple[float, float]:
    """Project an optical-frame point (meters) to continuous pixel coordinates."""
    x, y, z = (float(v) for v in np.asarray(p, dtype=np.float64).reshape(3))
    if z <= 0:
        raise BehindCameraError(f"point depth {z} is not in front of the lens")
    return i.fx * x / z + i.cx, i.fy * y / z + i.cy


def unproject_pixel(u: float, v: float, depth: float, i: Intrinsics) -> np.ndarray:
    """Optical-frame point at the given depth along the ray through pixel (u, v)."""
    if depth <= 0:
        raise InvalidDepthError(f"depth must be positive, got {depth}")
    return np.array(
        [
            (u - i.cx) * depth / i.fx,
            (v - i.cy) * depth / i.fy,
            float(depth),
        ]
    )


# -- camera-info file format -------------------------------------------------

_DISTORTION_MODEL = "plumb_bob"


def write_camera_info(i: Intrinsics) -> bytes:
    """Serialize intrinsics as camera-info YAML.

    Floats use their shortest round-trip decimal form, so write -> parse is
    the identity on Intrinsics.
    """
    k = (i.fx, 0.0, i.cx, 0.0, i.fy, i.cy, 0.0, 0.0, 1.0)
    lines = [
        f"image_width: {i.width}",
        f"image_height: {i.height}",
        f"distortion_model: {_DISTORTION_MODEL}",
        "D: [0.0, 0.0, 0.0, 0.0, 0.0]",
        "K: [" + ", ".join(repr(float(v)) for v in k) + "]",
        "",
    ]
    return "\n".join(lines).encode("ascii")


def parse_camera_info(data: bytes | str) -> Intrinsics:
    """Parse a camera-info YAML document into Intrinsics.

    Raises ParseError for malformed documents (with field/line context) and
    InconsistentKError when K does not have the zero-skew pinhole shape with
    bottom row [0, 0, 1].
    """
    doc = _load_yaml_mapping(data, what="camera-info")
    width = _require_positive_int(doc, "image_width")
    height = _require_positive_int(doc, "image_height")
    model = doc.get("distortion_model")
    if model is None:
        raise ParseError("missing field 'distortion_model'", field="distortion_model")
    if model != _DISTORTION_MODEL:
        raise ParseError(
            f"distortion_model must be {_DISTORTION_MODEL!r}, got {model!r}",
            field="distortion_model",
        )
    d = _require_number_list(doc, "D", 5)
    if any(v != 0.0 for v in d):
        raise ParseError("D must contain five zeros (no distortion model)", field="D")
    k = _require_number_list(doc, "K", 9)
    if k[1] != 0.0 or k[3] != 0.0:
        raise InconsistentKError("K must have zero skew terms", field="K")
    if k[6] != 0.0 or k[7] != 0.0 or k[8] != 1.0:
        raise InconsistentKError("K bottom row must be [0, 0, 1]", field="K")
    try:
        return Intrinsics(fx=k[0], fy=k[4], cx=k[2], cy=k[5], width=width, height=height)
    except InvalidIntrinsicsError as exc:
        raise ParseError(str(exc), field="K") from exc


# -- measurement file --------------------------------------------------------

MEASUREMENT_KEYS = ("Z", "W", "H", "X", "Y", "w", "h")


def parse_measurements(data: bytes | str) -> CalibrationMeasurement:
    """Parse a measurement YAML file with keys Z, W, H, X, Y (meters) and w, h (pixels)."""
    doc = _load_yaml_mapping(data, what="measurement")
    values = {}
    for key in MEASUREMENT_KEYS:
        if key not in doc:
            raise ParseError(f"missing field {key!r}", field=key)
        value = doc[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"field {key!r} must be a number", field=key)
        values[key] = value
    for key in ("w", "h"):
        if not isinstance(values[key], int):
            raise ParseError(f"field {key!r} must be an integer pixel count", field=key)
    return CalibrationMeasurement(
        distance_m=float(values["Z"]),
        width_m=float(values["W"]),
        height_m=float(values["H"]),
        offset_x_m=float(values["X"]),
        offset_y_m=float(values["Y"]),
        width_px=values["w"],
        height_px=values["h"],
    )


# -- shared YAML helpers -----------------------------------------------------


def _load_yaml_mapping(data: bytes | str, what: str) -> dict:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise ParseError(
            f"invalid YAML in {what} document: {exc}",
            line=None if line is None else line + 1,
        ) from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{what} document must be a YAML mapping")
    return doc


def _require_positive_int(doc: dict, key: str) -> int:
    if key not in doc:
        raise ParseError(f"missing field {key!r}", field=key)
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"field {key!r} must be an integer", field=key)
    if value <= 0:
        raise ParseError(f"field {key!r} must be positive", field=key)
    return value


def _require_number_list(doc: dict, key: str, length: int) -> list[float]:
    if key not in doc:
        raise ParseError(f"missing field {key!r}", field=key)
    value = doc[key]
    if (
        not isinstance(value, list)
        or len(value) != length
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise ParseError(f"field {key!r} must be a list of {length} numbers", field=key)
    return [float(v) for v in value]
