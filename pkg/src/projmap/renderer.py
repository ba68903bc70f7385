"""Virtual camera: renders scenes and floor paths from the projector's pose.

Point clusters are splatted as axis-aligned squares with a per-pixel nearest
depth z-buffer; navigation paths are extruded into ground-plane quads and
rasterized with a strict pixel-center coverage rule (edge ties go to top-left
edges). Rendering is deterministic: identical inputs produce bit-identical
buffers. Background pixels stay black, the projector's no-light state.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass

import numpy as np
import yaml
from PIL import Image

from .camera import Intrinsics
from .errors import DimensionMismatchError, ParseError, UnknownFrameError
from .pointcloud import Scene
from .transforms import FrameTree, lookup, transform_points

__all__ = [
    "NEAR_PLANE_M",
    "ImageBuffer",
    "RenderOptions",
    "SplatResult",
    "round_pixel",
    "splat_scene",
    "render_scene",
    "render_path",
    "write_image",
    "parse_ppm",
    "parse_path_file",
]

logger = logging.getLogger(__name__)

NEAR_PLANE_M = 0.01

_MAX_SPLAT_RADIUS = 32
_BLACK = (0, 0, 0)


@dataclass(eq=False)
class ImageBuffer:
    """Rendered frame: row-major RGB bytes plus per-pixel depth in meters.

    Background pixels are black with +inf depth; every lit pixel carries the
    finite depth of the splat or triangle that won it.
    """

    width: int
    height: int
    pixels: np.ndarray
    depth: np.ndarray

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width, 3) or self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be uint8 with shape (height, width, 3)")
        if self.depth.shape != (self.height, self.width) or self.depth.dtype != np.float64:
            raise ValueError("depth must be float64 with shape (height, width)")

    @classmethod
    def blank(cls, width: int, height: int) -> "ImageBuffer":
        if width <= 0 or height <= 0:
            raise DimensionMismatchError(f"image dimensions must be positive, got {width}x{height}")
        return cls(
            width=width,
            height=height,
            pixels=np.zeros((height, width, 3), dtype=np.uint8),
            depth=np.full((height, width), np.inf, dtype=np.float64),
        )


@dataclass(frozen=True)
class RenderOptions:
    """Options for point rendering; the background is always black."""

    splat_radius: int = 2

    def __post_init__(self):
        r = self.splat_radius
        if isinstance(r, bool) or not isinstance(r, int):
            raise ValueError("splat_radius must be an integer")
        if not 0 <= r <= _MAX_SPLAT_RADIUS:
            raise ValueError(f"splat_radius must be in [0, {_MAX_SPLAT_RADIUS}], got {r}")


@dataclass(eq=False)
class SplatResult:
    """Buffer plus the bookkeeping needed to trace lit pixels back to points.

    Points get global sequence indices in scene order (cluster-major, point
    order within a cluster). `winner` holds the sequence index that owns each
    pixel (-1 where unlit). Per point: `center_px`/`center_py` are the rounded
    center pixel (-1 when culled by the near plane or frustum) and `depth` is
    the projector-frame z of every point.
    """

    buffer: ImageBuffer
    winner: np.ndarray
    center_px: np.ndarray
    center_py: np.ndarray
    depth: np.ndarray


def round_pixel(u, v):
    """Continuous pixel coordinates to the integer pixel lighting them.

    Rounds half-up per axis, matching the splat placement rule: pixel (0, 0)
    is centered at continuous (0.0, 0.0).
    """
    return int(math.floor(u + 0.5)), int(math.floor(v + 0.5))


def splat_scene(
    scene: Scene,
    tree: FrameTree,
    projector_frame: str,
    intrinsics: Intrinsics,
    opts: RenderOptions | None = None,
) -> SplatResult:
    """Project every cluster into the projector frame and z-buffer the splats.

    Each surviving point lights a filled square of side 2*splat_radius + 1
    centered on its rounded pixel, clipped at the borders. Points are culled
    when their projector-frame depth is <= the near plane or their center
    pixel falls outside the image. Ties at exactly equal depth go to the
    earliest point in scene order.
    """
    opts = opts or RenderOptions()
    if intrinsics.width <= 0 or intrinsics.height <= 0:
        raise DimensionMismatchError(
            f"intrinsics describe a zero-sized image: {intrinsics.width}x{intrinsics.height}"
        )
    if projector_frame not in tree:
        raise UnknownFrameError(projector_frame)
    w, h = intrinsics.width, intrinsics.height
    buf = ImageBuffer.blank(w, h)
    n_total = sum(len(c.cloud) for c in scene.clusters)
    winner = np.full((h, w), -1, dtype=np.int64)
    center_px = np.full(n_total, -1, dtype=np.int64)
    center_py = np.full(n_total, -1, dtype=np.int64)
    depth_all = np.full(n_total, np.nan, dtype=np.float64)
    colors = np.zeros((n_total, 3), dtype=np.uint8)

    pix_parts: list[np.ndarray] = []
    depth_parts: list[np.ndarray] = []
    seq_parts: list[np.ndarray] = []

    base = 0
    for cluster in scene.clusters:
        n = len(cluster.cloud)
        if n == 0:
            continue
        t = lookup(tree, cluster.cloud.frame, projector_frame)
        cam = transform_points(t, cluster.cloud.points)
        z = cam[:, 2]
        depth_all[base : base + n] = z
        colors[base : base + n] = cluster.color

        vis = np.nonzero(z > NEAR_PLANE_M)[0]
        if vis.size:
            u = intrinsics.fx * cam[vis, 0] / z[vis] + intrinsics.cx
            v = intrinsics.fy * cam[vis, 1] / z[vis] + intrinsics.cy
            px = np.floor(u + 0.5).astype(np.int64)
            py = np.floor(v + 0.5).astype(np.int64)
            inb = (px >= 0) & (px < w) & (py >= 0) & (py < h)
            kept = vis[inb]
            center_px[base + kept] = px[inb]
            center_py[base + kept] = py[inb]
            if kept.size:
                pix, dep, seq = _expand_splats(
                    px[inb], py[inb], z[kept], base + kept, opts.splat_radius, w, h
                )
                pix_parts.append(pix)
                depth_parts.append(dep)
                seq_parts.append(seq)
        base += n

    if pix_parts:
        pix = np.concatenate(pix_parts)
        dep = np.concatenate(depth_parts)
        seq = np.concatenate(seq_parts)
        # Per pixel: smallest depth wins, equal depths go to the smallest
        # sequence index (first cluster, then lowest point index).
        order = np.lexsort((seq, dep, pix))
        pix, dep, seq = pix[order], dep[order], seq[order]
        first = np.ones(len(pix), dtype=bool)
        first[1:] = pix[1:] != pix[:-1]
        pix, dep, seq = pix[first], dep[first], seq[first]
        buf.depth.reshape(-1)[pix] = dep
        buf.pixels.reshape(-1, 3)[pix] = colors[seq]
        winner.reshape(-1)[pix] = seq

    return SplatResult(
        buffer=buf, winner=winner, center_px=center_px, center_py=center_py, depth=depth_all
    )


def _expand_splats(px, py, z, seq, radius, w, h):
    """Expand center pixels into clipped splat squares as flat pixel ids."""
    if radius == 0:
        return py * w + px, z, seq
    offs = np.arange(-radius, radius + 1, dtype=np.int64)
    dx, dy = np.meshgrid(offs, offs)
    dx = dx.ravel()
    dy = dy.ravel()
    k = dx.size
    ex = (px[:, None] + dx[None, :]).ravel()
    ey = (py[:, None] + dy[None, :]).ravel()
    ez = np.repeat(z, k)
    eseq = np.repeat(seq, k)
    inside = (ex >= 0) & (ex < w) & (ey >= 0) & (ey < h)
    return ey[inside] * w + ex[inside], ez[inside], eseq[inside]


def render_scene(
    scene: Scene,
    tree: FrameTree,
    projector_frame: str,
    intrinsics: Intrinsics,
    opts: RenderOptions | None = None,
) -> ImageBuffer:
    """Render the scene's clusters from the projector's pose."""
    return splat_scene(scene, tree, projector_frame, intrinsics, opts).buffer


# -- ground-path rendering -----------------------------------------------------


def render_path(
    path_xy,
    ground_frame: str,
    band_width: float,
    color: tuple[int, int, int],
    tree: FrameTree,
    projector_frame: str,
    intrinsics: Intrinsics,
    opts: RenderOptions | None = None,
) -> ImageBuffer:
    """Render a navigation path as a band of light on the ground plane.

    Each polyline segment (2D points, z=0 in the ground frame) is extruded
    into a quad of the given width, split into two triangles, transformed to
    the projector frame, near-plane clipped, and rasterized with the shared
    z-buffer rule. Zero-length segments are skipped; their count is reported
    via a warning log record.
    """
    if not (isinstance(band_width, (int, float)) and not isinstance(band_width, bool)):
        raise ValueError("band_width must be a number")
    if not band_width > 0:
        raise ValueError(f"band_width must be positive, got {band_width}")
    pts = np.asarray(path_xy, dtype=np.float64).reshape(-1, 2)
    if pts.size and not np.all(np.isfinite(pts)):
        raise ValueError("path vertices must be finite")
    if intrinsics.width <= 0 or intrinsics.height <= 0:
        raise DimensionMismatchError(
            f"intrinsics describe a zero-sized image: {intrinsics.width}x{intrinsics.height}"
        )
    t = lookup(tree, ground_frame, projector_frame)
    buf = ImageBuffer.blank(intrinsics.width, intrinsics.height)

    half = band_width / 2.0
    degenerate = 0
    for a, b in zip(pts[:-1], pts[1:]):
        seg = b - a
        length = math.hypot(seg[0], seg[1])
        if length == 0.0:
            degenerate += 1
            continue
        d = seg / length
        n = np.array([-d[1], d[0]])
        quad = np.array(
            [
                [a[0] + n[0] * half, a[1] + n[1] * half, 0.0],
                [b[0] + n[0] * half, b[1] + n[1] * half, 0.0],
                [b[0] - n[0] * half, b[1] - n[1] * half, 0.0],
                [a[0] - n[0] * half, a[1] - n[1] * half, 0.0],
            ]
        )
        cam = transform_points(t, quad)
        for tri in ((0, 1, 2), (0, 2, 3)):
            _raster_triangle(buf, cam[list(tri)], color, intrinsics)
    if degenerate:
        logger.warning("skipped %d degenerate (zero-length) path segment(s)", degenerate)
    return buf


def _clip_near(tri_cam: np.ndarray) -> np.ndarray:
    """Clip a camera-space triangle against the near plane (keep z >= near)."""
    out = []
    n = len(tri_cam)
    for i in range(n):
        cur = tri_cam[i]
        nxt = tri_cam[(i + 1) % n]
        cur_in = cur[2] >= NEAR_PLANE_M
        nxt_in = nxt[2] >= NEAR_PLANE_M
        if cur_in:
            out.append(cur)
        if cur_in != nxt_in:
            frac = (NEAR_PLANE_M - cur[2]) / (nxt[2] - cur[2])
            crossing = cur + frac * (nxt - cur)
            crossing[2] = NEAR_PLANE_M
            out.append(crossing)
    return np.array(out) if out else np.empty((0, 3))


def _raster_triangle(buf: ImageBuffer, tri_cam: np.ndarray, color, intrinsics: Intrinsics) -> None:
    poly = _clip_near(tri_cam)
    if len(poly) < 3:
        return
    z = poly[:, 2]
    sx = intrinsics.fx * poly[:, 0] / z + intrinsics.cx
    sy = intrinsics.fy * poly[:, 1] / z + intrinsics.cy
    for k in range(1, len(poly) - 1):
        idx = (0, k, k + 1)
        cov, zpix, x0, y0, x1, y1 = _triangle_coverage(
            np.column_stack((sx[list(idx)], sy[list(idx)])),
            z[list(idx)],
            buf.width,
            buf.height,
        )
        if cov is None:
            continue
        sub_depth = buf.depth[y0 : y1 + 1, x0 : x1 + 1]
        update = cov & (zpix < sub_depth)
        sub_depth[update] = zpix[update]
        buf.pixels[y0 : y1 + 1, x0 : x1 + 1][update] = color


def _triangle_coverage(v2d: np.ndarray, z: np.ndarray, width: int, height: int):
    """Pixel coverage and interpolated depth for one screen-space triangle.

    Coverage rule: the pixel center lies strictly inside the triangle; centers
    exactly on an edge count only for top or left edges. Depth is perspective
    correct (1/z interpolated via screen-space barycentrics).

    Returns (cov, zpix, x0, y0, x1, y1) over the clamped bounding box, or
    (None, ...) when nothing is covered.
    """
    (x0f, y0f), (x1f, y1f), (x2f, y2f) = v2d
    z0, z1, z2 = z
    area2 = (x1f - x0f) * (y2f - y0f) - (y1f - y0f) * (x2f - x0f)
    if area2 == 0.0:
        return None, None, 0, 0, 0, 0
    if area2 < 0.0:
        (x1f, y1f, z1), (x2f, y2f, z2) = (x2f, y2f, z2), (x1f, y1f, z1)
        area2 = -area2

    x_lo = max(0, math.ceil(min(x0f, x1f, x2f)))
    x_hi = min(width - 1, math.floor(max(x0f, x1f, x2f)))
    y_lo = max(0, math.ceil(min(y0f, y1f, y2f)))
    y_hi = min(height - 1, math.floor(max(y0f, y1f, y2f)))
    if x_lo > x_hi or y_lo > y_hi:
        return None, None, 0, 0, 0, 0

    gx, gy = np.meshgrid(
        np.arange(x_lo, x_hi + 1, dtype=np.float64),
        np.arange(y_lo, y_hi + 1, dtype=np.float64),
    )

    def edge(ax, ay, bx, by):
        values = (bx - ax) * (gy - ay) - (by - ay) * (gx - ax)
        dy = by - ay
        dx = bx - ax
        top_left = dy < 0.0 or (dy == 0.0 and dx > 0.0)
        return values, top_left

    e01, tl01 = edge(x0f, y0f, x1f, y1f)
    e12, tl12 = edge(x1f, y1f, x2f, y2f)
    e20, tl20 = edge(x2f, y2f, x0f, y0f)
    cov = (
        ((e01 > 0.0) | ((e01 == 0.0) & tl01))
        & ((e12 > 0.0) | ((e12 == 0.0) & tl12))
        & ((e20 > 0.0) | ((e20 == 0.0) & tl20))
    )
    if not cov.any():
        return None, None, 0, 0, 0, 0
    lam0 = e12 / area2
    lam1 = e20 / area2
    lam2 = e01 / area2
    inv_z = lam0 / z0 + lam1 / z1 + lam2 / z2
    with np.errstate(divide="ignore"):
        zpix = 1.0 / inv_z
    return cov, zpix, x_lo, y_lo, x_hi, y_hi


# -- image files -----------------------------------------------------------------


def write_image(buf: ImageBuffer, format: str = "ppm") -> bytes:
    """Encode a buffer as canonical binary PPM (P6) or lossless PNG bytes."""
    if format == "ppm":
        header = f"P6\n{buf.width} {buf.height}\n255\n".encode("ascii")
        return header + buf.pixels.tobytes()
    if format == "png":
        image = Image.frombytes("RGB", (buf.width, buf.height), buf.pixels.tobytes())
        out = io.BytesIO()
        image.save(out, format="PNG")
        return out.getvalue()
    raise ValueError(f"unsupported image format {format!r}")


def parse_ppm(data: bytes) -> np.ndarray:
    """Decode binary PPM (P6) into an (h, w, 3) uint8 array."""
    if not data.startswith(b"P6"):
        raise ParseError("not a binary PPM (P6) document")
    tokens: list[int] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise ParseError(f"bad PPM header token {token!r}")
        tokens.append(int(token))
    width, height, maxval = tokens
    if maxval != 255:
        raise ParseError(f"unsupported PPM maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos:]
    expected = width * height * 3
    if len(payload) != expected:
        raise ParseError(f"PPM payload is {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


# -- path file -------------------------------------------------------------------


def parse_path_file(data: bytes | str) -> tuple[str, float, np.ndarray]:
    """Parse a path YAML {frame, band_width_m, points: [[x, y], ...]}.

    Returns (frame, band_width_m, (N, 2) float64 vertices). Positivity of the
    band width is enforced at render time so CLI overrides stay possible.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise ParseError(
            f"invalid YAML in path file: {exc}", line=None if line is None else line + 1
        ) from exc
    if not isinstance(doc, dict):
        raise ParseError("path file must be a YAML mapping")
    for key in ("frame", "band_width_m", "points"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}", field=key)
    frame = doc["frame"]
    if not isinstance(frame, str) or not frame:
        raise ParseError("'frame' must be a non-empty frame name", field="frame")
    band = doc["band_width_m"]
    if isinstance(band, bool) or not isinstance(band, (int, float)):
        raise ParseError("'band_width_m' must be a number", field="band_width_m")
    raw_points = doc["points"]
    if raw_points is None:
        raw_points = []
    if not isinstance(raw_points, list):
        raise ParseError("'points' must be a list of [x, y] pairs", field="points")
    for idx, p in enumerate(raw_points):
        if (
            not isinstance(p, list)
            or len(p) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
        ):
            raise ParseError(f"point {idx} must be an [x, y] number pair", field="points")
    points = np.asarray(raw_points, dtype=np.float64).reshape(-1, 2)
    return frame, float(band), points
