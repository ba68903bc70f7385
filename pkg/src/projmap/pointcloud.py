"""Point cloud ingestion: PCD v0.7 files and scene configs.

Supports ASCII and binary PCD with at least x/y/z float32 fields; extra
fields are skipped. Coordinates are stored as float32, matching the file
format, so write -> parse round-trips are exact for both encodings (ASCII
floats are emitted with their shortest round-trip decimal form).

A scene groups point cloud clusters with a display color and label each,
e.g. detected objects in white plus the manipulation target in green. Colors
are assigned per cluster by role; RGB data embedded in a PCD is ignored.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import MissingFileError, ParseError, UnsupportedEncodingError

__all__ = ["PointCloud", "Cluster", "Scene", "parse_pcd", "write_pcd", "load_scene"]

logger = logging.getLogger(__name__)

_HEADER_KEYS = (
    "VERSION",
    "FIELDS",
    "SIZE",
    "TYPE",
    "COUNT",
    "WIDTH",
    "HEIGHT",
    "VIEWPOINT",
    "POINTS",
    "DATA",
)
_REQUIRED_KEYS = ("VERSION", "FIELDS", "SIZE", "TYPE", "WIDTH", "HEIGHT", "POINTS", "DATA")


@dataclass(eq=False)
class PointCloud:
    """(N, 3) float32 coordinates in meters, bound to a named frame."""

    points: np.ndarray
    frame: str = "world"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float32).reshape(-1, 3).copy()
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if not isinstance(self.frame, str) or not self.frame:
            raise ValueError("frame must be a non-empty string")
        pts.flags.writeable = False
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self.frame == other.frame and np.array_equal(self.points, other.points)


@dataclass(frozen=True)
class Cluster:
    """One displayable group of points: cloud + opaque RGB color + label."""

    cloud: PointCloud
    color: tuple[int, int, int]
    label: str

    def __post_init__(self):
        color = tuple(self.color)
        if len(color) != 3 or not all(
            isinstance(c, int) and not isinstance(c, bool) and 0 <= c <= 255 for c in color
        ):
            raise ValueError(f"cluster {self.label!r}: color must be three ints in [0, 255]")
        if not isinstance(self.label, str) or not self.label:
            raise ValueError("cluster label must be a non-empty string")
        object.__setattr__(self, "color", color)


@dataclass(frozen=True)
class Scene:
    """Ordered collection of clusters; ordering decides z-buffer tie-breaks."""

    clusters: tuple[Cluster, ...]

    def __post_init__(self):
        clusters = tuple(self.clusters)
        labels = [c.label for c in clusters]
        seen = set()
        for label in labels:
            if label in seen:
                raise ValueError(f"duplicate cluster label {label!r}")
            seen.add(label)
        object.__setattr__(self, "clusters", clusters)

    def __len__(self) -> int:
        return len(self.clusters)


# -- PCD parsing ---------------------------------------------------------------


def parse_pcd(data: bytes, frame: str = "world") -> PointCloud:
    """Parse a PCD v0.7 document (ASCII or binary encoding).

    The header must declare x, y, z as float32 single-count fields; any other
    fields are skipped. Point order is preserved. Points with non-finite
    coordinates are dropped and the dropped count is reported via a warning
    log record.

    Raises:
        ParseError: malformed header or body (with line context where known).
        UnsupportedEncodingError: for binary_compressed data.
    """
    header, body, body_line = _split_header(data)
    meta = _interpret_header(header)

    names = meta["fields"]
    sizes = meta["size"]
    counts = meta["count"]
    n_points = meta["points"]
    encoding = meta["data"]

    # Token/byte layout of one record, used to locate x/y/z among extra fields.
    token_offsets: dict[str, int] = {}
    byte_offsets: dict[str, int] = {}
    tok = 0
    off = 0
    for name, size, count in zip(names, sizes, counts):
        token_offsets.setdefault(name, tok)
        byte_offsets.setdefault(name, off)
        tok += count
        off += size * count
    tokens_per_row = tok
    stride = off

    if encoding == "ascii":
        xyz = _parse_ascii_body(body, body_line, n_points, tokens_per_row, token_offsets)
    else:
        xyz = _parse_binary_body(body, n_points, stride, byte_offsets)

    finite = np.all(np.isfinite(xyz), axis=1)
    dropped = int(len(xyz) - finite.sum())
    if dropped:
        logger.warning("dropped %d point(s) with non-finite coordinates", dropped)
        xyz = xyz[finite]
    return PointCloud(points=xyz, frame=frame)


def _split_header(data: bytes) -> tuple[list[tuple[int, str, list[str]]], bytes, int]:
    """Split raw bytes into parsed header lines and the data body.

    Returns (entries, body, first_body_line) where each entry is
    (line_number, KEY, value_tokens). The body starts right after the DATA line.
    """
    if not isinstance(data, (bytes, bytearray)):
        raise ParseError("PCD input must be bytes")
    entries: list[tuple[int, str, list[str]]] = []
    pos = 0
    lineno = 0
    while pos <= len(data):
        nl = data.find(b"\n", pos)
        if nl < 0:
            raw, next_pos = data[pos:], len(data) + 1
        else:
            raw, next_pos = data[pos:nl], nl + 1
        lineno += 1
        try:
            line = raw.decode("ascii")
        except UnicodeDecodeError as exc:
            raise ParseError("header is not ASCII text", line=lineno) from exc
        stripped = line.strip()
        pos = next_pos
        if not stripped or stripped.startswith("#"):
            if nl < 0:
                break
            continue
        tokens = stripped.split()
        key = tokens[0]
        if key not in _HEADER_KEYS:
            raise ParseError(f"unknown header key {key!r}", line=lineno)
        entries.append((lineno, key, tokens[1:]))
        if key == "DATA":
            return entries, data[pos:], lineno + 1
        if nl < 0:
            break
    raise ParseError("missing DATA line", line=lineno)


def _interpret_header(entries: list[tuple[int, str, list[str]]]) -> dict:
    by_key: dict[str, tuple[int, list[str]]] = {}
    for lineno, key, values in entries:
        if key in by_key:
            raise ParseError(f"duplicate header key {key!r}", line=lineno)
        by_key[key] = (lineno, values)
    for key in _REQUIRED_KEYS:
        if key not in by_key:
            raise ParseError(f"missing header key {key!r}")

    def ints(key: str) -> tuple[int, list[int]]:
        lineno, values = by_key[key]
        try:
            return lineno, [int(v) for v in values]
        except ValueError as exc:
            raise ParseError(f"{key} values must be integers", line=lineno) from exc

    version_line, version = by_key["VERSION"]
    if version != ["0.7"] and version != [".7"]:
        raise ParseError(f"unsupported PCD version {' '.join(version)!r}", line=version_line)

    fields_line, names = by_key["FIELDS"]
    if not names:
        raise ParseError("FIELDS must name at least one field", line=fields_line)
    size_line, sizes = ints("SIZE")
    type_line, types = by_key["TYPE"]
    if "COUNT" in by_key:
        count_line, counts = ints("COUNT")
    else:
        count_line, counts = fields_line, [1] * len(names)

    if len(sizes) != len(names):
        raise ParseError("SIZE does not match FIELDS", line=size_line)
    if len(types) != len(names):
        raise ParseError("TYPE does not match FIELDS", line=type_line)
    if len(counts) != len(names):
        raise ParseError("COUNT does not match FIELDS", line=count_line)
    if any(s not in (1, 2, 4, 8) for s in sizes):
        raise ParseError("SIZE entries must be 1, 2, 4 or 8", line=size_line)
    if any(t not in ("F", "I", "U") for t in types):
        raise ParseError("TYPE entries must be F, I or U", line=type_line)
    if any(c < 1 for c in counts):
        raise ParseError("COUNT entries must be >= 1", line=count_line)

    width_line, widths = ints("WIDTH")
    height_line, heights = ints("HEIGHT")
    points_line, points = ints("POINTS")
    if len(widths) != 1 or widths[0] < 0:
        raise ParseError("WIDTH must be a single non-negative integer", line=width_line)
    if len(heights) != 1 or heights[0] < 0:
        raise ParseError("HEIGHT must be a single non-negative integer", line=height_line)
    if len(points) != 1 or points[0] < 0:
        raise ParseError("POINTS must be a single non-negative integer", line=points_line)
    if widths[0] * heights[0] != points[0]:
        raise ParseError(
            f"WIDTH x HEIGHT ({widths[0]}x{heights[0]}) does not equal POINTS {points[0]}",
            line=points_line,
        )

    data_line, data_values = by_key["DATA"]
    if len(data_values) != 1:
        raise ParseError("DATA must carry a single encoding token", line=data_line)
    encoding = data_values[0]
    if encoding == "binary_compressed":
        raise UnsupportedEncodingError("binary_compressed PCD is not supported", line=data_line)
    if encoding not in ("ascii", "binary"):
        raise ParseError(f"unknown DATA encoding {encoding!r}", line=data_line)

    for axis in ("x", "y", "z"):
        if axis not in names:
            raise ParseError(f"FIELDS must include {axis!r}", line=fields_line)
        idx = names.index(axis)
        if types[idx] != "F" or sizes[idx] != 4:
            raise ParseError(f"field {axis!r} must be float32 (TYPE F, SIZE 4)", line=fields_line)
        if counts[idx] != 1:
            raise ParseError(f"field {axis!r} must have COUNT 1", line=count_line)

    return {
        "fields": names,
        "size": sizes,
        "type": types,
        "count": counts,
        "points": points[0],
        "data": encoding,
    }


def _parse_ascii_body(
    body: bytes,
    first_line: int,
    n_points: int,
    tokens_per_row: int,
    token_offsets: dict[str, int],
) -> np.ndarray:
    try:
        text = body.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError("ascii data section contains non-ASCII bytes") from exc
    xyz = np.empty((n_points, 3), dtype=np.float32)
    row = 0
    cols = (token_offsets["x"], token_offsets["y"], token_offsets["z"])
    for offset, line in enumerate(text.split("\n")):
        stripped = line.strip()
        if not stripped:
            continue
        lineno = first_line + offset
        if row >= n_points:
            raise ParseError(f"more data rows than POINTS {n_points}", line=lineno)
        tokens = stripped.split()
        if len(tokens) != tokens_per_row:
            raise ParseError(
                f"expected {tokens_per_row} values per row, got {len(tokens)}", line=lineno
            )
        try:
            xyz[row] = [float(tokens[c]) for c in cols]
        except ValueError as exc:
            raise ParseError(f"bad numeric value in data row: {exc}", line=lineno) from exc
        row += 1
    if row != n_points:
        raise ParseError(f"header declares POINTS {n_points} but found {row} data row(s)")
    return xyz


def _parse_binary_body(
    body: bytes, n_points: int, stride: int, byte_offsets: dict[str, int]
) -> np.ndarray:
    expected = n_points * stride
    if len(body) < expected:
        raise ParseError(
            f"binary data truncated: expected {expected} bytes, got {len(body)}"
        )
    if len(body) > expected:
        raise ParseError(
            f"binary data has {len(body) - expected} trailing byte(s) beyond POINTS x stride"
        )
    raw = np.frombuffer(body, dtype=np.uint8).reshape(n_points, stride) if n_points else None
    xyz = np.empty((n_points, 3), dtype=np.float32)
    for col, axis in enumerate(("x", "y", "z")):
        if n_points:
            off = byte_offsets[axis]
            xyz[:, col] = raw[:, off : off + 4].copy().view("<f4")[:, 0]
    return xyz


# -- PCD writing ---------------------------------------------------------------


def write_pcd(pc: PointCloud, encoding: str = "ascii") -> bytes:
    """Serialize a cloud as a canonical PCD v0.7 document.

    ASCII rows carry shortest round-trip decimals of the float32 values;
    binary data is packed little-endian float32.
    """
    if encoding not in ("ascii", "binary"):
        raise ValueError(f"encoding must be 'ascii' or 'binary', got {encoding!r}")
    n = len(pc.points)
    header = (
        "# .PCD v0.7 - Point Cloud Data file format\n"
        "VERSION 0.7\n"
        "FIELDS x y z\n"
        "SIZE 4 4 4\n"
        "TYPE F F F\n"
        "COUNT 1 1 1\n"
        f"WIDTH {n}\n"
        "HEIGHT 1\n"
        "VIEWPOINT 0 0 0 1 0 0 0\n"
        f"POINTS {n}\n"
        f"DATA {encoding}\n"
    ).encode("ascii")
    if encoding == "ascii":
        rows = "".join(f"{row[0]} {row[1]} {row[2]}\n" for row in pc.points)
        return header + rows.encode("ascii")
    return header + pc.points.astype("<f4", copy=False).tobytes()


# -- scene config ----------------------------------------------------------------


def load_scene(config: bytes | str, base_dir) -> Scene:
    """Load a scene config YAML and the PCD files it references.

    The config carries a `clusters` list of entries
    {pcd: path, frame: name, color: [r, g, b], label: text}; PCD paths are
    resolved against `base_dir`.

    Raises ParseError for malformed configs (including duplicate labels) and
    MissingFileError when a referenced PCD does not exist.
    """
    base = Path(base_dir)
    text = config.decode("utf-8") if isinstance(config, bytes) else config
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise ParseError(
            f"invalid YAML in scene config: {exc}", line=None if line is None else line + 1
        ) from exc
    if not isinstance(doc, dict) or "clusters" not in doc:
        raise ParseError("scene config must be a mapping with a 'clusters' list", field="clusters")
    entries = doc["clusters"]
    if entries is None:
        entries = []
    if not isinstance(entries, list):
        raise ParseError("'clusters' must be a list", field="clusters")

    clusters = []
    for idx, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ParseError(f"cluster entry {idx} is not a mapping")
        for key in ("pcd", "frame", "color", "label"):
            if key not in entry:
                raise ParseError(f"cluster entry {idx} is missing {key!r}", field=key)
        if not isinstance(entry["pcd"], str) or not entry["pcd"]:
            raise ParseError(f"cluster entry {idx}: 'pcd' must be a path string", field="pcd")
        if not isinstance(entry["frame"], str) or not entry["frame"]:
            raise ParseError(f"cluster entry {idx}: 'frame' must be a frame name", field="frame")
        if not isinstance(entry["label"], str) or not entry["label"]:
            raise ParseError(f"cluster entry {idx}: 'label' must be non-empty", field="label")
        color = entry["color"]
        if (
            not isinstance(color, list)
            or len(color) != 3
            or not all(isinstance(c, int) and not isinstance(c, bool) and 0 <= c <= 255 for c in color)
        ):
            raise ParseError(
                f"cluster entry {idx}: 'color' must be three ints in [0, 255]", field="color"
            )
        path = base / entry["pcd"]
        if not path.is_file():
            raise MissingFileError(path)
        cloud = parse_pcd(path.read_bytes(), frame=entry["frame"])
        clusters.append(Cluster(cloud=cloud, color=tuple(color), label=entry["label"]))
    try:
        return Scene(clusters=tuple(clusters))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
