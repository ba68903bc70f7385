"""Rigid transforms and the named-frame tree used to pose the projector.

A :class:`RigidTransform` is a unit quaternion plus a translation. A
:class:`FrameTree` is a static hierarchy of named frames connected by
parent-from-child transforms; :func:`lookup` chains edges to answer pose
queries between any two frames. All camera/projector frames use the optical
convention: z forward along the projection axis, x right, y down.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
import yaml

from .errors import ParseError, UnknownFrameError

__all__ = [
    "RigidTransform",
    "FrameTree",
    "compose",
    "invert",
    "transform_point",
    "transform_points",
    "rotation_matrix",
    "lookup",
    "load_frame_tree",
]


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation (unit quaternion, scalar-first w,x,y,z) plus translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        q = np.array(self.rotation, dtype=np.float64).reshape(4)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(q)) or not np.all(np.isfinite(t)):
            raise ValueError("transform components must be finite")
        norm = float(np.linalg.norm(q))
        if norm < 1e-12:
            raise ValueError("quaternion norm is zero")
        q /= norm
        q.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_axis_angle(cls, axis, angle_rad: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        a = np.asarray(axis, dtype=np.float64).reshape(3)
        norm = float(np.linalg.norm(a))
        if norm < 1e-12:
            raise ValueError("rotation axis must be nonzero")
        a = a / norm
        half = 0.5 * angle_rad
        q = np.concatenate(([np.cos(half)], np.sin(half) * a))
        return cls(q, translation)


def _quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def rotation_matrix(t: RigidTransform) -> np.ndarray:
    """3x3 rotation matrix equivalent to the transform's quaternion."""
    w, x, y, z = t.rotation
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Chain two transforms: the result applies b first, then a.

    The quaternion is renormalized by construction, so long chains do not
    drift away from unit norm.
    """
    q = _quat_multiply(a.rotation, b.rotation)
    t = transform_point(a, b.translation)
    return RigidTransform(q, t)


def invert(t: RigidTransform) -> RigidTransform:
    """Inverse transform; compose(t, invert(t)) is the identity."""
    w, x, y, z = t.rotation
    q_inv = np.array([w, -x, -y, -z])
    r_inv = rotation_matrix(RigidTransform(q_inv, np.zeros(3)))
    return RigidTransform(q_inv, -(r_inv @ t.translation))


def transform_points(t: RigidTransform, points: np.ndarray) -> np.ndarray:
    """Apply rotation then translation to an (N, 3) array of points."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    r = rotation_matrix(t)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    out = np.empty_like(pts)
    # Explicit elementwise form keeps results bit-identical regardless of batch size.
    out[:, 0] = r[0, 0] * x + r[0, 1] * y + r[0, 2] * z + t.translation[0]
    out[:, 1] = r[1, 0] * x + r[1, 1] * y + r[1, 2] * z + t.translation[1]
    out[:, 2] = r[2, 0] * x + r[2, 1] * y + r[2, 2] * z + t.translation[2]
    return out


def transform_point(t: RigidTransform, point) -> np.ndarray:
    """Apply rotation then translation to one 3-vector."""
    p = np.asarray(point, dtype=np.float64).reshape(1, 3)
    return transform_points(t, p)[0]


class FrameTree:
    """Immutable hierarchy of named frames.

    Every frame except the root has exactly one parent; each edge stores the
    parent-from-child transform. Construction rejects duplicate names, cycles,
    and frames unreachable from the root.
    """

    def __init__(self, root: str, edges: Mapping[str, tuple[str, RigidTransform]]):
        _require_name(root)
        frames = dict(edges)
        for child, (parent, transform) in frames.items():
            _require_name(child)
            _require_name(parent)
            if not isinstance(transform, RigidTransform):
                raise ValueError(f"edge {child!r} does not carry a RigidTransform")
        if root in frames:
            raise ValueError(f"root frame {root!r} must not have a parent")
        limit = len(frames) + 1
        for child in frames:
            seen = {child}
            current = child
            for _ in range(limit):
                current = frames[current][0]
                if current == root:
                    break
                if current in seen or current not in frames:
                    raise ValueError(f"frame {child!r} is not connected to root {root!r}")
                seen.add(current)
            else:
                raise ValueError(f"cycle detected while walking up from frame {child!r}")
        self._root = root
        self._edges = MappingProxyType(frames)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str, RigidTransform]]) -> "FrameTree":
        """Build a tree from (child, parent, parent_from_child) triples; the root is inferred."""
        mapping: dict[str, tuple[str, RigidTransform]] = {}
        parents: set[str] = set()
        for child, parent, transform in edges:
            _require_name(child)
            _require_name(parent)
            if child in mapping:
                raise ValueError(f"duplicate frame {child!r}")
            mapping[child] = (parent, transform)
            parents.add(parent)
        roots = sorted(parents - mapping.keys())
        if not roots:
            raise ValueError("no root frame; the transform entries form a cycle")
        if len(roots) > 1:
            raise ValueError(f"multiple root frames: {', '.join(repr(r) for r in roots)}")
        return cls(roots[0], mapping)

    @property
    def root(self) -> str:
        return self._root

    @property
    def frames(self) -> Mapping[str, tuple[str, RigidTransform]]:
        return self._edges

    def __contains__(self, name: str) -> bool:
        return name == self._root or name in self._edges

    def names(self) -> list[str]:
        return [self._root, *self._edges.keys()]

    def root_from(self, frame: str) -> RigidTransform:
        """Transform mapping coordinates in `frame` into the root frame."""
        if frame not in self:
            raise UnknownFrameError(frame)
        acc = RigidTransform.identity()
        current = frame
        while current != self._root:
            parent, edge = self._edges[current]
            acc = compose(edge, acc)
            current = parent
        return acc

    def lookup(self, source: str, target: str) -> RigidTransform:
        """Target-from-source transform between any two frames of the tree."""
        return compose(invert(self.root_from(target)), self.root_from(source))


def lookup(tree: FrameTree, source: str, target: str) -> RigidTransform:
    """Transform that maps points expressed in `source` into `target` coordinates."""
    return tree.lookup(source, target)


def _require_name(name) -> None:
    if not isinstance(name, str) or not name:
        raise ValueError(f"frame names must be non-empty strings, got {name!r}")


def load_frame_tree(data: bytes | str) -> FrameTree:
    """Parse a frame-tree config: a YAML list of
    {child, parent, translation: [x,y,z], rotation_wxyz: [w,x,y,z]} entries.

    Quaternions are normalized on load; tree invariants are validated.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise ParseError(f"invalid YAML: {exc}", line=None if line is None else line + 1) from exc
    if doc is None:
        doc = []
    if not isinstance(doc, list):
        raise ParseError("frame config must be a list of transform entries")
    edges = []
    for idx, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise ParseError(f"entry {idx} is not a mapping")
        for key in ("child", "parent", "translation", "rotation_wxyz"):
            if key not in entry:
                raise ParseError(f"entry {idx} is missing {key!r}", field=key)
        translation = _number_list(entry["translation"], 3, idx, "translation")
        quat = _number_list(entry["rotation_wxyz"], 4, idx, "rotation_wxyz")
        child, parent = entry["child"], entry["parent"]
        if not isinstance(child, str) or not isinstance(parent, str):
            raise ParseError(f"entry {idx} frame names must be strings")
        try:
            edges.append((child, parent, RigidTransform(np.array(quat), np.array(translation))))
        except ValueError as exc:
            raise ParseError(f"entry {idx}: {exc}") from exc
    try:
        return FrameTree.from_edges(edges)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _number_list(value, length: int, idx: int, field: str) -> list[float]:
    if (
        not isinstance(value, list)
        or len(value) != length
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise ParseError(f"entry {idx}: {field} must be a list of {length} numbers", field=field)
    return [float(v) for v in value]
