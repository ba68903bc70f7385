"""Shared test utilities: independent oracles and randomized input builders.

The oracles deliberately avoid the library's own code paths: rotations go
through scipy, projection through a homogeneous K multiply, and the z-buffer
oracle resolves every pixel by brute-force minimum over all candidate splats.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from projmap import FrameTree, Intrinsics, PointCloud, RigidTransform, Scene
from projmap.pointcloud import Cluster

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


# -- scipy-backed rotation oracle -----------------------------------------------


def matrix_from_wxyz(q) -> np.ndarray:
    w, x, y, z = q
    return Rotation.from_quat([x, y, z, w]).as_matrix()


def homogeneous(t: RigidTransform) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = matrix_from_wxyz(t.rotation)
    m[:3, 3] = t.translation
    return m


def wxyz_from_matrix(m) -> np.ndarray:
    x, y, z, w = Rotation.from_matrix(m).as_quat()
    return np.array([w, x, y, z])


def random_unit_quaternion(rng) -> np.ndarray:
    q = rng.normal(size=4)
    while np.linalg.norm(q) < 1e-3:
        q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def random_transform(rng, span: float = 2.0) -> RigidTransform:
    return RigidTransform(random_unit_quaternion(rng), rng.uniform(-span, span, size=3))


# -- independent projection / render oracle --------------------------------------


def oracle_project(point, k: np.ndarray) -> tuple[float, float]:
    uvw = k @ np.asarray(point, dtype=np.float64)
    return uvw[0] / uvw[2], uvw[1] / uvw[2]


def oracle_render(scene: Scene, tree: FrameTree, projector_frame: str, i: Intrinsics, radius: int):
    """Brute-force per-pixel minimum-depth render.

    For every pixel, consider every splat whose square covers it and pick the
    smallest depth; exact depth ties go to the earliest point in scene order.
    Returns (pixels, depth, winner) arrays shaped like the renderer's output.
    """
    w, h = i.width, i.height
    k = np.array([[i.fx, 0.0, i.cx], [0.0, i.fy, i.cy], [0.0, 0.0, 1.0]])
    cu, cv, zs, cols, seqs = [], [], [], [], []
    seq = 0
    for cluster in scene.clusters:
        t = tree.lookup(cluster.cloud.frame, projector_frame)
        r = matrix_from_wxyz(t.rotation)
        for p in np.asarray(cluster.cloud.points, dtype=np.float64):
            q = r @ p + t.translation
            if q[2] > 0.01:
                u, v = oracle_project(q, k)
                px, py = math.floor(u + 0.5), math.floor(v + 0.5)
                if 0 <= px < w and 0 <= py < h:
                    cu.append(px)
                    cv.append(py)
                    zs.append(q[2])
                    cols.append(cluster.color)
                    seqs.append(seq)
            seq += 1

    pixels = np.zeros((h, w, 3), dtype=np.uint8)
    depth = np.full((h, w), np.inf)
    winner = np.full((h, w), -1, dtype=np.int64)
    if not cu:
        return pixels, depth, winner

    cu = np.array(cu)
    cv = np.array(cv)
    zs = np.array(zs)
    cols = np.array(cols, dtype=np.uint8)
    seqs = np.array(seqs)

    gx, gy = np.meshgrid(np.arange(w), np.arange(h))
    gx = gx.reshape(-1, 1)
    gy = gy.reshape(-1, 1)
    cover = (np.abs(cu[None, :] - gx) <= radius) & (np.abs(cv[None, :] - gy) <= radius)
    cand = np.where(cover, zs[None, :], np.inf)
    best = cand.min(axis=1)
    lit = np.isfinite(best)
    # first candidate (lowest scene-order index) achieving the minimum depth
    first = np.argmax(cover & (cand == best[:, None]), axis=1)
    flat_idx = np.nonzero(lit)[0]
    pixels.reshape(-1, 3)[flat_idx] = cols[first[lit]]
    depth.reshape(-1)[flat_idx] = best[lit]
    winner.reshape(-1)[flat_idx] = seqs[first[lit]]
    return pixels, depth, winner


# -- randomized scene builders ----------------------------------------------------


def random_intrinsics(rng) -> Intrinsics:
    width = int(rng.integers(64, 1600))
    height = int(rng.integers(64, 1200))
    return Intrinsics(
        fx=float(rng.uniform(200, 5000)),
        fy=float(rng.uniform(200, 5000)),
        cx=float(rng.uniform(0.25, 0.75) * width),
        cy=float(rng.uniform(0.25, 0.75) * height),
        width=width,
        height=height,
    )


def random_tree(rng) -> FrameTree:
    return FrameTree.from_edges(
        [
            ("base", "world", random_transform(rng)),
            ("sensor", "base", random_transform(rng)),
            ("mount", "base", random_transform(rng)),
            ("projector", "mount", random_transform(rng)),
        ]
    )


def frustum_scene(
    rng,
    tree: FrameTree,
    projector_frame: str,
    i: Intrinsics,
    n_points: int,
    cloud_frames=("sensor", "world"),
    depth_range=(0.3, 6.0),
    n_clusters: int = 3,
) -> Scene:
    """Scene whose points are sampled inside the projector frustum.

    Points are drawn as (pixel, depth) pairs, unprojected into the projector
    optical frame, and re-expressed in randomly chosen cloud frames.
    """
    palette = [(255, 255, 255), (0, 255, 0), (255, 128, 0), (64, 64, 255)]
    counts = _split_count(rng, n_points, n_clusters)
    clusters = []
    for ci, count in enumerate(counts):
        u = rng.uniform(0.0, i.width - 1.0, size=count)
        v = rng.uniform(0.0, i.height - 1.0, size=count)
        z = rng.uniform(*depth_range, size=count)
        optical = np.column_stack(((u - i.cx) * z / i.fx, (v - i.cy) * z / i.fy, z))
        frame = cloud_frames[int(rng.integers(0, len(cloud_frames)))]
        t = tree.lookup(projector_frame, frame)
        r = matrix_from_wxyz(t.rotation)
        pts = optical @ r.T + t.translation
        clusters.append(
            Cluster(
                cloud=PointCloud(points=pts, frame=frame),
                color=palette[ci % len(palette)],
                label=f"cluster_{ci}",
            )
        )
    return Scene(clusters=tuple(clusters))


def _split_count(rng, total: int, parts: int) -> list[int]:
    cuts = sorted(rng.integers(0, total + 1, size=parts - 1)) if parts > 1 else []
    edges = [0, *cuts, total]
    return [edges[k + 1] - edges[k] for k in range(parts)]
