"""Spatial exports: world point clouds from depth frames and gaze dwell."""

from __future__ import annotations

import numpy as np

from ..memory3d import CameraModel


def depth_frame_points(depth: np.ndarray, cam: CameraModel, stride: int = 1) -> np.ndarray:
    """Unproject every stride-th pixel with positive depth into world space."""
    if stride < 1:
        raise ValueError("stride must be at least 1")
    depth = np.asarray(depth, dtype=np.float64)
    vs, us = np.meshgrid(np.arange(0, depth.shape[0], stride),
                         np.arange(0, depth.shape[1], stride), indexing="ij")
    us = us.ravel()
    vs = vs.ravel()
    ds = depth[vs, us]
    keep = ds > 0
    us, vs, ds = us[keep], vs[keep], ds[keep]
    pts_cam = np.stack([(us - cam.cx) * ds / cam.fx,
                        (vs - cam.cy) * ds / cam.fy,
                        ds], axis=1)
    return pts_cam @ cam.rotation.T + cam.translation


def build_point_cloud(frames: list[tuple[np.ndarray, CameraModel]],
                      stride: int = 1) -> np.ndarray:
    parts = [depth_frame_points(depth, cam, stride) for depth, cam in frames]
    if not parts:
        return np.zeros((0, 3))
    return np.vstack(parts)


def ply_text(points: np.ndarray) -> str:
    points = np.asarray(points, dtype=np.float64)
    lines = ["ply", "format ascii 1.0", f"element vertex {len(points)}",
             "property float x", "property float y", "property float z",
             "end_header"]
    lines.extend(f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f}" for p in points)
    return "\n".join(lines) + "\n"


def write_ply(points: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write(ply_text(points))


DEFAULT_GAZE_DEPTH_M = 1.5


def gaze_points(samples: list[tuple[int, np.ndarray]],
                poses: list[tuple[int, CameraModel]],
                depth_m: float = DEFAULT_GAZE_DEPTH_M) -> list[tuple[int, np.ndarray]]:
    """Cast each gaze ray to a fixed depth through the latest camera pose.

    Samples that precede the first pose are dropped; there is nothing to
    anchor them to.
    """
    if depth_m <= 0:
        raise ValueError("depth_m must be positive")
    out = []
    pose_i = -1
    for ts, direction in sorted(samples, key=lambda s: s[0]):
        while pose_i + 1 < len(poses) and poses[pose_i + 1][0] <= ts:
            pose_i += 1
        if pose_i < 0:
            continue
        cam = poses[pose_i][1]
        d = np.asarray(direction, dtype=np.float64)
        norm = np.linalg.norm(d)
        if norm == 0:
            continue
        out.append((ts, cam.rotation @ (d / norm * depth_m) + cam.translation))
    return out


def dwell_by_object(points: list[tuple[int, np.ndarray]],
                    objects: list[tuple[int, np.ndarray]],
                    end_ns: int, radius_m: float = 0.3) -> dict[int, float]:
    """Seconds of gaze near each object position.

    Each gaze point holds until the next sample (the last holds to end_ns)
    and is attributed to the nearest object within the radius, if any.
    """
    dwell = {object_id: 0.0 for object_id, _ in objects}
    for i, (ts, point) in enumerate(points):
        until = points[i + 1][0] if i + 1 < len(points) else max(end_ns, ts)
        best = None  # (distance, object_id); ties keep the earliest listed
        for object_id, pos in objects:
            dist = float(np.linalg.norm(np.asarray(pos, dtype=np.float64) - point))
            if dist <= radius_m and (best is None or dist < best[0]):
                best = (dist, object_id)
        if best is not None:
            dwell[best[1]] += (until - ts) / 1e9
    return dwell
