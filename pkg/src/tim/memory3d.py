"""World-anchored object memory built from 2D detections plus depth.

Detections are unprojected through a pinhole model into world space and
associated to per-object tracklets by proximity. Objects are assumed to stay
where they were last seen: leaving the camera frustum never deletes a
tracklet, and a tracklet only becomes `moved` after going unmatched for a
run of frames in which its stored position was actually in view.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VISIBLE = "visible"
OUT_OF_VIEW = "out_of_view"
MOVED = "moved"

DEFAULT_MATCH_RADIUS_M = 0.3
DEFAULT_MOVED_AFTER_MISSES = 5


@dataclass(frozen=True, eq=False)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray  # camera-to-world, 3x3
    translation: np.ndarray  # camera origin in world, (3,)

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        R = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        if R.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation length 3")
        if np.max(np.abs(R @ R.T - np.eye(3))) > 1e-6 or np.linalg.det(R) < 0:
            raise ValueError("rotation must be orthonormal (within 1e-6) and proper")

    @classmethod
    def from_payload(cls, payload: dict) -> "CameraModel":
        return cls(payload["fx"], payload["fy"], payload["cx"], payload["cy"],
                   payload["width"], payload["height"],
                   np.asarray(payload["rotation"], dtype=np.float64),
                   np.asarray(payload["translation"], dtype=np.float64))

    def to_payload(self) -> dict:
        return {"tag": "camera_pose", "fx": self.fx, "fy": self.fy,
                "cx": self.cx, "cy": self.cy, "width": self.width, "height": self.height,
                "rotation": self.rotation.tolist(), "translation": self.translation.tolist()}


@dataclass(frozen=True, eq=False)
class Detection2D:
    object_class: str
    confidence: float
    bbox: tuple[float, float, float, float]  # x, y, w, h in pixels
    embedding: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        x, y, w, h = self.bbox
        if w <= 0 or h <= 0:
            raise ValueError("bbox must have positive width and height")
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=np.float64)
            object.__setattr__(self, "embedding", emb)

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return x + w / 2.0, y + h / 2.0


def unproject_pixel(u: float, v: float, depth_m: float, cam: CameraModel) -> np.ndarray:
    """Pixel plus metric depth to a world point through the camera pose."""
    if depth_m <= 0:
        raise ValueError(f"depth must be positive, got {depth_m}")
    p_cam = np.array([
        (u - cam.cx) * depth_m / cam.fx,
        (v - cam.cy) * depth_m / cam.fy,
        depth_m,
    ])
    return cam.rotation @ p_cam + cam.translation


def project_to_world(det: Detection2D, depth_m: float, cam: CameraModel) -> np.ndarray:
    u, v = det.center
    if not (0 <= u < cam.width and 0 <= v < cam.height):
        raise ValueError(f"bbox center ({u:.1f}, {v:.1f}) outside the image")
    return unproject_pixel(u, v, depth_m, cam)


def reproject_to_image(point_w: np.ndarray, cam: CameraModel) -> tuple[float, float, float]:
    """World point to (u, v, depth) in the camera; depth may be non-positive."""
    p_cam = cam.rotation.T @ (np.asarray(point_w, dtype=np.float64) - cam.translation)
    z = float(p_cam[2])
    if z == 0.0:
        return float("nan"), float("nan"), 0.0
    return float(cam.fx * p_cam[0] / z + cam.cx), float(cam.fy * p_cam[1] / z + cam.cy), z


def in_frustum(point_w: np.ndarray, cam: CameraModel) -> bool:
    u, v, z = reproject_to_image(point_w, cam)
    return z > 0 and 0 <= u < cam.width and 0 <= v < cam.height


def depth_from_patch(depth_frame: np.ndarray, bbox: tuple[float, float, float, float]) -> float:
    """Median depth over the center 3x3 patch of the bbox, ignoring zeros."""
    x, y, w, h = bbox
    cu = int(round(x + w / 2.0))
    cv = int(round(y + h / 2.0))
    H, W = depth_frame.shape
    u0, u1 = max(cu - 1, 0), min(cu + 2, W)
    v0, v1 = max(cv - 1, 0), min(cv + 2, H)
    patch = np.asarray(depth_frame[v0:v1, u0:u1], dtype=np.float64).ravel()
    patch = patch[patch > 0]
    if patch.size == 0:
        raise ValueError("no valid depth in the bbox center patch")
    return float(np.median(patch))


@dataclass
class Tracklet:
    object_id: int
    object_class: str
    status: str
    positions: list[tuple[int, np.ndarray]] = field(default_factory=list)
    last_seen_ns: int = 0
    embedding: np.ndarray | None = None
    misses_in_view: int = 0

    @property
    def position(self) -> np.ndarray:
        return self.positions[-1][1]

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "class": self.object_class,
            "status": self.status,
            "positions": [{"ts_ns": ts, "xyz": [float(c) for c in p]}
                          for ts, p in self.positions],
        }


@dataclass(frozen=True)
class MemoryEvent:
    kind: str  # created | updated | moved | rejected
    object_id: int | None
    object_class: str
    ts_ns: int
    detail: str = ""


class ObjectMemory:
    """Single-owner tracklet store; updates are serialized by the caller."""

    def __init__(self, match_radius_m: float = DEFAULT_MATCH_RADIUS_M,
                 moved_after_misses: int = DEFAULT_MOVED_AFTER_MISSES):
        if match_radius_m <= 0:
            raise ValueError("match_radius_m must be positive")
        if moved_after_misses < 1:
            raise ValueError("moved_after_misses must be at least 1")
        self.match_radius_m = match_radius_m
        self.moved_after_misses = moved_after_misses
        self.tracklets: dict[int, Tracklet] = {}
        self._next_id = 1  # ids are never reused within a session

    def update(self, detections: list[tuple[Detection2D, float]], cam: CameraModel,
               ts_ns: int) -> list[MemoryEvent]:
        """Associate one frame of (detection, depth_m) pairs; returns events.

        Projection failures are reported per detection as `rejected` events
        and never abort the rest of the batch.
        """
        events: list[MemoryEvent] = []
        matched: set[int] = set()
        created: set[int] = set()
        for det, depth_m in detections:
            try:
                point = project_to_world(det, depth_m, cam)
            except ValueError as err:
                events.append(MemoryEvent("rejected", None, det.object_class, ts_ns, str(err)))
                continue
            best = self._match(det, point, exclude=matched | created)
            if best is None:
                tk = Tracklet(self._next_id, det.object_class, VISIBLE,
                              [(ts_ns, point)], ts_ns, det.embedding)
                self._next_id += 1
                self.tracklets[tk.object_id] = tk
                created.add(tk.object_id)
                events.append(MemoryEvent("created", tk.object_id, det.object_class, ts_ns))
            else:
                tk = self.tracklets[best]
                tk.positions.append((ts_ns, point))
                tk.last_seen_ns = ts_ns
                tk.status = VISIBLE
                tk.misses_in_view = 0
                if det.embedding is not None:
                    tk.embedding = det.embedding
                matched.add(best)
                events.append(MemoryEvent("updated", best, det.object_class, ts_ns))

        # Roll statuses of everything that got no detection this frame.
        for tk in self.tracklets.values():
            if tk.object_id in matched or tk.object_id in created:
                continue
            if tk.status == MOVED:
                continue  # sticky until matched again
            if in_frustum(tk.position, cam):
                tk.status = VISIBLE
                tk.misses_in_view += 1
                if tk.misses_in_view >= self.moved_after_misses:
                    tk.status = MOVED
                    events.append(MemoryEvent(
                        "moved", tk.object_id, tk.object_class, ts_ns,
                        f"unmatched for {tk.misses_in_view} frames in view"))
            else:
                tk.status = OUT_OF_VIEW
                tk.misses_in_view = 0
        return events

    def _match(self, det: Detection2D, point: np.ndarray, exclude: set[int]) -> int | None:
        candidates = []
        for tk in self.tracklets.values():
            if tk.object_id in exclude or tk.object_class != det.object_class:
                continue
            dist = float(np.linalg.norm(tk.position - point))
            if dist <= self.match_radius_m:
                candidates.append((dist, tk))
        if not candidates:
            return None
        best_dist = min(d for d, _ in candidates)
        tied = [tk for d, tk in candidates if d == best_dist]
        if len(tied) > 1 and det.embedding is not None:
            def sim(tk: Tracklet) -> float:
                if tk.embedding is None:
                    return -2.0
                denom = np.linalg.norm(tk.embedding) * np.linalg.norm(det.embedding)
                return float(tk.embedding @ det.embedding / denom) if denom else -2.0

            tied.sort(key=lambda tk: (-sim(tk), tk.object_id))
        else:
            tied.sort(key=lambda tk: tk.object_id)
        return tied[0].object_id

    def locate_object(self, object_class: str, near: np.ndarray | None = None) -> Tracklet | None:
        """Most recently seen tracklet of the class, regardless of visibility."""
        pool = [tk for tk in self.tracklets.values() if tk.object_class == object_class]
        if not pool:
            return None
        latest = max(tk.last_seen_ns for tk in pool)
        pool = [tk for tk in pool if tk.last_seen_ns == latest]
        if len(pool) > 1 and near is not None:
            near = np.asarray(near, dtype=np.float64)
            pool.sort(key=lambda tk: (float(np.linalg.norm(tk.position - near)), tk.object_id))
        else:
            pool.sort(key=lambda tk: tk.object_id)
        return pool[0]

    def export_payload(self) -> dict:
        return {"tag": "tracklet_set",
                "tracklets": [self.tracklets[i].to_dict() for i in sorted(self.tracklets)]}


def update_memory(memory: ObjectMemory, detections: list[tuple[Detection2D, float]],
                  cam: CameraModel, ts_ns: int) -> tuple[ObjectMemory, list[MemoryEvent]]:
    events = memory.update(detections, cam, ts_ns)
    return memory, events
