"""Feature containers and sliding-window assembly over frame feature streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SOURCE_TAGS = ("action", "global", "region", "sound")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    dims: int
    values: np.ndarray
    source: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.shape[0] != self.dims:
            raise ValueError(f"expected {self.dims} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")
        if self.source not in SOURCE_TAGS:
            raise ValueError(f"source {self.source!r} not in {SOURCE_TAGS}")


def feature(values, source: str) -> FeatureVector:
    arr = np.asarray(values, dtype=np.float64)
    return FeatureVector(arr.shape[0], arr, source)


@dataclass(frozen=True)
class FrameFeatures:
    """Per-frame features as they arrive on the feature streams."""

    ts_ns: int
    action: FeatureVector
    global_image: FeatureVector
    regions: tuple[FeatureVector, ...] = ()
    sound: FeatureVector | None = None


@dataclass(frozen=True)
class WindowSample:
    t_start_ns: int
    t_end_ns: int
    action: FeatureVector
    global_image: FeatureVector
    regions: tuple[FeatureVector, ...]
    sound: FeatureVector | None = None


def assemble_windows(
    frames: list[FrameFeatures],
    k_seconds: float,
    stride_seconds: float | None = None,
) -> list[WindowSample | None]:
    """Tile [first_ts, last_ts] with k-second windows at the given stride.

    Image features (global, regions) come from the representative frame, the
    last frame inside the window. Per-frame action and sound features are
    averaged over the window (clip-level stand-in). Windows containing no
    frames are returned as None, never fabricated.
    """
    if not frames:
        raise ValueError("no frames to window")
    if k_seconds <= 0:
        raise ValueError("k_seconds must be positive")
    stride = k_seconds if stride_seconds is None else stride_seconds
    if stride <= 0:
        raise ValueError("stride_seconds must be positive")
    ts = [f.ts_ns for f in frames]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("frames must be time-ordered")

    k_ns = int(round(k_seconds * 1e9))
    stride_ns = int(round(stride * 1e9))
    first, last = ts[0], ts[-1]
    span = last - first
    count = 1 if span < k_ns else (span - k_ns) // stride_ns + 1

    windows: list[WindowSample | None] = []
    for i in range(count):
        t0 = first + i * stride_ns
        t1 = t0 + k_ns
        inside = [f for f in frames if t0 <= f.ts_ns <= t1]
        if not inside:
            windows.append(None)
            continue
        rep = inside[-1]
        action = feature(np.mean([f.action.values for f in inside], axis=0), "action")
        sounds = [f.sound.values for f in inside if f.sound is not None]
        sound = feature(np.mean(sounds, axis=0), "sound") if sounds else None
        windows.append(WindowSample(t0, t1, action, rep.global_image, rep.regions, sound))
    return windows
