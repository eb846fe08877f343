"""Weighted fusion of global and region image features.

Each input is projected into a common fusion space; the weights are a
softmax over cosine similarity to the global feature, with the global term
itself anchored at similarity 1.0. Lower temperature sharpens the weighting
toward the best-matching region.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import FeatureVector, feature


@dataclass(frozen=True, eq=False)
class FusionConfig:
    fusion_dim: int
    temperature: float
    projection_global: np.ndarray  # (fusion_dim, global_dim)
    projection_region: np.ndarray  # (fusion_dim, region_dim)
    projection_sound: np.ndarray | None = None
    include_sound: bool = False  # sound is off by default

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        for name in ("projection_global", "projection_region"):
            m = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, m)
            if m.ndim != 2 or m.shape[0] != self.fusion_dim:
                raise ValueError(f"{name} must be ({self.fusion_dim}, d), got {m.shape}")
        if self.projection_sound is not None:
            m = np.asarray(self.projection_sound, dtype=np.float64)
            object.__setattr__(self, "projection_sound", m)
            if m.ndim != 2 or m.shape[0] != self.fusion_dim:
                raise ValueError(f"projection_sound must be ({self.fusion_dim}, d), got {m.shape}")


def _values(vec) -> np.ndarray:
    if isinstance(vec, FeatureVector):
        return vec.values
    return np.asarray(vec, dtype=np.float64)


def cosine_similarity(a, b) -> float:
    a = _values(a)
    b = _values(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def fusion_weights(global_vec, region_vecs, cfg: FusionConfig,
                   sound_vec=None) -> np.ndarray:
    """Softmax weights for [global, region..., sound?]; the global slot uses
    similarity 1.0 and an enabled sound slot a neutral 0.0."""
    sims = [1.0] + [cosine_similarity(global_vec, r) for r in region_vecs]
    if cfg.include_sound and sound_vec is not None:
        sims.append(0.0)
    return _softmax(np.asarray(sims) / cfg.temperature)


def fuse_features(global_vec, region_vecs, cfg: FusionConfig,
                  sound_vec=None) -> FeatureVector:
    """Weighted sum of projected features. With no regions (and no enabled
    sound) the result is exactly the projected global feature."""
    g = _values(global_vec)
    if g.shape[0] != cfg.projection_global.shape[1]:
        raise ValueError(
            f"global feature has {g.shape[0]} dims,"
            f" projection expects {cfg.projection_global.shape[1]}")
    parts = [cfg.projection_global @ g]
    for r in region_vecs:
        rv = _values(r)
        if rv.shape[0] != cfg.projection_region.shape[1]:
            raise ValueError(
                f"region feature has {rv.shape[0]} dims,"
                f" projection expects {cfg.projection_region.shape[1]}")
        parts.append(cfg.projection_region @ rv)
    use_sound = cfg.include_sound and sound_vec is not None
    if use_sound:
        if cfg.projection_sound is None:
            raise ValueError("include_sound set but no projection_sound configured")
        sv = _values(sound_vec)
        if sv.shape[0] != cfg.projection_sound.shape[1]:
            raise ValueError(
                f"sound feature has {sv.shape[0]} dims,"
                f" projection expects {cfg.projection_sound.shape[1]}")
        parts.append(cfg.projection_sound @ sv)

    if len(parts) == 1:
        return feature(parts[0], "global")
    weights = fusion_weights(global_vec, region_vecs, cfg,
                             sound_vec if use_sound else None)
    fused = np.zeros(cfg.fusion_dim)
    for w, p in zip(weights, parts):
        fused += w * p
    return feature(fused, "global")
