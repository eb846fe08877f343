"""Window assembly, feature fusion, and the step/state classifiers."""

from .features import FeatureVector, FrameFeatures, WindowSample, assemble_windows, feature
from .fusion import FusionConfig, cosine_similarity, fuse_features, fusion_weights
from .gru import (
    GruWeights,
    gru_backward,
    gru_forward,
    gru_loss,
    init_gru_weights,
    load_gru_weights,
    save_gru_weights,
    sgd_step,
    zero_gru_weights,
)
from .knn import (
    ObjectStateExample,
    classify_object_state,
    cosine_distance,
    knn_classify,
    load_examples,
    save_examples,
)

__all__ = [
    "FeatureVector", "FrameFeatures", "WindowSample", "assemble_windows", "feature",
    "FusionConfig", "cosine_similarity", "fuse_features", "fusion_weights",
    "GruWeights", "gru_backward", "gru_forward", "gru_loss", "init_gru_weights",
    "load_gru_weights", "save_gru_weights", "sgd_step", "zero_gru_weights",
    "ObjectStateExample", "classify_object_state", "cosine_distance", "knn_classify",
    "load_examples", "save_examples",
]
