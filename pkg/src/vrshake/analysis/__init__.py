"""Offline analysis: handshake elements, dimensionality reduction, style map."""

from .emotion_map import (
    DEFAULT_CLUSTERS,
    Classification,
    ClusterInfo,
    EmotionMap,
    MapBuildError,
    MapFormatError,
    build_emotion_map,
    build_emotion_map_from_features,
    classify_recording,
    classify_vector,
    load_map,
    parse_map,
    save_map,
    serialize_map,
)
from .features import (
    FEATURE_NAMES,
    HandshakeFeatures,
    InsufficientDataError,
    SegmentationError,
    clasp_episodes,
    extract_features,
    moving_average,
)
from .pca import DegenerateRankError, PcaModel, Standardization, pca_fit, standardize
from .synth import DEFAULT_MODES, InfeasibleFeaturesError, ModeSpec, profile_for_features, synth_dataset, write_dataset
from .ward import Dendrogram, Merge, cut, ward_linkage

__all__ = [
    "DEFAULT_CLUSTERS",
    "DEFAULT_MODES",
    "Classification",
    "ClusterInfo",
    "Dendrogram",
    "DegenerateRankError",
    "EmotionMap",
    "FEATURE_NAMES",
    "HandshakeFeatures",
    "InfeasibleFeaturesError",
    "InsufficientDataError",
    "MapBuildError",
    "MapFormatError",
    "Merge",
    "ModeSpec",
    "PcaModel",
    "SegmentationError",
    "Standardization",
    "build_emotion_map",
    "build_emotion_map_from_features",
    "clasp_episodes",
    "classify_recording",
    "classify_vector",
    "cut",
    "extract_features",
    "load_map",
    "moving_average",
    "parse_map",
    "pca_fit",
    "profile_for_features",
    "save_map",
    "serialize_map",
    "standardize",
    "synth_dataset",
    "ward_linkage",
    "write_dataset",
]
