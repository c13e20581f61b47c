"""camscope: global explanations for 1D GAP-CNN classifiers.

Trains a convolutional classifier on fixed-layout byte/feature vectors,
extracts per-sample class activation maps, aggregates them per class into a
two-indicator explanation (impact + variability), and supports interactive
histogram-filtered drill-down to sub-global maps.
"""

from .aggregate import (
    AGGREGATION_METHODS,
    VARIABILITY_METHODS,
    AggregatedCam,
    CamMatrix,
    aggregate_impact,
    build_aggregated_cam,
    collect_cams,
    kde_mode,
    variability,
)
from .cam import LocalCam, cam_for_prediction, compute_cam
from .estimator import CamExtractor, CamNetClassifier
from .model import (
    CamNet,
    ModelConfig,
    ModelWeights,
    backward,
    forward,
    load_weights,
    predict,
    save_weights,
    train,
)
from .session import Session, annotate, apply_filter, histogram, pop_filter, reset, subglobal_cam

__version__ = "0.1.0"

__all__ = [
    "AGGREGATION_METHODS",
    "VARIABILITY_METHODS",
    "AggregatedCam",
    "CamExtractor",
    "CamMatrix",
    "CamNet",
    "CamNetClassifier",
    "LocalCam",
    "ModelConfig",
    "ModelWeights",
    "Session",
    "aggregate_impact",
    "annotate",
    "apply_filter",
    "backward",
    "build_aggregated_cam",
    "cam_for_prediction",
    "collect_cams",
    "compute_cam",
    "forward",
    "histogram",
    "kde_mode",
    "load_weights",
    "pop_filter",
    "predict",
    "reset",
    "save_weights",
    "subglobal_cam",
    "train",
    "variability",
]
