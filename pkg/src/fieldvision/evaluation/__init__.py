"""Measurement harness: dataset ingestion, matching, metrics, benchmarks."""

from .benchmark import MODES, FrameSource, run_benchmark
from .dataset import (
    GroundTruthImage,
    GroundTruthObject,
    GroundTruthSet,
    load_class_map,
    load_ground_truth,
    load_predictions,
    write_prediction_line,
)
from .matching import MatchResult, PredMatch, match_detections
from .metrics import (
    COCO_IOU_THRESHOLDS,
    ConfusionMatrix,
    MapScores,
    average_precision,
    confusion_matrix,
    map_scores,
    precision_recall,
)
from .report import EvalReport, FpsStats, render_comparison

__all__ = [
    "MODES",
    "FrameSource",
    "run_benchmark",
    "GroundTruthImage",
    "GroundTruthObject",
    "GroundTruthSet",
    "load_class_map",
    "load_ground_truth",
    "load_predictions",
    "write_prediction_line",
    "MatchResult",
    "PredMatch",
    "match_detections",
    "COCO_IOU_THRESHOLDS",
    "ConfusionMatrix",
    "MapScores",
    "average_precision",
    "confusion_matrix",
    "map_scores",
    "precision_recall",
    "EvalReport",
    "FpsStats",
    "render_comparison",
]
