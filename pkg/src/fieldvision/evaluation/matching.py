"""Greedy confidence-priority matching of predictions to ground truth.

Per class, predictions are visited in descending confidence (ties by input
position); each takes the still-unmatched ground truth with the highest IoU
at or above the threshold. This is the standard evaluator behavior; a
brute-force re-scan oracle validates it in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..boxes import Detection, PixelBox
from ..postprocess import iou


@dataclass(frozen=True)
class PredMatch:
    is_tp: bool
    gt_index: int | None
    iou: float


@dataclass(frozen=True)
class MatchResult:
    """Per-prediction and per-ground-truth outcome for one image."""

    pred_matches: tuple[PredMatch, ...]  # aligned with the input prediction order
    gt_matched_by: tuple[int | None, ...]  # prediction index or None (a FN)

    @property
    def tp(self) -> int:
        return sum(1 for m in self.pred_matches if m.is_tp)

    @property
    def fp(self) -> int:
        return sum(1 for m in self.pred_matches if not m.is_tp)

    @property
    def fn(self) -> int:
        return sum(1 for g in self.gt_matched_by if g is None)


def match_detections(
    preds: Sequence[Detection],
    gts: Sequence[tuple[int, PixelBox]],
    iou_threshold: float,
) -> MatchResult:
    pred_matches: list[PredMatch | None] = [None] * len(preds)
    gt_matched_by: list[int | None] = [None] * len(gts)

    order = sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))
    for i in order:
        pred = preds[i]
        best_gt = None
        best_iou = 0.0
        for g, (gt_class, gt_box) in enumerate(gts):
            if gt_class != pred.class_id or gt_matched_by[g] is not None:
                continue
            overlap = iou(pred.box, gt_box)
            if overlap >= iou_threshold and overlap > best_iou:
                best_iou = overlap
                best_gt = g
        if best_gt is not None:
            gt_matched_by[best_gt] = i
            pred_matches[i] = PredMatch(is_tp=True, gt_index=best_gt, iou=best_iou)
        else:
            pred_matches[i] = PredMatch(is_tp=False, gt_index=None, iou=0.0)
    return MatchResult(pred_matches=tuple(pred_matches), gt_matched_by=tuple(gt_matched_by))
