"""Precision, recall, interpolated AP/mAP, and the confusion matrix.

AP uses the 101-point interpolation (precision envelope sampled on the
recall grid 0.00..1.00), the convention behind the mAP50 / mAP50-95 numbers
reported by the YOLO ecosystem. mAP50-95 averages over IoU thresholds 0.50
to 0.95 in steps of 0.05.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..boxes import ClassMap, Detection, PixelBox
from ..errors import NoDataError
from ..postprocess import iou
from .matching import match_detections

COCO_IOU_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))
RECALL_GRID = tuple(i / 100.0 for i in range(101))

ImageInstance = tuple[Sequence[Detection], Sequence[tuple[int, PixelBox]]]


def average_precision(scored: Sequence[tuple[float, int, bool]], n_gt: int) -> float:
    """101-point interpolated AP for one class at one IoU threshold.

    `scored` holds (confidence, insertion_index, is_tp) per prediction over
    the whole dataset; `n_gt` is the class's ground-truth count.

    Raises NoDataError when the class has no ground truth; such classes are
    excluded from mAP rather than scored as zero.
    """
    if n_gt <= 0:
        raise NoDataError("AP undefined for a class with no ground truth")
    if not scored:
        return 0.0
    ordered = sorted(scored, key=lambda s: (-s[0], s[1]))
    precisions = []
    recalls = []
    tp = fp = 0
    for _, _, is_tp in ordered:
        if is_tp:
            tp += 1
        else:
            fp += 1
        precisions.append(tp / (tp + fp))
        recalls.append(tp / n_gt)
    # precision envelope: best precision at any recall >= r
    envelope = precisions[:]
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    total = 0.0
    for r in RECALL_GRID:
        # first point with recall >= r
        value = 0.0
        for rec, env in zip(recalls, envelope):
            if rec >= r:
                value = env
                break
        total += value
    return total / len(RECALL_GRID)


def _collect_scored(
    instances: Sequence[ImageInstance], class_id: int, iou_threshold: float
) -> tuple[list[tuple[float, int, bool]], int]:
    scored: list[tuple[float, int, bool]] = []
    n_gt = 0
    counter = 0
    for preds, gts in instances:
        n_gt += sum(1 for c, _ in gts if c == class_id)
        result = match_detections(preds, gts, iou_threshold)
        for pred, match in zip(preds, result.pred_matches):
            if pred.class_id != class_id:
                continue
            scored.append((pred.confidence, counter, match.is_tp))
            counter += 1
    return scored, n_gt


@dataclass(frozen=True)
class MapScores:
    map50: float
    map50_95: float
    per_class: Mapping[str, Mapping[float, float]]  # label -> iou threshold -> AP


def map_scores(
    instances: Sequence[ImageInstance],
    class_map: ClassMap,
    thresholds: Sequence[float] = COCO_IOU_THRESHOLDS,
) -> MapScores:
    """mAP50 and mAP50-95 over all classes that have ground truth."""
    per_class: dict[str, dict[float, float]] = {}
    for class_id, label in class_map.items():
        aps: dict[float, float] = {}
        for t in thresholds:
            scored, n_gt = _collect_scored(instances, class_id, t)
            if n_gt == 0:
                break
            aps[t] = average_precision(scored, n_gt)
        if aps:
            per_class[label] = aps
    if not per_class:
        raise NoDataError("no class has ground truth; mAP undefined")
    map50 = sum(aps[0.5] for aps in per_class.values()) / len(per_class)
    map50_95 = sum(
        sum(aps.values()) / len(aps) for aps in per_class.values()
    ) / len(per_class)
    return MapScores(map50=map50, map50_95=map50_95, per_class=per_class)


def precision_recall(
    instances: Sequence[ImageInstance],
    iou_threshold: float = 0.5,
    confidence_threshold: float = 0.25,
) -> tuple[float, float, int, int, int]:
    """Micro-averaged precision and recall at fixed thresholds.

    Returns (precision, recall, tp, fp, fn); empty slices score 0.0.
    """
    tp = fp = fn = 0
    for preds, gts in instances:
        kept = [p for p in preds if p.confidence > confidence_threshold]
        result = match_detections(kept, gts, iou_threshold)
        tp += result.tp
        fp += result.fp
        fn += result.fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall, tp, fp, fn


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows: true class plus background; columns: predicted class plus background."""

    labels: tuple[str, ...]
    cells: tuple[tuple[int, ...], ...]

    @property
    def background_index(self) -> int:
        return len(self.labels)

    def cell(self, true_label: str | None, pred_label: str | None) -> int:
        r = self.labels.index(true_label) if true_label is not None else self.background_index
        c = self.labels.index(pred_label) if pred_label is not None else self.background_index
        return self.cells[r][c]

    def total(self) -> int:
        """All assignments except the meaningless (background, background) cell."""
        bg = self.background_index
        return sum(
            v for r, row in enumerate(self.cells) for c, v in enumerate(row)
            if not (r == bg and c == bg)
        )


def confusion_matrix(
    instances: Sequence[ImageInstance],
    class_map: ClassMap,
    iou_threshold: float = 0.5,
    confidence_threshold: float = 0.25,
) -> ConfusionMatrix:
    """Class-agnostic greedy matching, so cross-class errors show up as
    off-diagonal counts instead of disappearing into FP/FN totals."""
    n = len(class_map)
    cells = [[0] * (n + 1) for _ in range(n + 1)]
    for preds, gts in instances:
        kept = [p for p in preds if p.confidence > confidence_threshold]
        order = sorted(range(len(kept)), key=lambda i: (-kept[i].confidence, i))
        gt_taken = [False] * len(gts)
        pred_matched_class: dict[int, int] = {}
        for i in order:
            best_gt = None
            best_iou = 0.0
            for g, (gt_class, gt_box) in enumerate(gts):
                if gt_taken[g]:
                    continue
                overlap = iou(kept[i].box, gt_box)
                if overlap >= iou_threshold and overlap > best_iou:
                    best_iou = overlap
                    best_gt = g
            if best_gt is not None:
                gt_taken[best_gt] = True
                pred_matched_class[i] = gts[best_gt][0]
        for i, pred in enumerate(kept):
            if i in pred_matched_class:
                cells[pred_matched_class[i]][pred.class_id] += 1
            else:
                cells[n][pred.class_id] += 1  # false alarm: background row
        for g, (gt_class, _) in enumerate(gts):
            if not gt_taken[g]:
                cells[gt_class][n] += 1  # miss: background column
    return ConfusionMatrix(
        labels=tuple(class_map.labels), cells=tuple(tuple(row) for row in cells)
    )
