"""Confidence filtering, IoU, and greedy non-maximum suppression."""

from __future__ import annotations

from dataclasses import dataclass

from .boxes import DetectionSet, PixelBox

DEFAULT_CONFIDENCE_THRESHOLD = 0.25
DEFAULT_IOU_THRESHOLD = 0.45


@dataclass(frozen=True)
class NmsConfig:
    """Suppression parameters; class-aware by default so adjacent markers of
    different classes never suppress each other."""

    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    per_class: bool = True

    def __post_init__(self):
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValueError(f"iou_threshold {self.iou_threshold} outside (0, 1)")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError(
                f"confidence_threshold {self.confidence_threshold} outside [0, 1]"
            )


def iou(a: PixelBox, b: PixelBox) -> float:
    """Intersection over union; boxes are guaranteed positive-area by type."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def confidence_filter(ds: DetectionSet, threshold: float) -> DetectionSet:
    """Keep detections with confidence strictly above the threshold, in order."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    kept = tuple(d for d in ds.detections if d.confidence > threshold)
    if len(kept) == len(ds.detections):
        return ds
    return DetectionSet(meta=ds.meta, detections=kept)


def nms(ds: DetectionSet, cfg: NmsConfig) -> DetectionSet:
    """Greedy hard NMS.

    Repeatedly keeps the highest-confidence remaining detection (ties broken
    by input position) and discards others whose IoU against it exceeds the
    threshold; with `per_class` only same-class detections are compared.
    Output is sorted by descending confidence.
    """
    dets = ds.detections
    if len(dets) <= 1:
        return ds
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))
    suppressed = [False] * len(dets)
    kept = []
    for pos, i in enumerate(order):
        if suppressed[i]:
            continue
        kept.append(dets[i])
        for j in order[pos + 1 :]:
            if suppressed[j]:
                continue
            if cfg.per_class and dets[j].class_id != dets[i].class_id:
                continue
            if iou(dets[i].box, dets[j].box) > cfg.iou_threshold:
                suppressed[j] = True
    return DetectionSet(meta=ds.meta, detections=tuple(kept))
