"""Benchmark procedures: idle, static, and dynamic runs.

idle    - object-free frames cycled for a duration; measures FPS only.
static  - one pass over a fixed annotated set; FPS plus precision.
dynamic - one pass over a recorded motion sequence (same mechanics as
          static; the sequence order is the content that differs).

The runner drives a single detector sequentially so latency numbers stay
honest, and takes the clock as a parameter so simulated runs reproduce
exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from ..boxes import Detection, FrameMeta
from ..clock import Clock, SystemClock
from ..errors import ConfigError, NoDataError
from ..image import Image
from ..image_io import IMAGE_EXTENSIONS, read_image
from ..scheduling import FpsMeter
from .dataset import GroundTruthSet
from .metrics import confusion_matrix, map_scores, precision_recall
from .report import EvalReport, FpsStats

MODES = ("idle", "static", "dynamic")


@dataclass
class FrameSource:
    """Named frames in replay order."""

    frames: list[tuple[str, Image]]

    @classmethod
    def from_directory(cls, directory: str | os.PathLike) -> FrameSource:
        directory = Path(directory)
        if not directory.is_dir():
            raise ConfigError(f"frame directory {directory} not found")
        frames = []
        for p in sorted(directory.iterdir()):
            if p.suffix.lower() in IMAGE_EXTENSIONS:
                frames.append((p.stem, read_image(p)))
        if not frames:
            raise ConfigError(f"no frames in {directory}")
        return cls(frames=frames)

    @classmethod
    def from_images(cls, named: list[tuple[str, Image]]) -> FrameSource:
        if not named:
            raise ConfigError("empty frame source")
        return cls(frames=list(named))

    def __len__(self) -> int:
        return len(self.frames)


def run_benchmark(
    detector,
    source: FrameSource,
    mode: str,
    duration: float = 60.0,
    clock: Clock | None = None,
    ground_truth: GroundTruthSet | None = None,
    iou_threshold: float = 0.5,
    confidence_threshold: float = 0.25,
    with_map: bool = False,
) -> EvalReport:
    if mode not in MODES:
        raise ConfigError(f"unknown benchmark mode {mode!r}")
    if mode in ("static", "dynamic") and ground_truth is None:
        raise ConfigError(f"{mode} benchmark needs ground truth for precision")
    clock = clock if clock is not None else SystemClock()
    detector_name = getattr(detector.probe(), "name", "")

    if mode == "idle":
        return _run_idle(detector, detector_name, source, duration, clock)
    return _run_annotated(
        detector, detector_name, source, mode, clock, ground_truth,
        iou_threshold, confidence_threshold, with_map,
    )


def _run_idle(detector, name: str, source: FrameSource, duration: float, clock: Clock) -> EvalReport:
    if duration <= 0:
        raise ConfigError(f"duration must be positive, got {duration}")
    meter = FpsMeter(window=duration)
    latencies: list[float] = []
    start = clock.now()
    frame_id = 0
    n_preds = 0
    while clock.now() - start < duration:
        stem, img = source.frames[frame_id % len(source)]
        meta = FrameMeta(
            frame_id=frame_id, timestamp=clock.now() - start, width=img.width, height=img.height
        )
        t0 = clock.now()
        ds = detector.detect(img, meta)
        t1 = clock.now()
        if t1 <= t0 and frame_id > 0:
            raise ConfigError(
                "detector consumed no simulated time; idle mode needs latency or a real clock"
            )
        n_preds += len(ds)
        meter.tick(t1)
        latencies.append(t1 - t0)
        frame_id += 1
    try:
        fps = meter.report(clock.now())
    except NoDataError:
        fps = 0.0
    stats = FpsStats.from_latencies(latencies, clock.now() - start, frame_id)
    if stats is not None:
        stats = FpsStats(mean=fps, p50=stats.p50, p95=stats.p95)
    return EvalReport(
        mode="idle",
        detector=name,
        n_images=frame_id,
        n_predictions=n_preds,
        fps=stats,
    )


def _run_annotated(
    detector,
    name: str,
    source: FrameSource,
    mode: str,
    clock: Clock,
    gts: GroundTruthSet,
    iou_threshold: float,
    confidence_threshold: float,
    with_map: bool,
) -> EvalReport:
    registry = gts.by_id()
    latencies: list[float] = []
    instances = []
    n_preds = 0
    start = clock.now()
    for frame_id, (stem, img) in enumerate(source.frames):
        if stem not in registry:
            raise ConfigError(f"frame {stem!r} has no ground-truth entry")
        meta = FrameMeta(
            frame_id=frame_id, timestamp=clock.now() - start, width=img.width, height=img.height
        )
        t0 = clock.now()
        ds = detector.detect(img, meta)
        t1 = clock.now()
        latencies.append(t1 - t0)
        preds: list[Detection] = list(ds.detections)
        n_preds += len(preds)
        instances.append((preds, registry[stem].pixel_objects()))
    elapsed = clock.now() - start
    precision, recall, tp, fp, fn = precision_recall(
        instances, iou_threshold=iou_threshold, confidence_threshold=confidence_threshold
    )
    scores = None
    if with_map:
        try:
            scores = map_scores(instances, gts.class_map)
        except NoDataError:
            scores = None
    cm = confusion_matrix(
        instances, gts.class_map,
        iou_threshold=iou_threshold, confidence_threshold=confidence_threshold,
    )
    return EvalReport(
        mode=mode,
        detector=name,
        n_images=len(source.frames),
        n_ground_truth=gts.total_objects(),
        n_predictions=n_preds,
        precision=precision,
        recall=recall,
        tp=tp,
        fp=fp,
        fn=fn,
        map=scores,
        confusion=cm,
        fps=FpsStats.from_latencies(latencies, elapsed, len(source.frames)),
    )
