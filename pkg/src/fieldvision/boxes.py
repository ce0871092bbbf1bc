"""Canonical detection geometry and per-frame detection sets.

Corner-form pixel boxes are the internal representation everywhere; the
center/size normalized form appears only at dataset and wire boundaries.
Boxes are continuous-valued, so letterbox round trips accumulate no
rounding; rasterization happens only when drawing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError


def _check_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise GeometryError(f"{name} has non-finite component {v!r}")


@dataclass(frozen=True)
class PixelBox:
    """Axis-aligned box in pixel coordinates, top-left origin, corner form.

    Zero-extent boxes are rejected at construction: they poison IoU with a
    0/0 division and carry no information a detector could act on.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        _check_finite("PixelBox", self.x1, self.y1, self.x2, self.y2)
        if not (self.x2 > self.x1 and self.y2 > self.y1):
            raise GeometryError(
                f"degenerate box ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0

    def clamped(self, width: float, height: float) -> PixelBox:
        """Clamp to the frame [0, width] x [0, height].

        Raises GeometryError if nothing of the box survives clamping.
        Clamping is idempotent.
        """
        if width <= 0 or height <= 0:
            raise GeometryError(f"zero-area frame {width}x{height}")
        x1 = min(max(self.x1, 0.0), width)
        y1 = min(max(self.y1, 0.0), height)
        x2 = min(max(self.x2, 0.0), width)
        y2 = min(max(self.y2, 0.0), height)
        return PixelBox(x1, y1, x2, y2)

    def contains(self, other: PixelBox) -> bool:
        return (
            self.x1 <= other.x1
            and self.y1 <= other.y1
            and self.x2 >= other.x2
            and self.y2 >= other.y2
        )


@dataclass(frozen=True)
class NormBox:
    """Center/size box normalized to [0, 1] by the frame dimensions."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        _check_finite("NormBox", self.cx, self.cy, self.w, self.h)
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise GeometryError(f"center ({self.cx}, {self.cy}) outside unit square")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise GeometryError(f"size ({self.w}, {self.h}) outside (0, 1]")


def norm_to_pixel(b: NormBox, width: float, height: float) -> PixelBox:
    """Map a normalized box onto a width x height frame, clamped to its bounds."""
    if width <= 0 or height <= 0:
        raise GeometryError(f"zero-area frame {width}x{height}")
    _check_finite("frame", width, height)
    x1 = (b.cx - b.w / 2.0) * width
    x2 = (b.cx + b.w / 2.0) * width
    y1 = (b.cy - b.h / 2.0) * height
    y2 = (b.cy + b.h / 2.0) * height
    return PixelBox(x1, y1, x2, y2).clamped(width, height)


def pixel_to_norm(b: PixelBox, width: float, height: float) -> NormBox:
    """Inverse of `norm_to_pixel` for boxes inside the frame.

    The box is clamped to the frame first, so callers may pass boxes that
    overhang the border by a sub-pixel amount.
    """
    if width <= 0 or height <= 0:
        raise GeometryError(f"zero-area frame {width}x{height}")
    c = b.clamped(width, height)
    return NormBox(
        cx=(c.x1 + c.x2) / 2.0 / width,
        cy=(c.y1 + c.y2) / 2.0 / height,
        w=c.width / width,
        h=c.height / height,
    )


@dataclass(frozen=True)
class ClassMap:
    """Ordered class labels; a label's id is its position."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("class map needs at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.labels}")

    def label_for(self, class_id: int) -> str:
        if not 0 <= class_id < len(self.labels):
            raise KeyError(f"class id {class_id} outside map of {len(self.labels)}")
        return self.labels[class_id]

    def id_for(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"label {label!r} not in class map") from None

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def items(self):
        return enumerate(self.labels)


EVENT_CLASS_MAPS = {
    "basketball": ClassMap(("ball", "basket")),
    "archery": ClassMap(("target",)),
    "marathon": ClassMap(("line", "right_arrow", "left_arrow", "forward_arrow")),
}


@dataclass(frozen=True)
class FrameMeta:
    """Identity and geometry of one captured frame."""

    frame_id: int
    timestamp: float
    width: int
    height: int

    def __post_init__(self):
        if self.frame_id < 0:
            raise ValueError(f"negative frame id {self.frame_id}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"empty frame {self.width}x{self.height}")
        _check_finite("timestamp", self.timestamp)


@dataclass(frozen=True)
class Detection:
    """One classified, scored box on the source frame."""

    class_id: int
    label: str
    confidence: float
    box: PixelBox
    frame_id: int = 0

    def __post_init__(self):
        if self.class_id < 0:
            raise ValueError(f"negative class id {self.class_id}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.frame_id < 0:
            raise ValueError(f"negative frame id {self.frame_id}")


@dataclass(frozen=True)
class DetectionSet:
    """All detections of one frame, tied to that frame's metadata."""

    meta: FrameMeta
    detections: tuple[Detection, ...] = ()

    def __post_init__(self):
        frame = PixelBox(0.0, 0.0, float(self.meta.width), float(self.meta.height))
        for i, d in enumerate(self.detections):
            if d.frame_id != self.meta.frame_id:
                raise ValueError(
                    f"detection {i} carries frame {d.frame_id}, set is {self.meta.frame_id}"
                )
            if not frame.contains(d.box):
                raise ValueError(f"detection {i} box {d.box} exceeds frame bounds")

    @classmethod
    def empty(cls, meta: FrameMeta) -> DetectionSet:
        return cls(meta=meta, detections=())

    def __len__(self) -> int:
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)
