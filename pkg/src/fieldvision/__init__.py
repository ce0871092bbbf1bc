"""CPU-only vision pipeline for field robots.

Detection pre/post-processing (letterbox transforms, confidence filtering,
NMS), inference scheduling, a two-process WebSocket detection bridge, a
color-segmentation baseline detector, and a detection-metrics benchmark
harness. Hot per-pixel kernels run through an optional compiled extension
with a pure-Python twin selected at import.
"""

from ._kernels import backend_name as kernel_backend
from .boxes import (
    ClassMap,
    Detection,
    DetectionSet,
    EVENT_CLASS_MAPS,
    FrameMeta,
    NormBox,
    PixelBox,
    norm_to_pixel,
    pixel_to_norm,
)
from .image import Image

__version__ = "0.1.0"

__all__ = [
    "ClassMap",
    "Detection",
    "DetectionSet",
    "EVENT_CLASS_MAPS",
    "FrameMeta",
    "Image",
    "NormBox",
    "PixelBox",
    "kernel_backend",
    "norm_to_pixel",
    "pixel_to_norm",
    "__version__",
]
