"""Aspect-preserving resize onto the square model plane, and its inverse.

The forward map scales the frame by min(dst/w, dst/h) and centers it with
constant padding; boxes coming back from the model plane are shifted and
divided by the same parameters, so box geometry round-trips exactly and
detections never come out distorted.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _kernels
from .boxes import PixelBox
from .errors import GeometryError
from .image import Image

DEFAULT_INPUT_SIZE = 640
DEFAULT_FILL = 114


@dataclass(frozen=True)
class LetterboxParams:
    """Scale and padding mapping between a source frame and the model plane."""

    scale: float
    pad_x: float
    pad_y: float
    src_w: int
    src_h: int
    dst: int


def letterbox_params(src_w: int, src_h: int, dst: int = DEFAULT_INPUT_SIZE) -> LetterboxParams:
    if src_w <= 0 or src_h <= 0 or dst <= 0:
        raise GeometryError(f"invalid letterbox dimensions {src_w}x{src_h} -> {dst}")
    scale = min(dst / src_w, dst / src_h)
    pad_x = (dst - src_w * scale) / 2.0
    pad_y = (dst - src_h * scale) / 2.0
    return LetterboxParams(scale=scale, pad_x=pad_x, pad_y=pad_y, src_w=src_w, src_h=src_h, dst=dst)


def content_region(p: LetterboxParams) -> PixelBox:
    """The model-plane rectangle actually covered by image content."""
    return PixelBox(p.pad_x, p.pad_y, p.dst - p.pad_x, p.dst - p.pad_y)


def apply_letterbox(img: Image, p: LetterboxParams, fill: int = DEFAULT_FILL) -> Image:
    """Resize `img` by p.scale and center it on a dst x dst canvas of `fill` gray."""
    if img.width != p.src_w or img.height != p.src_h:
        raise ValueError(
            f"params describe {p.src_w}x{p.src_h}, image is {img.width}x{img.height}"
        )
    if not 0 <= fill <= 255:
        raise ValueError(f"fill value {fill} outside byte range")
    if p.scale == 1.0 and p.pad_x == 0.0 and p.pad_y == 0.0:
        return img.copy()
    content_w = round(p.src_w * p.scale)
    content_h = round(p.src_h * p.scale)
    resized = Image(
        content_w,
        content_h,
        _kernels.resize_bilinear_rgb(img.pixels, img.width, img.height, content_w, content_h),
    )
    out = Image.filled(p.dst, p.dst, (fill, fill, fill))
    out.paste(resized, round(p.pad_x), round(p.pad_y))
    return out


def unletterbox_box(b: PixelBox, p: LetterboxParams) -> PixelBox:
    """Map a model-plane box back onto the source frame, clamped to its bounds.

    Raises GeometryError when the box lies entirely in the padding, since
    nothing of it survives on the source plane.
    """
    if p.scale <= 0:
        raise GeometryError(f"non-positive scale {p.scale}")
    x1 = (b.x1 - p.pad_x) / p.scale
    y1 = (b.y1 - p.pad_y) / p.scale
    x2 = (b.x2 - p.pad_x) / p.scale
    y2 = (b.y2 - p.pad_y) / p.scale
    return PixelBox(x1, y1, x2, y2).clamped(p.src_w, p.src_h)


def letterbox_box(b: PixelBox, p: LetterboxParams) -> PixelBox:
    """Forward-map a source-frame box onto the model plane."""
    return PixelBox(
        b.x1 * p.scale + p.pad_x,
        b.y1 * p.scale + p.pad_y,
        b.x2 * p.scale + p.pad_x,
        b.y2 * p.scale + p.pad_y,
    )
