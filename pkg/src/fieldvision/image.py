"""Interleaved 8-bit RGB images over a plain byte buffer.

Keeping images as byte buffers (rather than a third-party array type) lets
the kernels run identically through the compiled extension and the pure
fallback, and keeps the package importable anywhere.
"""

from __future__ import annotations


class Image:
    """Row-major RGB image, 3 bytes per pixel."""

    __slots__ = ("width", "height", "pixels")

    def __init__(self, width: int, height: int, pixels: bytes | bytearray | None = None):
        if width <= 0 or height <= 0:
            raise ValueError(f"empty image {width}x{height}")
        n = width * height * 3
        if pixels is None:
            pixels = bytearray(n)
        else:
            pixels = bytearray(pixels)
            if len(pixels) != n:
                raise ValueError(f"buffer holds {len(pixels)} bytes, expected {n}")
        self.width = width
        self.height = height
        self.pixels = pixels

    @classmethod
    def filled(cls, width: int, height: int, color: tuple[int, int, int]) -> Image:
        img = cls(width, height)
        img.pixels[:] = bytes(color) * (width * height)
        return img

    def copy(self) -> Image:
        return Image(self.width, self.height, bytes(self.pixels))

    def get(self, x: int, y: int) -> tuple[int, int, int]:
        i = (y * self.width + x) * 3
        p = self.pixels
        return p[i], p[i + 1], p[i + 2]

    def put(self, x: int, y: int, color: tuple[int, int, int]) -> None:
        if 0 <= x < self.width and 0 <= y < self.height:
            i = (y * self.width + x) * 3
            self.pixels[i : i + 3] = bytes(color)

    def paste(self, other: Image, x0: int, y0: int) -> None:
        """Copy `other` into this image with its top-left corner at (x0, y0)."""
        if x0 < 0 or y0 < 0 or x0 + other.width > self.width or y0 + other.height > self.height:
            raise ValueError("paste target exceeds image bounds")
        w3 = other.width * 3
        for row in range(other.height):
            dst = ((y0 + row) * self.width + x0) * 3
            src = row * w3
            self.pixels[dst : dst + w3] = other.pixels[src : src + w3]

    def crop(self, x0: int, y0: int, x1: int, y1: int) -> Image:
        if not (0 <= x0 < x1 <= self.width and 0 <= y0 < y1 <= self.height):
            raise ValueError(f"crop ({x0},{y0},{x1},{y1}) exceeds {self.width}x{self.height}")
        w = x1 - x0
        out = Image(w, y1 - y0)
        for row in range(y0, y1):
            src = (row * self.width + x0) * 3
            dst = (row - y0) * w * 3
            out.pixels[dst : dst + w * 3] = self.pixels[src : src + w * 3]
        return out

    def fill_rect(self, x0: int, y0: int, x1: int, y1: int, color: tuple[int, int, int]) -> None:
        """Fill the half-open pixel rectangle [x0,x1) x [y0,y1), clipped to bounds."""
        x0, x1 = max(0, x0), min(self.width, x1)
        y0, y1 = max(0, y0), min(self.height, y1)
        if x0 >= x1 or y0 >= y1:
            return
        row = bytes(color) * (x1 - x0)
        for y in range(y0, y1):
            i = (y * self.width + x0) * 3
            self.pixels[i : i + len(row)] = row

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Image)
            and self.width == other.width
            and self.height == other.height
            and self.pixels == other.pixels
        )

    def __repr__(self) -> str:
        return f"Image({self.width}x{self.height})"
