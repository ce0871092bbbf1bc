"""PNG and PPM (P6) codecs.

Only what the pipeline needs: 8-bit depth, no interlacing, RGB output.
PNG reading accepts grayscale, RGB, and RGBA sources and converts to RGB.
"""

from __future__ import annotations

import os
import struct
import zlib

from .image import Image

_PNG_SIG = b"\x89PNG\r\n\x1a\n"


def write_ppm(img: Image, path: str | os.PathLike) -> None:
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (img.width, img.height))
        f.write(bytes(img.pixels))


def read_ppm(path: str | os.PathLike) -> Image:
    with open(path, "rb") as f:
        data = f.read()
    magic, width, height, maxval, offset = _parse_ppm_header(data, path)
    if magic != b"P6":
        raise ValueError(f"{path}: not a P6 PPM")
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PPM supported, maxval={maxval}")
    n = width * height * 3
    body = data[offset : offset + n]
    if len(body) != n:
        raise ValueError(f"{path}: truncated pixel data")
    return Image(width, height, body)


def _parse_ppm_header(data: bytes, path) -> tuple[bytes, int, int, int, int]:
    # header tokens may be separated by whitespace and '#' comments
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4 and i < len(data):
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            start = i
            while i < len(data) and not data[i : i + 1].isspace():
                i += 1
            tokens.append(data[start:i])
    if len(tokens) < 4:
        raise ValueError(f"{path}: truncated PPM header")
    return tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3]), i + 1


def _chunk(kind: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(kind + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + kind + payload + struct.pack(">I", crc)


def write_png(img: Image, path: str | os.PathLike) -> None:
    ihdr = struct.pack(">IIBBBBB", img.width, img.height, 8, 2, 0, 0, 0)
    stride = img.width * 3
    raw = bytearray()
    for y in range(img.height):
        raw.append(0)  # filter: none
        raw += img.pixels[y * stride : (y + 1) * stride]
    with open(path, "wb") as f:
        f.write(_PNG_SIG)
        f.write(_chunk(b"IHDR", ihdr))
        f.write(_chunk(b"IDAT", zlib.compress(bytes(raw), 6)))
        f.write(_chunk(b"IEND", b""))


def read_png(path: str | os.PathLike) -> Image:
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != _PNG_SIG:
        raise ValueError(f"{path}: not a PNG file")
    width = height = None
    bit_depth = color_type = interlace = None
    idat = bytearray()
    pos = 8
    while pos + 8 <= len(data):
        length, kind = struct.unpack(">I4s", data[pos : pos + 8])
        payload = data[pos + 8 : pos + 8 + length]
        pos += 12 + length
        if kind == b"IHDR":
            width, height, bit_depth, color_type, _, _, interlace = struct.unpack(
                ">IIBBBBB", payload
            )
        elif kind == b"IDAT":
            idat += payload
        elif kind == b"IEND":
            break
    if width is None:
        raise ValueError(f"{path}: missing IHDR")
    if bit_depth != 8 or interlace != 0:
        raise ValueError(f"{path}: unsupported PNG (depth={bit_depth}, interlace={interlace})")
    channels = {0: 1, 2: 3, 6: 4}.get(color_type)
    if channels is None:
        raise ValueError(f"{path}: unsupported PNG color type {color_type}")
    raw = zlib.decompress(bytes(idat))
    stride = width * channels
    if len(raw) != (stride + 1) * height:
        raise ValueError(f"{path}: PNG pixel data has wrong length")
    flat = _unfilter(raw, height, stride, channels)
    if channels == 3:
        return Image(width, height, flat)
    out = bytearray(width * height * 3)
    if channels == 1:
        for i, v in enumerate(flat):
            out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = v
    else:  # RGBA: drop alpha
        for i in range(width * height):
            out[3 * i : 3 * i + 3] = flat[4 * i : 4 * i + 3]
    return Image(width, height, out)


def _unfilter(raw: bytes, height: int, stride: int, bpp: int) -> bytearray:
    out = bytearray(height * stride)
    prev_start = -stride
    for y in range(height):
        ftype = raw[y * (stride + 1)]
        line = raw[y * (stride + 1) + 1 : (y + 1) * (stride + 1)]
        start = y * stride
        if ftype == 0:
            out[start : start + stride] = line
        elif ftype == 1:  # sub
            for i in range(stride):
                left = out[start + i - bpp] if i >= bpp else 0
                out[start + i] = (line[i] + left) & 0xFF
        elif ftype == 2:  # up
            for i in range(stride):
                up = out[prev_start + i] if y > 0 else 0
                out[start + i] = (line[i] + up) & 0xFF
        elif ftype == 3:  # average
            for i in range(stride):
                left = out[start + i - bpp] if i >= bpp else 0
                up = out[prev_start + i] if y > 0 else 0
                out[start + i] = (line[i] + (left + up) // 2) & 0xFF
        elif ftype == 4:  # paeth
            for i in range(stride):
                left = out[start + i - bpp] if i >= bpp else 0
                up = out[prev_start + i] if y > 0 else 0
                ul = out[prev_start + i - bpp] if (y > 0 and i >= bpp) else 0
                out[start + i] = (line[i] + _paeth(left, up, ul)) & 0xFF
        else:
            raise ValueError(f"unknown PNG filter {ftype}")
        prev_start = start
    return out


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def read_image(path: str | os.PathLike) -> Image:
    with open(path, "rb") as f:
        magic = f.read(8)
    if magic[:8] == _PNG_SIG:
        return read_png(path)
    if magic[:2] == b"P6":
        return read_ppm(path)
    raise ValueError(f"{path}: not a PNG or P6 PPM file")


def read_image_size(path: str | os.PathLike) -> tuple[int, int]:
    """Read (width, height) from the file header without decoding pixels."""
    with open(path, "rb") as f:
        head = f.read(512)
    if head[:8] == _PNG_SIG:
        if head[12:16] != b"IHDR":
            raise ValueError(f"{path}: missing IHDR")
        w, h = struct.unpack(">II", head[16:24])
        return w, h
    if head[:2] == b"P6":
        _, w, h, _, _ = _parse_ppm_header(head, path)
        return w, h
    raise ValueError(f"{path}: not a PNG or P6 PPM file")


def write_image(img: Image, path: str | os.PathLike) -> None:
    ext = os.path.splitext(os.fspath(path))[1].lower()
    if ext == ".png":
        write_png(img, path)
    elif ext in (".ppm", ".pnm"):
        write_ppm(img, path)
    else:
        raise ValueError(f"unsupported image extension {ext!r}")


IMAGE_EXTENSIONS = (".png", ".ppm", ".pnm")
