"""Pure-Python kernels: the dependency-free fallback path.

These mirror `_native.pyx` operation for operation; the float expressions
are kept textually identical so both backends produce the same bytes.
"""

from __future__ import annotations

from array import array
from math import floor

MAX_RANGES = 16


def resize_bilinear_rgb(src, sw: int, sh: int, dw: int, dh: int) -> bytearray:
    """Resize an interleaved RGB buffer with bilinear sampling at pixel centers."""
    if sw <= 0 or sh <= 0 or dw <= 0 or dh <= 0:
        raise ValueError("dimensions must be positive")
    if len(src) != sw * sh * 3:
        raise ValueError("source buffer size mismatch")
    out = bytearray(dw * dh * 3)

    x0s = [0] * dw
    x1s = [0] * dw
    txs = [0.0] * dw
    for dx in range(dw):
        fx = (dx + 0.5) * sw / dw - 0.5
        x0 = floor(fx)
        txs[dx] = fx - x0
        x0s[dx] = 0 if x0 < 0 else (sw - 1 if x0 > sw - 1 else x0)
        x1 = x0 + 1
        x1s[dx] = 0 if x1 < 0 else (sw - 1 if x1 > sw - 1 else x1)

    o = 0
    for dy in range(dh):
        fy = (dy + 0.5) * sh / dh - 0.5
        y0 = floor(fy)
        u = fy - y0
        y0c = 0 if y0 < 0 else (sh - 1 if y0 > sh - 1 else y0)
        y1 = y0 + 1
        y1c = 0 if y1 < 0 else (sh - 1 if y1 > sh - 1 else y1)
        row0 = y0c * sw * 3
        row1 = y1c * sw * 3
        for dx in range(dw):
            t = txs[dx]
            a = row0 + x0s[dx] * 3
            b = row0 + x1s[dx] * 3
            c = row1 + x0s[dx] * 3
            d = row1 + x1s[dx] * 3
            w00 = (1.0 - t) * (1.0 - u)
            w10 = t * (1.0 - u)
            w01 = (1.0 - t) * u
            w11 = t * u
            for ch in range(3):
                val = (
                    w00 * src[a + ch]
                    + w10 * src[b + ch]
                    + w01 * src[c + ch]
                    + w11 * src[d + ch]
                )
                out[o] = int(val + 0.5)
                o += 1
    return out


def hsv_mask_union(src, n: int, ranges) -> bytearray:
    """One byte per pixel: 1 where the pixel's HSV falls in any given range.

    `ranges` is a flat sequence of 6-tuples flattened:
    (h_lo, h_hi, s_lo, s_hi, v_lo, v_hi) * k, hue in degrees with wraparound
    allowed (h_lo > h_hi wraps through 0).
    """
    if len(src) != n * 3:
        raise ValueError("source buffer size mismatch")
    if len(ranges) % 6 != 0:
        raise ValueError("ranges must be a flat sequence of 6-tuples")
    k = len(ranges) // 6
    if not 0 < k <= MAX_RANGES:
        raise ValueError(f"need between 1 and {MAX_RANGES} ranges")
    rg = [float(v) for v in ranges]
    out = bytearray(n)
    i3 = 0
    for i in range(n):
        r = src[i3]
        g = src[i3 + 1]
        b = src[i3 + 2]
        i3 += 3
        mx = r if r >= g else g
        if b > mx:
            mx = b
        mn = r if r <= g else g
        if b < mn:
            mn = b
        v = mx / 255.0
        c = mx - mn
        s = 0.0 if mx == 0 else c / mx
        if c == 0:
            h = 0.0
        elif mx == r:
            h = 60.0 * (g - b) / c
            if h < 0.0:
                h += 360.0
        elif mx == g:
            h = 60.0 * (b - r) / c + 120.0
        else:
            h = 60.0 * (r - g) / c + 240.0
        for j in range(k):
            base = j * 6
            if s < rg[base + 2] or s > rg[base + 3]:
                continue
            if v < rg[base + 4] or v > rg[base + 5]:
                continue
            h_lo = rg[base]
            h_hi = rg[base + 1]
            if h_lo <= h_hi:
                if h_lo <= h <= h_hi:
                    out[i] = 1
                    break
            elif h >= h_lo or h <= h_hi:
                out[i] = 1
                break
    return out


def label_components8(mask, w: int, h: int) -> tuple[array, int]:
    """8-connected component labeling; labels are 1-based, 0 is background.

    Components are numbered by row-major order of their first pixel, so the
    numbering is deterministic and identical across kernel backends.
    """
    n = w * h
    if len(mask) != n:
        raise ValueError("mask size mismatch")
    labels = array("i", bytes(4 * n))
    stack: list[int] = []
    count = 0
    for start in range(n):
        if mask[start] == 0 or labels[start] != 0:
            continue
        count += 1
        labels[start] = count
        stack.append(start)
        while stack:
            p = stack.pop()
            px = p % w
            py = p // w
            y_lo = py - 1 if py > 0 else 0
            y_hi = py + 1 if py < h - 1 else h - 1
            x_lo = px - 1 if px > 0 else 0
            x_hi = px + 1 if px < w - 1 else w - 1
            for ny in range(y_lo, y_hi + 1):
                base = ny * w
                for nx in range(x_lo, x_hi + 1):
                    q = base + nx
                    if mask[q] != 0 and labels[q] == 0:
                        labels[q] = count
                        stack.append(q)
    return labels, count


def region_stats(labels, w: int, h: int, count: int) -> list[tuple]:
    """Per-label pixel statistics, index k holds label k+1.

    Tuple layout: (area, min_x, min_y, max_x, max_y,
                   sum_x, sum_y, sum_xx, sum_yy, sum_xy), all integers.
    """
    if len(labels) != w * h:
        raise ValueError("labels size mismatch")
    if count == 0:
        return []
    area = [0] * count
    min_x = [w] * count
    min_y = [h] * count
    max_x = [-1] * count
    max_y = [-1] * count
    sx = [0] * count
    sy = [0] * count
    sxx = [0] * count
    syy = [0] * count
    sxy = [0] * count
    i = 0
    for y in range(h):
        for x in range(w):
            lab = labels[i]
            i += 1
            if lab == 0:
                continue
            k = lab - 1
            area[k] += 1
            if x < min_x[k]:
                min_x[k] = x
            if x > max_x[k]:
                max_x[k] = x
            if y < min_y[k]:
                min_y[k] = y
            if y > max_y[k]:
                max_y[k] = y
            sx[k] += x
            sy[k] += y
            sxx[k] += x * x
            syy[k] += y * y
            sxy[k] += x * y
    return [
        (area[k], min_x[k], min_y[k], max_x[k], max_y[k], sx[k], sy[k], sxx[k], syy[k], sxy[k])
        for k in range(count)
    ]
