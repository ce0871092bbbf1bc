# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-pixel hot loops.

Mirrors `_pure.py` exactly; see there for semantics. Keep the float
expressions in the two files textually aligned so outputs stay identical.
"""

from cpython cimport array
from libc.math cimport floor
from libc.stdlib cimport free, malloc

import array as _array

MAX_RANGES = 16


def resize_bilinear_rgb(const unsigned char[::1] src, int sw, int sh, int dw, int dh):
    if sw <= 0 or sh <= 0 or dw <= 0 or dh <= 0:
        raise ValueError("dimensions must be positive")
    if src.shape[0] != sw * sh * 3:
        raise ValueError("source buffer size mismatch")
    out_obj = bytearray(dw * dh * 3)
    cdef unsigned char[::1] out = out_obj

    cdef int *x0s = <int *> malloc(dw * sizeof(int))
    cdef int *x1s = <int *> malloc(dw * sizeof(int))
    cdef double *txs = <double *> malloc(dw * sizeof(double))
    if x0s == NULL or x1s == NULL or txs == NULL:
        free(x0s); free(x1s); free(txs)
        raise MemoryError()

    cdef int dx, dy, x0, x1, y0, y1, y0c, y1c, a, b, c, d, ch
    cdef long o = 0, row0, row1
    cdef double fx, fy, t, u, w00, w10, w01, w11, val
    try:
        for dx in range(dw):
            fx = (dx + 0.5) * sw / dw - 0.5
            x0 = <int> floor(fx)
            txs[dx] = fx - x0
            x0s[dx] = 0 if x0 < 0 else (sw - 1 if x0 > sw - 1 else x0)
            x1 = x0 + 1
            x1s[dx] = 0 if x1 < 0 else (sw - 1 if x1 > sw - 1 else x1)

        for dy in range(dh):
            fy = (dy + 0.5) * sh / dh - 0.5
            y0 = <int> floor(fy)
            u = fy - y0
            y0c = 0 if y0 < 0 else (sh - 1 if y0 > sh - 1 else y0)
            y1 = y0 + 1
            y1c = 0 if y1 < 0 else (sh - 1 if y1 > sh - 1 else y1)
            row0 = <long> y0c * sw * 3
            row1 = <long> y1c * sw * 3
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
                    out[o] = <unsigned char> (<int> (val + 0.5))
                    o += 1
    finally:
        free(x0s); free(x1s); free(txs)
    return out_obj


def hsv_mask_union(const unsigned char[::1] src, int n, ranges):
    if src.shape[0] != n * 3:
        raise ValueError("source buffer size mismatch")
    if len(ranges) % 6 != 0:
        raise ValueError("ranges must be a flat sequence of 6-tuples")
    cdef int k = len(ranges) // 6
    if not 0 < k <= MAX_RANGES:
        raise ValueError(f"need between 1 and {MAX_RANGES} ranges")
    cdef double rg[96]
    cdef int ri
    for ri in range(6 * k):
        rg[ri] = float(ranges[ri])

    out_obj = bytearray(n)
    cdef unsigned char[::1] out = out_obj
    cdef long i3 = 0
    cdef int i, j, base, r, g, b, mx, mn, c
    cdef double v, s, h, h_lo, h_hi
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
        s = 0.0 if mx == 0 else c / (<double> mx)
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
    return out_obj


def label_components8(const unsigned char[::1] mask, int w, int h):
    cdef long n = <long> w * h
    if mask.shape[0] != n:
        raise ValueError("mask size mismatch")
    labels_obj = _array.array("i", bytes(4 * n))
    cdef int[::1] labels = labels_obj
    cdef int *stack = <int *> malloc(n * sizeof(int))
    if stack == NULL:
        raise MemoryError()
    cdef long top, start, p, q, base
    cdef int count = 0
    cdef int px, py, nx, ny, y_lo, y_hi, x_lo, x_hi
    try:
        for start in range(n):
            if mask[start] == 0 or labels[start] != 0:
                continue
            count += 1
            labels[start] = count
            top = 0
            stack[top] = start
            top += 1
            while top > 0:
                top -= 1
                p = stack[top]
                px = p % w
                py = p // w
                y_lo = py - 1 if py > 0 else 0
                y_hi = py + 1 if py < h - 1 else h - 1
                x_lo = px - 1 if px > 0 else 0
                x_hi = px + 1 if px < w - 1 else w - 1
                for ny in range(y_lo, y_hi + 1):
                    base = <long> ny * w
                    for nx in range(x_lo, x_hi + 1):
                        q = base + nx
                        if mask[q] != 0 and labels[q] == 0:
                            labels[q] = count
                            stack[top] = q
                            top += 1
    finally:
        free(stack)
    return labels_obj, count


def region_stats(const int[::1] labels, int w, int h, int count):
    cdef long n = <long> w * h
    if labels.shape[0] != n:
        raise ValueError("labels size mismatch")
    if count == 0:
        return []
    cdef long long *acc = <long long *> malloc(count * 10 * sizeof(long long))
    if acc == NULL:
        raise MemoryError()
    cdef int k, x, y, lab
    cdef long i = 0
    cdef long long *row
    try:
        for k in range(count):
            row = acc + k * 10
            row[0] = 0          # area
            row[1] = w          # min_x
            row[2] = h          # min_y
            row[3] = -1         # max_x
            row[4] = -1         # max_y
            row[5] = 0; row[6] = 0; row[7] = 0; row[8] = 0; row[9] = 0
        for y in range(h):
            for x in range(w):
                lab = labels[i]
                i += 1
                if lab == 0:
                    continue
                row = acc + (lab - 1) * 10
                row[0] += 1
                if x < row[1]:
                    row[1] = x
                if x > row[3]:
                    row[3] = x
                if y < row[2]:
                    row[2] = y
                if y > row[4]:
                    row[4] = y
                row[5] += x
                row[6] += y
                row[7] += <long long> x * x
                row[8] += <long long> y * y
                row[9] += <long long> x * y
        result = []
        for k in range(count):
            row = acc + k * 10
            result.append(
                (int(row[0]), int(row[1]), int(row[2]), int(row[3]), int(row[4]),
                 int(row[5]), int(row[6]), int(row[7]), int(row[8]), int(row[9]))
            )
        return result
    finally:
        free(acc)
