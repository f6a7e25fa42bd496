"""NumPy implementations of the pixel kernels.

Every function here has a twin in ``_ckernels.pyx`` that must produce
bit-identical output; ``tests/test_kernels.py`` holds them to that.
"""
import math

import numpy as np
from scipy import ndimage

# arm direction bits
ARM_N = 1
ARM_S = 2
ARM_E = 4
ARM_W = 8

_EIGHT = np.ones((3, 3), dtype=bool)


def fill_polygon(canvas, xs, ys, color):
    """Even-odd scanline fill, sampled at pixel centres.

    Pixel ``(i, j)`` is inside when an odd number of edge crossings on row
    ``j`` satisfy ``x <= i``.  Edges are half-open in y.
    """
    h, w = canvas.shape[:2]
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    n = len(xs)
    if n < 3:
        return
    toggles = np.zeros((h, w + 1), dtype=np.int32)
    for k in range(n):
        x0, y0 = xs[k], ys[k]
        x1, y1 = xs[(k + 1) % n], ys[(k + 1) % n]
        if y0 == y1:
            continue
        ya, yb = (y0, y1) if y0 < y1 else (y1, y0)
        r0 = max(int(math.ceil(ya)), 0)
        r1 = min(int(math.ceil(yb)) - 1, h - 1)
        if r1 < r0:
            continue
        rows = np.arange(r0, r1 + 1, dtype=np.float64)
        xc = x0 + (rows - y0) * (x1 - x0) / (y1 - y0)
        cols = np.clip(np.ceil(xc), 0, w).astype(np.int64)
        np.add.at(toggles, (rows.astype(np.int64), cols), 1)
    inside = (np.cumsum(toggles[:, :w], axis=1) & 1).astype(bool)
    canvas[inside] = color


def _round_half_up(v):
    return int(math.floor(v + 0.5))


def draw_segment(canvas, x0, y0, x1, y1, color):
    """Bresenham segment between rounded endpoints, clipped to the canvas."""
    h, w = canvas.shape[:2]
    ax, ay = _round_half_up(x0), _round_half_up(y0)
    bx, by = _round_half_up(x1), _round_half_up(y1)
    dx, dy = bx - ax, by - ay
    n = max(abs(dx), abs(dy))
    if n == 0:
        if 0 <= ax < w and 0 <= ay < h:
            canvas[ay, ax] = color
        return
    t = np.arange(n + 1, dtype=np.int64)
    sx = 1 if dx >= 0 else -1
    sy = 1 if dy >= 0 else -1
    px = ax + sx * ((2 * t * abs(dx) + n) // (2 * n))
    py = ay + sy * ((2 * t * abs(dy) + n) // (2 * n))
    ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
    canvas[py[ok], px[ok]] = color


def draw_ring(canvas, cx, cy, radius, stroke, color):
    """Pixels whose centre distance d satisfies r - s/2 <= d < r + s/2."""
    h, w = canvas.shape[:2]
    lo = radius - stroke / 2.0
    hi = radius + stroke / 2.0
    x0 = max(int(math.floor(cx - hi)) - 1, 0)
    x1 = min(int(math.ceil(cx + hi)) + 1, w - 1)
    y0 = max(int(math.floor(cy - hi)) - 1, 0)
    y1 = min(int(math.ceil(cy + hi)) + 1, h - 1)
    if x1 < x0 or y1 < y0:
        return
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    dxf = xs.astype(np.float64) - cx
    dyf = ys.astype(np.float64) - cy
    d = np.sqrt(dxf * dxf + dyf * dyf)
    sel = (d >= lo) & (d < hi)
    canvas[ys[sel], xs[sel]] = color


def label_components(mask):
    """8-connected labelling; labels numbered in raster order of first pixel."""
    labels, count = ndimage.label(np.asarray(mask, dtype=bool), structure=_EIGHT)
    return labels.astype(np.int32), int(count)


def corner_arms(mask, arm_len):
    """Arm code per pixel of ``mask``.

    An arm in a direction exists when the ``arm_len`` pixels stepping away
    from the pixel in that direction are all set.  Unset pixels get 0.
    """
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for bit, (dy, dx) in ((ARM_N, (-1, 0)), (ARM_S, (1, 0)),
                          (ARM_E, (0, 1)), (ARM_W, (0, -1))):
        ok = m.copy()
        for step in range(1, arm_len + 1):
            shifted = np.zeros_like(m)
            oy, ox = dy * step, dx * step
            src = m[max(oy, 0):h + min(oy, 0), max(ox, 0):w + min(ox, 0)]
            shifted[max(-oy, 0):h + min(-oy, 0), max(-ox, 0):w + min(-ox, 0)] = src
            ok &= shifted
        out[ok] |= bit
    return out
