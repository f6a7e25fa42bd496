# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pixel kernels; bit-identical twins of ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, floor, sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()

ARM_N = 1
ARM_S = 2
ARM_E = 4
ARM_W = 8


cdef inline void _put(cnp.uint8_t[:, :, ::1] c, Py_ssize_t y, Py_ssize_t x,
                      cnp.uint8_t r, cnp.uint8_t g, cnp.uint8_t b) noexcept nogil:
    c[y, x, 0] = r
    c[y, x, 1] = g
    c[y, x, 2] = b


def fill_polygon(cnp.uint8_t[:, :, ::1] canvas, xs, ys, color):
    cdef Py_ssize_t h = canvas.shape[0], w = canvas.shape[1]
    cdef double[::1] vx = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] vy = np.ascontiguousarray(ys, dtype=np.float64)
    cdef Py_ssize_t n = vx.shape[0]
    cdef cnp.uint8_t r = color[0], g = color[1], b = color[2]
    cdef Py_ssize_t j, k, m, i, a, cnt, c0, c1
    cdef double x0, y0, x1, y1, ya, yb, xc
    cdef long tmp
    cdef long *cross
    if n < 3:
        return
    cross = <long *> malloc(n * sizeof(long))
    if cross == NULL:
        raise MemoryError()
    try:
        with nogil:
            for j in range(h):
                cnt = 0
                for k in range(n):
                    x0 = vx[k]
                    y0 = vy[k]
                    x1 = vx[(k + 1) % n]
                    y1 = vy[(k + 1) % n]
                    if y0 == y1:
                        continue
                    if y0 < y1:
                        ya = y0
                        yb = y1
                    else:
                        ya = y1
                        yb = y0
                    if j < ceil(ya) or j > ceil(yb) - 1:
                        continue
                    xc = ceil(x0 + (<double> j - y0) * (x1 - x0) / (y1 - y0))
                    if xc < 0:
                        xc = 0
                    elif xc > w:
                        xc = w
                    cross[cnt] = <long> xc
                    cnt += 1
                # insertion sort; crossing counts per row are tiny
                for a in range(1, cnt):
                    tmp = cross[a]
                    m = a - 1
                    while m >= 0 and cross[m] > tmp:
                        cross[m + 1] = cross[m]
                        m -= 1
                    cross[m + 1] = tmp
                a = 0
                while a + 1 < cnt:
                    c0 = cross[a]
                    c1 = cross[a + 1]
                    for i in range(c0, c1):
                        _put(canvas, j, i, r, g, b)
                    a += 2
    finally:
        free(cross)


cdef inline long _round_half_up(double v) noexcept nogil:
    return <long> floor(v + 0.5)


def draw_segment(cnp.uint8_t[:, :, ::1] canvas, double x0, double y0,
                 double x1, double y1, color):
    cdef Py_ssize_t h = canvas.shape[0], w = canvas.shape[1]
    cdef cnp.uint8_t r = color[0], g = color[1], b = color[2]
    cdef long ax = _round_half_up(x0), ay = _round_half_up(y0)
    cdef long bx = _round_half_up(x1), by = _round_half_up(y1)
    cdef long dx = bx - ax, dy = by - ay
    cdef long adx = dx if dx >= 0 else -dx
    cdef long ady = dy if dy >= 0 else -dy
    cdef long n = adx if adx > ady else ady
    cdef long sx = 1 if dx >= 0 else -1
    cdef long sy = 1 if dy >= 0 else -1
    cdef long t, px, py
    if n == 0:
        if 0 <= ax < w and 0 <= ay < h:
            _put(canvas, ay, ax, r, g, b)
        return
    with nogil:
        for t in range(n + 1):
            px = ax + sx * ((2 * t * adx + n) // (2 * n))
            py = ay + sy * ((2 * t * ady + n) // (2 * n))
            if 0 <= px < w and 0 <= py < h:
                _put(canvas, py, px, r, g, b)


def draw_ring(cnp.uint8_t[:, :, ::1] canvas, double cx, double cy,
              double radius, double stroke, color):
    cdef Py_ssize_t h = canvas.shape[0], w = canvas.shape[1]
    cdef cnp.uint8_t r = color[0], g = color[1], b = color[2]
    cdef double lo = radius - stroke / 2.0
    cdef double hi = radius + stroke / 2.0
    cdef long x0 = <long> floor(cx - hi) - 1
    cdef long x1 = <long> ceil(cx + hi) + 1
    cdef long y0 = <long> floor(cy - hi) - 1
    cdef long y1 = <long> ceil(cy + hi) + 1
    cdef long x, y
    cdef double dxf, dyf, d
    if x0 < 0:
        x0 = 0
    if y0 < 0:
        y0 = 0
    if x1 > w - 1:
        x1 = w - 1
    if y1 > h - 1:
        y1 = h - 1
    with nogil:
        for y in range(y0, y1 + 1):
            dyf = <double> y - cy
            for x in range(x0, x1 + 1):
                dxf = <double> x - cx
                d = sqrt(dxf * dxf + dyf * dyf)
                if d >= lo and d < hi:
                    _put(canvas, y, x, r, g, b)


cdef inline int _find(int *parent, int a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def label_components(mask):
    cdef cnp.uint8_t[:, ::1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef int[:, ::1] lab = labels_arr
    # a new provisional label needs an unset west neighbour
    cdef Py_ssize_t cap = h * ((w + 1) // 2) + 2
    cdef int *parent = <int *> malloc(cap * sizeof(int))
    cdef int *final = NULL
    cdef int nxt = 1, best, cand, ra, rb, count = 0
    cdef Py_ssize_t y, x, k
    cdef int ny, nx
    cdef int oy[4]
    cdef int ox[4]
    if parent == NULL:
        raise MemoryError()
    oy[0] = -1; ox[0] = -1
    oy[1] = -1; ox[1] = 0
    oy[2] = -1; ox[2] = 1
    oy[3] = 0; ox[3] = -1
    try:
        with nogil:
            for y in range(h):
                for x in range(w):
                    if m[y, x] == 0:
                        continue
                    best = 0
                    for k in range(4):
                        ny = <int> y + oy[k]
                        nx = <int> x + ox[k]
                        if ny < 0 or nx < 0 or nx >= w:
                            continue
                        cand = lab[ny, nx]
                        if cand == 0:
                            continue
                        if best == 0:
                            best = cand
                        else:
                            ra = _find(parent, best)
                            rb = _find(parent, cand)
                            if ra < rb:
                                parent[rb] = ra
                            elif rb < ra:
                                parent[ra] = rb
                    if best == 0:
                        parent[nxt] = nxt
                        lab[y, x] = nxt
                        nxt += 1
                    else:
                        lab[y, x] = best
        final = <int *> malloc(nxt * sizeof(int))
        if final == NULL:
            raise MemoryError()
        with nogil:
            for k in range(nxt):
                final[k] = 0
            # provisional labels grow in raster order, so the minimal root of
            # each component is its first pixel's label
            for y in range(h):
                for x in range(w):
                    if lab[y, x] == 0:
                        continue
                    ra = _find(parent, lab[y, x])
                    if final[ra] == 0:
                        count += 1
                        final[ra] = count
                    lab[y, x] = final[ra]
    finally:
        free(parent)
        if final != NULL:
            free(final)
    return labels_arr, count


def corner_arms(mask, int arm_len):
    cdef cnp.uint8_t[:, ::1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t y, x
    cdef int s, k, ok
    cdef int dys[4]
    cdef int dxs[4]
    cdef int bits[4]
    cdef long yy, xx
    dys[0] = -1; dxs[0] = 0; bits[0] = 1
    dys[1] = 1; dxs[1] = 0; bits[1] = 2
    dys[2] = 0; dxs[2] = 1; bits[2] = 4
    dys[3] = 0; dxs[3] = -1; bits[3] = 8
    with nogil:
        for y in range(h):
            for x in range(w):
                if m[y, x] == 0:
                    continue
                for k in range(4):
                    ok = 1
                    for s in range(1, arm_len + 1):
                        yy = y + dys[k] * s
                        xx = x + dxs[k] * s
                        if yy < 0 or yy >= h or xx < 0 or xx >= w or m[yy, xx] == 0:
                            ok = 0
                            break
                    if ok:
                        out[y, x] |= bits[k]
    return out_arr
