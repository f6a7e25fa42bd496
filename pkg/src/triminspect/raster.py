"""Flat-colour rendering of section profiles, zoom crops and the calibration circle.

Pixel coordinates are continuous with integer values at pixel centres,
x to the right and y down.  A :class:`Viewport` maps millimetres (y up) to
pixels; its centre lands on pixel ``(width // 2, height // 2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .detmath import Box
from .errors import ConfigError, ParameterError, RenderError
from .imaging import (
    PALETTE, LabeledBox, Palette, RgbImage, decode_ppm, encode_ppm, read_ppm, write_ppm,
)

SECTION_SIZE = (1880, 933)
DEFAULT_SECTION_MM_PER_PX = 2.0
SHORTCUT_RADIUS_PX = 25.0
SHORTCUT_STROKE_PX = 3.0
REGION_MIN_PX = 30.0
CROP_SIZE = 640
REGION_SPAN_PX = 400.0
CIRCLE_DIAMETER_MM = 20.0

# the image interface is re-exported for callers that only import raster
__all__ = [
    "CIRCLE_DIAMETER_MM", "CROP_SIZE", "DEFAULT_SECTION_MM_PER_PX", "PALETTE", "REGION_MIN_PX",
    "REGION_SPAN_PX", "SECTION_SIZE", "SHORTCUT_RADIUS_PX", "SHORTCUT_STROKE_PX", "LabeledBox",
    "Palette", "RgbImage", "Viewport", "calibration_size", "crop_mm_per_px", "decode_ppm",
    "encode_ppm", "mm_to_px", "point_truth_boxes", "px_to_mm", "read_ppm", "render_calibration_circle",
    "render_section", "render_zoom", "section_viewport", "write_ppm", "zoom_viewport",
]


@dataclass(frozen=True)
class Viewport:
    center: tuple  # mm
    mm_per_px: float
    width: int
    height: int

    def __post_init__(self):
        if not self.mm_per_px > 0:
            raise ParameterError("mm_per_px must be positive")
        if self.width < 1 or self.height < 1:
            raise ParameterError("viewport dimensions must be >= 1")

    def to_dict(self):
        return {"center": list(self.center), "mm_per_px": self.mm_per_px,
                "width": self.width, "height": self.height}


def mm_to_px(vp: Viewport, q):
    return (vp.width // 2 + (q[0] - vp.center[0]) / vp.mm_per_px,
            vp.height // 2 - (q[1] - vp.center[1]) / vp.mm_per_px)


def px_to_mm(vp: Viewport, p):
    return (vp.center[0] + (p[0] - vp.width // 2) * vp.mm_per_px,
            vp.center[1] - (p[1] - vp.height // 2) * vp.mm_per_px)


def section_viewport(profile, mm_per_px=DEFAULT_SECTION_MM_PER_PX, size=SECTION_SIZE):
    """Viewport centred on the bounding box of every polygon in the section."""
    xs = [q[0] for p in profile.polygons for q in p.points]
    ys = [q[1] for p in profile.polygons for q in p.points]
    if xs:
        center = ((min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0)
    else:
        center = tuple(profile.target_center)
    return Viewport(center, float(mm_per_px), int(size[0]), int(size[1]))


def zoom_viewport(center, mm_per_px, size=CROP_SIZE):
    return Viewport(tuple(center), float(mm_per_px), int(size), int(size))


def crop_mm_per_px(section_mm_per_px, region_px=REGION_MIN_PX, span_px=REGION_SPAN_PX,
                   circle_mm=CIRCLE_DIAMETER_MM):
    """Zoom at which a ``region_px`` section region spans about ``span_px``.

    Snapped so the calibration circle has an integral pixel radius.
    """
    target = section_mm_per_px * region_px / span_px
    radius_px = max(1, round(circle_mm / 2.0 / target))
    return circle_mm / 2.0 / radius_px


def _region_box(vp, pts, min_px=REGION_MIN_PX):
    proj = [mm_to_px(vp, q) for q in pts.values()]
    xs = [p[0] for p in proj]
    ys = [p[1] for p in proj]
    w = max(max(xs) - min(xs), min_px)
    h = max(max(ys) - min(ys), min_px)
    return Box((min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0, w, h)


def _inside(box, vp):
    return box.x0 >= -0.5 and box.y0 >= -0.5 and box.x1 <= vp.width - 0.5 and box.y1 <= vp.height - 0.5


def _draw_profile(canvas, profile, vp, palette):
    projected = []
    for poly in profile.polygons:
        pts = [mm_to_px(vp, q) for q in poly.points]
        projected.append(pts)
        _kernels.fill_polygon(canvas, [p[0] for p in pts], [p[1] for p in pts], palette.fill)
    for pts in projected:
        n = len(pts)
        for i in range(n):
            a, b = pts[i], pts[(i + 1) % n]
            _kernels.draw_segment(canvas, a[0], a[1], b[0], b[1], palette.line)


def render_section(profile, vp: Viewport, shortcut_on: bool, palette: Palette = PALETTE,
                   shortcut_radius=SHORTCUT_RADIUS_PX, shortcut_stroke=SHORTCUT_STROKE_PX,
                   region_min_px=REGION_MIN_PX):
    """Render a section; returns ``(image, truth_boxes)``.

    ``truth_boxes`` lists the target region first (label ``"region"``) and
    then one ``"distractor"`` box per distractor that lies inside the image.
    """
    canvas = np.full((vp.height, vp.width, 3), palette.background, dtype=np.uint8)
    _draw_profile(canvas, profile, vp, palette)
    boxes = []
    if profile.truth_points:
        target = _region_box(vp, profile.truth_points, region_min_px)
        if not _inside(target, vp):
            raise RenderError(f"target region {target.to_xywh()} falls outside the {vp.width}x{vp.height} viewport")
        boxes.append(LabeledBox("region", target))
        for d in profile.distractor_points:
            b = _region_box(vp, d, region_min_px)
            if _inside(b, vp):
                boxes.append(LabeledBox("distractor", b))
        if shortcut_on:
            cx, cy = mm_to_px(vp, profile.target_center)
            _kernels.draw_ring(canvas, math.floor(cx + 0.5), math.floor(cy + 0.5),
                               shortcut_radius, shortcut_stroke, palette.shortcut)
    return RgbImage(vp.width, vp.height, canvas), boxes


def render_zoom(profile, center, mm_per_px, size=CROP_SIZE, palette: Palette = PALETTE):
    """Enlarged view around ``center`` (mm); no shortcut mark."""
    vp = zoom_viewport(center, mm_per_px, size)
    canvas = np.full((vp.height, vp.width, 3), palette.background, dtype=np.uint8)
    _draw_profile(canvas, profile, vp, palette)
    return RgbImage(vp.width, vp.height, canvas)


def calibration_size(mm_per_px, diameter_mm=CIRCLE_DIAMETER_MM, minimum=CROP_SIZE):
    """Smallest even canvas (at least ``minimum``) that holds the circle."""
    need = math.ceil(diameter_mm / mm_per_px) + 8
    return max(minimum, need + need % 2)


def render_calibration_circle(mm_per_px, size=CROP_SIZE, diameter_mm=CIRCLE_DIAMETER_MM,
                              palette: Palette = PALETTE):
    """Black 1 px circle outline of true diameter ``diameter_mm``, centred."""
    if not mm_per_px > 0:
        raise ParameterError("mm_per_px must be positive")
    d_px = diameter_mm / mm_per_px
    if d_px > size - 4:
        raise ConfigError(
            f"a {diameter_mm} mm circle at {mm_per_px} mm/px ({d_px:.1f} px) does not fit in {size} px")
    canvas = np.full((size, size, 3), palette.background, dtype=np.uint8)
    c = size // 2
    _kernels.draw_ring(canvas, c, c, d_px / 2.0, 1.0, palette.line)
    return RgbImage(size, size, canvas)


def point_truth_boxes(profile, vp: Viewport, size_px):
    """``point_k`` truth boxes of side ``size_px`` on the projected truth points."""
    out = []
    for k in sorted(profile.truth_points):
        x, y = mm_to_px(vp, profile.truth_points[k])
        out.append(LabeledBox(f"point_{k}", Box(x, y, float(size_px), float(size_px))))
    return out
