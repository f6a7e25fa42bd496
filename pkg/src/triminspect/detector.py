"""Detection stages that work on pixels only.

Two detectors stand in for the trained region and point networks: both take
an :class:`~triminspect.imaging.RgbImage` plus a :class:`DetectorConfig` and
return labelled pixel boxes.  Nothing in this module knows about millimetres,
die designs or section profiles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from . import _kernels
from ._kernels import ARM_E, ARM_N, ARM_S, ARM_W
from .detmath import Box, iou, nms
from .errors import ParameterError
from .imaging import PALETTE, LabeledBox, Palette, RgbImage

REGION_LABEL = "region"
POINT_LABELS = tuple(f"point_{k}" for k in range(1, 6))
LABELS = (REGION_LABEL,) + POINT_LABELS

_VERT = ARM_N | ARM_S
_HORZ = ARM_E | ARM_W


@dataclass(frozen=True)
class Detection:
    box: Box
    score: float
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ParameterError(f"unknown detection label {self.label!r}")
        if not 0.0 <= self.score <= 1.0:
            raise ParameterError(f"score {self.score} outside [0, 1]")

    def to_dict(self):
        return {"label": self.label, "box": list(self.box.to_xywh()), "score": self.score}

    @classmethod
    def from_dict(cls, d):
        return cls(Box.from_xywh(*d["box"]), float(d["score"]), d["label"])


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings.

    ``junction_norm`` is the corner-pixel count that saturates a junction
    score at 1; ``blob_radius`` is how far apart (px) two corners may be and
    still join one candidate region.
    """

    use_shortcut: bool = True
    proposal_iou_nms: float = 0.3
    junction_score_threshold: float = 0.2
    point_box_size: float = 12.0
    region_box_size: float = 30.0
    circularity_min: float = 0.6
    arm_len: int = 2
    region_arm_len: int = 1
    blob_radius: int = 13
    junction_norm: float = 12.0
    match_iou: float = 0.5
    palette: Palette = PALETTE

    def __post_init__(self):
        for name in ("proposal_iou_nms", "junction_score_threshold", "circularity_min", "match_iou"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1), got {v}")
        if self.point_box_size < 4:
            raise ParameterError("point_box_size must be >= 4 px")
        if self.region_box_size < 4:
            raise ParameterError("region_box_size must be >= 4 px")
        if self.arm_len < 1 or self.region_arm_len < 1:
            raise ParameterError("arm lengths must be >= 1")
        if self.blob_radius < 0 or not self.junction_norm > 0:
            raise ParameterError("blob_radius must be >= 0 and junction_norm > 0")

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "palette"}
        d["palette"] = self.palette.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "palette" in d:
            d["palette"] = Palette(**{k: tuple(v) for k, v in d["palette"].items()})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown detector settings: {sorted(unknown)}")
        return cls(**d)


def _check_image(img):
    if not isinstance(img, RgbImage):
        raise ParameterError(f"expected an RgbImage, got {type(img).__name__}")
    if img.pixels.shape != (img.height, img.width, 3):
        raise ParameterError("image buffer does not match its dimensions")


def _fit_box(cx, cy, w, h, width, height) -> Box:
    """Box of extent ``w``x``h`` near ``(cx, cy)`` shifted to lie inside the image.

    The image covers ``[-0.5, width - 0.5]`` since pixel centres are integers.
    """
    w = min(w, float(width))
    h = min(h, float(height))
    cx = min(max(cx, w / 2.0 - 0.5), width - 0.5 - w / 2.0)
    cy = min(max(cy, h / 2.0 - 0.5), height - 0.5 - h / 2.0)
    return Box(cx, cy, w, h)


def circularity(ys: np.ndarray, xs: np.ndarray) -> float:
    """4*pi*A/P**2 of the convex hull of pixel centres (0 when degenerate)."""
    if len(xs) < 3:
        return 0.0
    pts = np.column_stack([xs, ys]).astype(float)
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return 0.0
    # in 2-D scipy reports the enclosed area as ``volume`` and the perimeter as ``area``
    return 4.0 * math.pi * hull.volume / hull.area ** 2


def _components(labels):
    """Yield ``(k, (ys, xs))`` for each labelled component, scanning only its bounding box."""
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        ys, xs = np.nonzero(labels[sl] == k)
        yield k, (ys + sl[0].start, xs + sl[1].start)


# --- region detection ----------------------------------------------------

def _shortcut_region(img, cfg):
    labels, _ = _kernels.label_components(img.mask(cfg.palette.shortcut))
    best = None
    for k, (ys, xs) in _components(labels):
        if circularity(ys, xs) < cfg.circularity_min:
            continue
        if best is None or len(xs) > best[0]:
            best = (len(xs), xs.mean(), ys.mean())
    if best is None:
        return []
    _, cx, cy = best
    s = cfg.region_box_size
    return [Detection(_fit_box(cx, cy, s, s, img.width, img.height), 1.0, REGION_LABEL)]


def corner_mask(mask: np.ndarray, arm_len: int) -> np.ndarray:
    """Line pixels where a vertical arm meets a horizontal arm."""
    arms = _kernels.corner_arms(mask, arm_len)
    return ((arms & _VERT) != 0) & ((arms & _HORZ) != 0)


def _junction_regions(img, cfg):
    corners = corner_mask(img.mask(cfg.palette.line), cfg.region_arm_len)
    if not corners.any():
        return []
    size = 2 * cfg.blob_radius + 1
    grown = ndimage.maximum_filter(corners.astype(np.uint8), size=size, mode="constant") > 0
    labels, _ = _kernels.label_components(grown)
    boxes, scores = [], []
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        ys, xs = np.nonzero(corners[sl] & (labels[sl] == k))
        ys, xs = ys + sl[0].start, xs + sl[1].start
        score = min(1.0, len(xs) / cfg.junction_norm)
        if score < cfg.junction_score_threshold:
            continue
        s = cfg.region_box_size
        w = max(float(xs.max() - xs.min()), s)
        h = max(float(ys.max() - ys.min()), s)
        cx = (xs.max() + xs.min()) / 2.0
        cy = (ys.max() + ys.min()) / 2.0
        boxes.append(_fit_box(cx, cy, w, h, img.width, img.height))
        scores.append(score)
    keep = nms(boxes, scores, cfg.proposal_iou_nms)
    return [Detection(boxes[i], scores[i], REGION_LABEL) for i in keep]


def detect_trimming_region(image: RgbImage, cfg: DetectorConfig) -> list[Detection]:
    """Locate the target trimming region on a section image.

    With the shortcut the red ring is found directly and at most one box is
    returned.  Without it every dense cluster of orthogonal line junctions is
    a candidate; survivors of NMS come back best first.
    """
    _check_image(image)
    if cfg.use_shortcut:
        return _shortcut_region(image, cfg)
    return _junction_regions(image, cfg)


# --- target point detection -----------------------------------------------

def _run_end(mask, r, c, dr, dc):
    """Last set pixel walking from ``(r, c)`` in direction ``(dr, dc)``."""
    h, w = mask.shape
    while 0 <= r + dr < h and 0 <= c + dc < w and mask[r + dr, c + dc]:
        r += dr
        c += dc
    return r, c


def _assign_roles(mask, arms, top):
    """Roles found when ``top`` is taken as point #2 (head of the shear face)."""
    r2, c = top
    r_end, _ = _run_end(mask, r2, c, 1, 0)
    column = [(r, arms[r, c]) for r in range(r2 + 1, r_end + 1)]
    roles = {2: (r2, c)}
    east = [r for r, a in column if a & ARM_E]
    west = [r for r, a in column if a & ARM_W]
    if east:
        roles[4] = (east[0], c)
    if len(east) > 1:
        r3 = east[1]
        roles[3] = (r3, c)
        r5, c5 = _run_end(mask, r3, c, 0, 1)
        if c5 > c and arms[r5, c5] & ARM_S:
            roles[5] = (r5, c5)
    if west:
        roles[1] = (west[-1], c)
    return roles


def detect_target_points(crop: RgbImage, cfg: DetectorConfig) -> list[Detection]:
    """Find target points #1 to #5 on an enlarged crop.

    The shear face is a vertical line whose top is a T junction with the
    upper die (#2).  Walking down it, east-going branches mark the lower-die
    top (#4) and then the land step (#3); the last west-going branch is the
    blade tip (#1).  #5 ends the step to the right.
    Among several candidate faces the one explaining most roles wins, then
    the one nearest the crop centre.  Missing roles are simply absent.
    """
    _check_image(crop)
    mask = crop.mask(cfg.palette.line)
    arms = _kernels.corner_arms(mask, cfg.arm_len)
    tops = np.nonzero((arms & ARM_S != 0) & (arms & ARM_N == 0)
                      & (arms & ARM_E != 0) & (arms & ARM_W != 0))
    best, best_key = None, None
    cx0, cy0 = crop.width // 2, crop.height // 2
    for r, c in zip(*tops):
        roles = _assign_roles(mask, arms, (int(r), int(c)))
        key = (-len(roles), (c - cx0) ** 2 + (r - cy0) ** 2, r, c)
        if best_key is None or key < best_key:
            best, best_key = roles, key
    if best is None or len(best) < 2:
        return []
    s = cfg.point_box_size
    return [Detection(_fit_box(c, r, s, s, crop.width, crop.height), 1.0, f"point_{k}")
            for k, (r, c) in sorted(best.items())]


# --- evaluation -----------------------------------------------------------

@dataclass(frozen=True)
class LabelStats:
    detected: int
    total: int

    @property
    def accuracy(self):
        return self.detected / self.total if self.total else 1.0


@dataclass(frozen=True)
class DetectionStats:
    per_label: dict
    detected: int
    total: int

    @property
    def accuracy(self):
        return self.detected / self.total if self.total else 1.0

    def to_dict(self):
        return {"detected": self.detected, "total": self.total, "accuracy": self.accuracy,
                "per_label": {k: {"detected": v.detected, "total": v.total, "accuracy": v.accuracy}
                              for k, v in sorted(self.per_label.items())}}


def evaluate_detections(dets: list[Detection], truths: list[LabeledBox],
                        iou_threshold: float = 0.5) -> DetectionStats:
    """A truth counts as detected when a same-label detection overlaps it by
    at least ``iou_threshold``.  With no truths the accuracy is vacuously 1."""
    if not 0.0 < iou_threshold < 1.0:
        raise ParameterError("iou_threshold must lie in (0, 1)")
    counts: dict = {}
    for t in truths:
        hit = any(d.label == t.label and iou(d.box, t.box) >= iou_threshold for d in dets)
        d, n = counts.get(t.label, (0, 0))
        counts[t.label] = (d + hit, n + 1)
    per = {k: LabelStats(*v) for k, v in counts.items()}
    return DetectionStats(per, sum(v.detected for v in per.values()), sum(v.total for v in per.values()))


def top1(dets: list[Detection]) -> list[Detection]:
    """The best detection as a one-element list (detectors return best first)."""
    return list(dets[:1])


__all__ = ["Detection", "DetectorConfig", "DetectionStats", "LabelStats", "LabeledBox",
           "POINT_LABELS", "REGION_LABEL", "circularity", "corner_mask", "detect_target_points",
           "detect_trimming_region", "evaluate_detections", "top1"]
