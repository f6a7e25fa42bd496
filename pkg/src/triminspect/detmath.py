"""Anchor-based detection maths: boxes, IoU, NMS, box coding and the
two-stage detector losses (RPN loss, multitask head loss, smooth L1).

Everything here is scalar Python on small inputs.  Each loss has an
analytic gradient next to it so the kernel can be checked against finite
differences (see ``triminspect detmath-check``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DomainError, ParameterError

IGNORE = -1  # anchor label excluded from both RPN sums

DEFAULT_LAMBDA = 10.0


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by centre and extent, in pixels."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ParameterError(f"box extent must be positive, got {self.w}x{self.h}")

    @classmethod
    def from_xywh(cls, x, y, w, h):
        return cls(x + w / 2.0, y + h / 2.0, w, h)

    @classmethod
    def from_corners(cls, x0, y0, x1, y1):
        return cls((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0)

    @property
    def x0(self):
        return self.cx - self.w / 2.0

    @property
    def y0(self):
        return self.cy - self.h / 2.0

    @property
    def x1(self):
        return self.cx + self.w / 2.0

    @property
    def y1(self):
        return self.cy + self.h / 2.0

    @property
    def area(self):
        return self.w * self.h

    def to_xywh(self):
        return (self.x0, self.y0, self.w, self.h)


@dataclass(frozen=True)
class BoxDelta:
    tx: float
    ty: float
    tw: float
    th: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_tuple()):
            raise ParameterError("box delta components must be finite")

    def as_tuple(self):
        return (self.tx, self.ty, self.tw, self.th)

    def __sub__(self, other):
        return BoxDelta(*(a - b for a, b in zip(self.as_tuple(), other.as_tuple())))


@dataclass(frozen=True)
class ClassProbs:
    """Discrete distribution over k categories; index 0 is background."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if not probs:
            raise ParameterError("need at least one category")
        if any(p < 0.0 or p > 1.0 for p in probs):
            raise ParameterError("probabilities must lie in [0, 1]")
        if abs(math.fsum(probs) - 1.0) > 1e-9:
            raise ParameterError(f"probabilities sum to {math.fsum(probs)!r}, not 1")

    @classmethod
    def from_logits(cls, logits):
        m = max(logits)
        e = [math.exp(z - m) for z in logits]
        s = math.fsum(e)
        return cls(tuple(v / s for v in e))

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, i):
        return self.probs[i]


@dataclass
class RpnBatch:
    """One RPN mini-batch.

    ``p_star`` holds 1 (object), 0 (background) or :data:`IGNORE`.
    ``n_cls`` defaults to the number of non-ignored anchors, ``n_reg`` to
    the number of anchors (one grid position each) unless given.
    """

    anchors: list
    p: list
    p_star: list
    t: list
    t_star: list
    lam: float = DEFAULT_LAMBDA
    n_cls: float | None = None
    n_reg: float | None = None
    _valid: list = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.anchors)
        if not (len(self.p) == len(self.p_star) == len(self.t) == len(self.t_star) == n):
            raise ParameterError("per-anchor lists must have equal length")
        for label in self.p_star:
            if label not in (0, 1, IGNORE):
                raise ParameterError(f"anchor label must be 0, 1 or IGNORE, got {label!r}")
        self._valid = [i for i, s in enumerate(self.p_star) if s != IGNORE]
        if self.n_cls is None:
            self.n_cls = float(len(self._valid))
        if self.n_reg is None:
            self.n_reg = float(n)
        if not (self.n_cls > 0 and self.n_reg > 0):
            raise ParameterError("normalisers n_cls and n_reg must be positive")


def iou(a: Box, b: Box) -> float:
    iw = min(a.x1, b.x1) - max(a.x0, b.x0)
    ih = min(a.y1, b.y1) - max(a.y0, b.y0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def nms(boxes: Sequence[Box], scores: Sequence[float], iou_threshold: float) -> list[int]:
    """Greedy non-maximum suppression.

    Returns kept indices by descending score; equal scores go to the lower
    index.  A box is dropped when its IoU with a kept box exceeds the
    threshold.
    """
    if len(boxes) != len(scores):
        raise ParameterError("boxes and scores differ in length")
    if not 0.0 < iou_threshold < 1.0:
        raise ParameterError("iou_threshold must lie in (0, 1)")
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i], i))
    kept: list[int] = []
    for i in order:
        if all(iou(boxes[i], boxes[k]) <= iou_threshold for k in kept):
            kept.append(i)
    return kept


def smooth_l1(x: float) -> float:
    ax = abs(x)
    if ax < 1.0:
        return 0.5 * x * x
    return ax - 0.5


def smooth_l1_grad(x: float) -> float:
    if abs(x) < 1.0:
        return x
    return 1.0 if x > 0 else -1.0


def box_reg_loss(t: BoxDelta, v: BoxDelta) -> float:
    return sum(smooth_l1(a - b) for a, b in zip(t.as_tuple(), v.as_tuple()))


def box_reg_loss_grad(t: BoxDelta, v: BoxDelta) -> tuple:
    """Gradient with respect to ``t``."""
    return tuple(smooth_l1_grad(a - b) for a, b in zip(t.as_tuple(), v.as_tuple()))


def _check_class(p, c):
    if not 0 <= c < len(p):
        raise ParameterError(f"class index {c} outside 0..{len(p) - 1}")
    if p[c] <= 0.0:
        raise DomainError(f"log loss undefined for p[{c}] = {p[c]}")


def cls_loss(p: ClassProbs, c: int) -> float:
    """Log loss of the true class (natural log)."""
    _check_class(p, c)
    return -math.log(p[c])


def cls_loss_grad(p: ClassProbs, c: int) -> tuple:
    """Gradient with respect to the probability vector."""
    _check_class(p, c)
    return tuple(-1.0 / p[c] if i == c else 0.0 for i in range(len(p)))


def multitask_loss(p: ClassProbs, u: int, t_u: BoxDelta, v: BoxDelta,
                   lam: float = DEFAULT_LAMBDA) -> float:
    if u < 0:
        raise ParameterError("class index must be >= 0 (0 is background)")
    loss = cls_loss(p, u)
    if u >= 1:
        loss += lam * box_reg_loss(t_u, v)
    return loss


def multitask_loss_grad(p: ClassProbs, u: int, t_u: BoxDelta, v: BoxDelta,
                        lam: float = DEFAULT_LAMBDA):
    """Returns ``(d/dp, d/dt_u)``."""
    dp = cls_loss_grad(p, u)
    if u >= 1:
        dt = tuple(lam * g for g in box_reg_loss_grad(t_u, v))
    else:
        dt = (0.0, 0.0, 0.0, 0.0)
    return dp, dt


def _binary_log_loss(p, label):
    if label == 1:
        if p <= 0.0:
            raise DomainError("objectness p = 0 against a positive label")
        return -math.log(p)
    if p >= 1.0:
        raise DomainError("objectness p = 1 against a negative label")
    return -math.log1p(-p)


def rpn_loss(batch: RpnBatch) -> float:
    cls_sum = 0.0
    reg_sum = 0.0
    for i in batch._valid:
        label = batch.p_star[i]
        cls_sum += _binary_log_loss(batch.p[i], label)
        if label == 1:
            reg_sum += box_reg_loss(batch.t[i], batch.t_star[i])
    return cls_sum / batch.n_cls + batch.lam * reg_sum / batch.n_reg


def rpn_loss_grad(batch: RpnBatch):
    """Returns ``(d/dp_i list, d/dt_i list)``; ignored anchors get zeros."""
    dp = [0.0] * len(batch.anchors)
    dt = [(0.0, 0.0, 0.0, 0.0)] * len(batch.anchors)
    for i in batch._valid:
        p = batch.p[i]
        if batch.p_star[i] == 1:
            _binary_log_loss(p, 1)
            dp[i] = -1.0 / p / batch.n_cls
            scale = batch.lam / batch.n_reg
            dt[i] = tuple(scale * g for g in box_reg_loss_grad(batch.t[i], batch.t_star[i]))
        else:
            _binary_log_loss(p, 0)
            dp[i] = 1.0 / (1.0 - p) / batch.n_cls
    return dp, dt


def encode_box(anchor: Box, target: Box) -> BoxDelta:
    return BoxDelta(
        (target.cx - anchor.cx) / anchor.w,
        (target.cy - anchor.cy) / anchor.h,
        math.log(target.w / anchor.w),
        math.log(target.h / anchor.h),
    )


def decode_box(anchor: Box, delta: BoxDelta) -> Box:
    return Box(
        anchor.cx + delta.tx * anchor.w,
        anchor.cy + delta.ty * anchor.h,
        anchor.w * math.exp(delta.tw),
        anchor.h * math.exp(delta.th),
    )


def anchor_grid(width: int, height: int, stride: int,
                scales: Sequence[float], ratios: Sequence[float]) -> list[Box]:
    """Anchors centred on the stride lattice.

    ``ratio`` is height/width; every anchor of scale ``s`` has area ``s**2``.
    Order is row-major over cells, then scales, then ratios.
    """
    if stride < 1:
        raise ParameterError("stride must be >= 1")
    if not scales or not ratios:
        raise ParameterError("scales and ratios must be non-empty")
    nx = -(-width // stride)
    ny = -(-height // stride)
    out = []
    for gy in range(ny):
        cy = gy * stride + stride / 2.0
        for gx in range(nx):
            cx = gx * stride + stride / 2.0
            for s in scales:
                for r in ratios:
                    q = math.sqrt(r)
                    out.append(Box(cx, cy, s / q, s * q))
    return out


def grid_positions(width: int, height: int, stride: int) -> int:
    return (-(-width // stride)) * (-(-height // stride))
