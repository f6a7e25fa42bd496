"""Self-check of the detection maths: exact values, gradient checks against
central differences, NMS against exhaustive search and box-coding
round-trips.

Faults can be injected to confirm the harness notices them.
"""
from __future__ import annotations

import contextlib
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import detmath as dm

FD_STEP = 1e-5
FD_RTOL = 1e-5
ROUNDTRIP_TOL = 1e-9


@dataclass
class PropertyResult:
    name: str
    trials: int
    failures: int
    detail: str = ""

    @property
    def passed(self):
        return self.failures == 0


# --- faults ---------------------------------------------------------------

def _bad_smooth_l1(x):
    ax = abs(x)
    return 0.5 * x * x if ax < 1.0 else ax - 0.25


def _bad_nms(boxes, scores, iou_threshold):
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i], -i))
    kept = []
    for i in order:
        if all(dm.iou(boxes[i], boxes[k]) <= iou_threshold for k in kept):
            kept.append(i)
    return kept


def _bad_decode(anchor, delta):
    return dm.Box(anchor.cx + delta.tx * anchor.w, anchor.cy + delta.ty * anchor.h,
                  anchor.w * (1.0 + delta.tw), anchor.h * math.exp(delta.th))


def _bad_cls_grad(p, c):
    return tuple(-1.0 / p[c] ** 2 if i == c else 0.0 for i in range(len(p)))


FAULTS = {
    "smoothl1-branch": ("smooth_l1", _bad_smooth_l1),
    "nms-tiebreak": ("nms", _bad_nms),
    "decode-scale": ("decode_box", _bad_decode),
    "cls-grad": ("cls_loss_grad", _bad_cls_grad),
}


@contextlib.contextmanager
def injected(fault):
    """Temporarily replace one detmath function with a known-wrong version."""
    if fault is None:
        yield
        return
    if fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {', '.join(sorted(FAULTS))}")
    name, bad = FAULTS[fault]
    good = getattr(dm, name)
    setattr(dm, name, bad)
    try:
        yield
    finally:
        setattr(dm, name, good)


# --- oracles --------------------------------------------------------------

def central_diff(f, x, h=FD_STEP):
    """Central difference with a step scaled to ``|x|`` (floored at 1e-3 of ``h``)."""
    h = h * max(abs(x), 1e-3)
    return (f(x + h) - f(x - h)) / (2.0 * h)


def _close(a, b, rtol=FD_RTOL):
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def nms_oracle(boxes, scores, thr):
    """Exhaustive search for the one subset that greedy suppression must keep.

    Walking boxes in priority order, a box belongs to the kept set iff no
    earlier member overlaps it by more than ``thr``.  Exactly one subset is a
    fixed point of that rule.
    """
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i], i))
    pos = {i: r for r, i in enumerate(order)}
    overlap = {(i, j): dm.iou(boxes[i], boxes[j]) > thr for i in order for j in order}
    found = []
    for mask in itertools.product((False, True), repeat=len(order)):
        kept = {order[r] for r, m in enumerate(mask) if m}
        ok = all((i in kept) == (not any(overlap[i, j] for j in kept if pos[j] < pos[i]))
                 for i in order)
        if ok:
            found.append(sorted(kept, key=pos.get))
    if len(found) != 1:
        raise AssertionError(f"NMS fixed point not unique ({len(found)} found)")
    return found[0]


# --- properties -----------------------------------------------------------

def _random_delta(rng, scale=2.0):
    return dm.BoxDelta(*(float(v) for v in rng.uniform(-scale, scale, 4)))


def _away_from_kink(v, margin=1e-3):
    return abs(abs(v) - 1.0) > margin


def check_exact(rng, trials):
    fails = []
    if dm.smooth_l1(2.0) != 1.5:
        fails.append(f"smooth_l1(2) = {dm.smooth_l1(2.0)}")
    if dm.smooth_l1(0.5) != 0.125:
        fails.append(f"smooth_l1(0.5) = {dm.smooth_l1(0.5)}")
    if dm.smooth_l1(-2.0) != 1.5:
        fails.append(f"smooth_l1(-2) = {dm.smooth_l1(-2.0)}")
    return PropertyResult("smooth_l1 exact values", 3, len(fails), "; ".join(fails))


def check_c1(rng, trials):
    fails = 0
    eps = 1e-9
    for s in (1.0, -1.0):
        if abs(dm.smooth_l1(s - eps) - dm.smooth_l1(s + eps)) > 1e-8:
            fails += 1
        if abs(dm.smooth_l1_grad(s - eps) - dm.smooth_l1_grad(s + eps)) > 1e-8:
            fails += 1
    return PropertyResult("smooth_l1 C1 continuity at |x|=1", 4, fails)


def check_grad_smooth_l1(rng, trials):
    fails, n = 0, 0
    while n < trials:
        x = float(rng.uniform(-3, 3))
        if not _away_from_kink(x):
            continue
        n += 1
        fails += not _close(dm.smooth_l1_grad(x), central_diff(dm.smooth_l1, x))
    return PropertyResult("smooth_l1 gradient vs central difference", trials, fails)


def _perturb_grad(f, t, i, h=FD_STEP):
    vals = list(t.as_tuple())

    def g(z):
        vals2 = list(vals)
        vals2[i] = z
        return f(dm.BoxDelta(*vals2))
    return central_diff(g, vals[i], h)


def _deltas_off_kink(rng):
    while True:
        t, v = _random_delta(rng), _random_delta(rng)
        if all(_away_from_kink(a - b) for a, b in zip(t.as_tuple(), v.as_tuple())):
            return t, v


def check_grad_box_reg(rng, trials):
    fails = 0
    for _ in range(trials):
        t, v = _deltas_off_kink(rng)
        g = dm.box_reg_loss_grad(t, v)
        for i in range(4):
            fails += not _close(g[i], _perturb_grad(lambda d: dm.box_reg_loss(d, v), t, i))
    return PropertyResult("box regression loss gradient vs central difference", trials, fails)


def _random_probs(rng, k):
    return dm.ClassProbs.from_logits([float(z) for z in rng.normal(0, 1.5, k)])


class _RawProbs(tuple):
    """Probability vector without the sum-to-one check, so single entries can be nudged."""


def _prob_fd(f, p, i, h=FD_STEP):
    """Partial derivative of ``f(probs)`` along entry ``i``, other entries held fixed."""
    def g(z):
        q = list(p.probs)
        q[i] = z
        return f(_RawProbs(q))
    return central_diff(g, p[i], h)


def check_grad_cls(rng, trials):
    fails = 0
    for _ in range(trials):
        k = int(rng.integers(2, 6))
        p = _random_probs(rng, k)
        c = int(rng.integers(k))
        g = dm.cls_loss_grad(p, c)
        for i in range(k):
            fails += not _close(g[i], _prob_fd(lambda q: dm.cls_loss(q, c), p, i))
    return PropertyResult("classification loss gradient vs central difference", trials, fails)


def check_grad_multitask(rng, trials):
    fails = 0
    for _ in range(trials):
        k = int(rng.integers(2, 6))
        p = _random_probs(rng, k)
        u = int(rng.integers(k))
        t, v = _deltas_off_kink(rng)
        lam = float(rng.uniform(0.5, 10))
        dp, dt = dm.multitask_loss_grad(p, u, t, v, lam)
        for i in range(4):
            fd = _perturb_grad(lambda d: dm.multitask_loss(p, u, d, v, lam), t, i)
            fails += not _close(dt[i], fd)
        for i in range(k):
            fd = _prob_fd(lambda q: dm.multitask_loss(q, u, t, v, lam), p, i)
            fails += not _close(dp[i], fd)
    return PropertyResult("multitask loss gradient vs central difference", trials, fails)


def _random_rpn(rng):
    n = int(rng.integers(2, 7))
    anchors = [dm.Box(float(rng.uniform(0, 100)), float(rng.uniform(0, 100)),
                      float(rng.uniform(4, 40)), float(rng.uniform(4, 40))) for _ in range(n)]
    labels = [int(v) for v in rng.choice([1, 0, dm.IGNORE], size=n)]
    if all(lab == dm.IGNORE for lab in labels):
        labels[0] = 1
    p = [float(v) for v in rng.uniform(0.05, 0.95, n)]
    t, ts = [], []
    for _ in range(n):
        a, b = _deltas_off_kink(rng)
        t.append(a)
        ts.append(b)
    return dm.RpnBatch(anchors, p, labels, t, ts, lam=float(rng.uniform(0.5, 10)))


def check_grad_rpn(rng, trials):
    fails = 0
    for _ in range(trials):
        b = _random_rpn(rng)
        dp, dt = dm.rpn_loss_grad(b)
        for j in range(len(b.anchors)):
            def f_p(z, j=j):
                p2 = list(b.p)
                p2[j] = z
                return dm.rpn_loss(dm.RpnBatch(b.anchors, p2, b.p_star, b.t, b.t_star,
                                               b.lam, b.n_cls, b.n_reg))
            fails += not _close(dp[j], central_diff(f_p, b.p[j]))
            for i in range(4):
                def f_t(d, j=j):
                    t2 = list(b.t)
                    t2[j] = d
                    return dm.rpn_loss(dm.RpnBatch(b.anchors, b.p, b.p_star, t2, b.t_star,
                                                   b.lam, b.n_cls, b.n_reg))
                fails += not _close(dt[j][i], _perturb_grad(f_t, b.t[j], i))
    return PropertyResult("RPN loss gradient vs central difference", trials, fails)


def _random_boxes(rng, n):
    out = []
    for _ in range(n):
        # integer coordinates on a small grid give frequent overlaps and exact ties
        x0, y0 = (int(v) for v in rng.integers(0, 12, 2))
        w, h = (int(v) for v in rng.integers(2, 8, 2))
        out.append(dm.Box.from_xywh(x0, y0, w, h))
    return out


def check_nms(rng, trials):
    fails, detail = 0, ""
    for _ in range(trials):
        n = int(rng.integers(0, 9))
        boxes = _random_boxes(rng, n)
        scores = [float(v) for v in rng.integers(0, 4, n)]  # coarse scores force ties
        thr = float(rng.choice([0.1, 0.3, 0.5, 0.7]))
        got = dm.nms(boxes, scores, thr)
        want = nms_oracle(boxes, scores, thr)
        if got != want:
            fails += 1
            detail = detail or f"n={n} thr={thr}: got {got}, want {want}"
    return PropertyResult("NMS equals exhaustive oracle", trials, fails, detail)


def check_roundtrip(rng, trials):
    fails, worst = 0, 0.0
    for _ in range(trials):
        a = dm.Box(*(float(v) for v in rng.uniform(-200, 200, 2)), *(float(v) for v in rng.uniform(1, 300, 2)))
        b = dm.Box(*(float(v) for v in rng.uniform(-200, 200, 2)), *(float(v) for v in rng.uniform(1, 300, 2)))
        back = dm.decode_box(a, dm.encode_box(a, b))
        err = max(abs(x - y) for x, y in zip((back.cx, back.cy, back.w, back.h), (b.cx, b.cy, b.w, b.h)))
        worst = max(worst, err)
        fails += err > ROUNDTRIP_TOL
    return PropertyResult("encode/decode round trip", trials, fails, f"worst error {worst:.2e}")


def run_checks(trials: int = 100, seed: int = 0, fault: str | None = None) -> list[PropertyResult]:
    """Run every property.  ``trials`` sets the gradient-check point count;
    NMS uses ``5 * trials`` instances and round trips ``10 * trials`` pairs."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    plan = [
        (check_exact, 1), (check_c1, 1),
        (check_grad_smooth_l1, trials), (check_grad_box_reg, trials), (check_grad_cls, trials),
        (check_grad_multitask, trials), (check_grad_rpn, trials),
        (check_nms, 5 * trials), (check_roundtrip, 10 * trials),
    ]
    results = []
    with injected(fault):
        for fn, n in plan:
            try:
                results.append(fn(rng, n))
            except Exception as exc:  # a crash is a failed property, not a harness error
                name = fn.__name__.removeprefix("check_")
                results.append(PropertyResult(name, n, n, f"raised {type(exc).__name__}: {exc}"))
    return results
