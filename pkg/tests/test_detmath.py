import math
import random

import pytest
from hypothesis import given, strategies as st

from triminspect import detmath as dm
from triminspect.detmath import Box, BoxDelta, ClassProbs, RpnBatch
from triminspect.errors import DomainError, ParameterError

H = 1e-5
REL = 1e-5


def central_diff(f, x, h=H):
    return (f(x + h) - f(x - h)) / (2 * h)


def rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def brute_force_nms(boxes, scores, thr):
    """Unique subset S that is self-consistent under greedy priority."""
    n = len(boxes)
    prio = sorted(range(n), key=lambda i: (-scores[i], i))
    rank = {i: r for r, i in enumerate(prio)}
    hits = []
    for bits in range(1 << n):
        s = {i for i in range(n) if bits >> i & 1}
        ok = True
        for i in range(n):
            above = [k for k in s if rank[k] < rank[i]]
            suppressed = any(dm.iou(boxes[i], boxes[k]) > thr for k in above)
            if (i in s) == suppressed:
                ok = False
                break
        if ok:
            hits.append(sorted(s, key=lambda i: rank[i]))
    assert len(hits) == 1
    return hits[0]


def cell_iou(a, b):
    """IoU of integer xywh boxes by counting unit cells."""
    ca = {(x, y) for x in range(a[0], a[0] + a[2]) for y in range(a[1], a[1] + a[3])}
    cb = {(x, y) for x in range(b[0], b[0] + b[2]) for y in range(b[1], b[1] + b[3])}
    return len(ca & cb) / len(ca | cb)


# --- iou -----------------------------------------------------------------

def test_iou_identity_and_disjoint():
    a = Box(5, 5, 4, 4)
    assert dm.iou(a, a) == 1.0
    assert dm.iou(a, Box(50, 50, 4, 4)) == 0.0


def test_iou_corner_boxes_one_seventh():
    a = Box.from_xywh(0, 0, 2, 2)
    b = Box.from_xywh(1, 1, 2, 2)
    assert dm.iou(a, b) == pytest.approx(1 / 7, abs=1e-15)


@given(
    st.tuples(st.integers(0, 10), st.integers(0, 10), st.integers(1, 8), st.integers(1, 8)),
    st.tuples(st.integers(0, 10), st.integers(0, 10), st.integers(1, 8), st.integers(1, 8)),
)
def test_iou_matches_cell_count(a, b):
    got = dm.iou(Box.from_xywh(*a), Box.from_xywh(*b))
    assert got == pytest.approx(cell_iou(a, b), abs=1e-12)
    assert got == dm.iou(Box.from_xywh(*b), Box.from_xywh(*a))
    assert 0.0 <= got <= 1.0


def test_box_rejects_nonpositive_extent():
    with pytest.raises(ParameterError):
        Box(0, 0, 0, 1)


# --- nms -----------------------------------------------------------------

def test_nms_single_and_identical():
    b = Box(10, 10, 5, 5)
    assert dm.nms([b], [0.3], 0.5) == [0]
    assert dm.nms([b, b], [0.9, 0.8], 0.5) == [0]


def test_nms_ties_prefer_lower_index():
    b = Box(10, 10, 5, 5)
    assert dm.nms([b, b], [0.5, 0.5], 0.5) == [0]


def test_nms_length_mismatch():
    with pytest.raises(ParameterError):
        dm.nms([Box(1, 1, 1, 1)], [0.1, 0.2], 0.5)


def _random_instance(rng, n):
    boxes = [Box(rng.uniform(0, 30), rng.uniform(0, 30), rng.uniform(2, 15), rng.uniform(2, 15))
             for _ in range(n)]
    # coarse scores so ties occur
    scores = [rng.choice([0.1, 0.3, 0.5, 0.7, 0.9]) for _ in range(n)]
    return boxes, scores


@pytest.mark.parametrize("seed", range(100))
def test_nms_matches_brute_force(seed):
    rng = random.Random(seed)
    boxes, scores = _random_instance(rng, rng.randint(1, 8))
    thr = rng.choice([0.1, 0.3, 0.5, 0.7])
    assert dm.nms(boxes, scores, thr) == brute_force_nms(boxes, scores, thr)


# --- smooth L1 and box regression ---------------------------------------

def test_smooth_l1_values():
    assert dm.smooth_l1(0.0) == 0.0
    assert dm.smooth_l1(2.0) == 1.5
    assert dm.smooth_l1(0.5) == 0.125
    assert dm.smooth_l1(-2.0) == 1.5


def test_smooth_l1_c1_at_one():
    for s in (1.0, -1.0):
        left = s * (1 - 1e-12)
        assert dm.smooth_l1(left) == pytest.approx(0.5, abs=1e-11)
        assert dm.smooth_l1(s) == 0.5
        assert dm.smooth_l1_grad(left) == pytest.approx(s, abs=1e-11)
        assert dm.smooth_l1_grad(s) == s


def test_box_reg_loss_examples():
    t = BoxDelta(0.1, -0.2, 0.3, 0.4)
    assert dm.box_reg_loss(t, t) == 0.0
    assert dm.box_reg_loss(BoxDelta(0.5, 0, 0, 0), BoxDelta(0, 0, 0, 0)) == 0.125
    assert dm.box_reg_loss(BoxDelta(2, 2, 2, 2), BoxDelta(0, 0, 0, 0)) == 4 * dm.smooth_l1(2.0) == 6.0


# --- classification and multitask ---------------------------------------

def test_cls_loss_examples():
    assert dm.cls_loss(ClassProbs((0.0, 1.0)), 1) == 0.0
    assert dm.cls_loss(ClassProbs((0.5, 0.5)), 1) == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(DomainError):
        dm.cls_loss(ClassProbs((1.0, 0.0)), 1)


def test_class_probs_must_sum_to_one():
    with pytest.raises(ParameterError):
        ClassProbs((0.5, 0.6))
    p = ClassProbs.from_logits([1.0, 2.0, 3.0])
    assert math.fsum(p.probs) == pytest.approx(1.0, abs=1e-12)


def test_multitask_examples():
    z = BoxDelta(0, 0, 0, 0)
    assert dm.multitask_loss(ClassProbs((1.0, 0.0)), 0, BoxDelta(5, 5, 5, 5), z) == 0.0
    assert dm.multitask_loss(ClassProbs((0.0, 1.0)), 1, z, z) == 0.0
    got = dm.multitask_loss(ClassProbs((0.5, 0.5)), 1, BoxDelta(2, 2, 2, 2), z, lam=1.0)
    assert got == pytest.approx(math.log(2) + 6.0, abs=1e-12)
    assert got == pytest.approx(6.6931, abs=5e-5)


# --- rpn loss ------------------------------------------------------------

def _delta(*v):
    return BoxDelta(*v)


def test_rpn_perfect_is_zero():
    z = _delta(0, 0, 0, 0)
    b = RpnBatch([Box(8, 8, 16, 16)], [1.0], [1], [z], [z], lam=3.0, n_cls=1, n_reg=1)
    assert dm.rpn_loss(b) == 0.0


def test_rpn_single_positive():
    z = _delta(0, 0, 0, 0)
    b = RpnBatch([Box(8, 8, 16, 16)], [0.9], [1], [z], [z], n_cls=1, n_reg=1)
    assert dm.rpn_loss(b) == pytest.approx(-math.log(0.9), abs=1e-15)
    assert dm.rpn_loss(b) == pytest.approx(0.1054, abs=5e-5)


def test_rpn_two_anchors():
    z = _delta(0, 0, 0, 0)
    a = Box(8, 8, 16, 16)
    b = RpnBatch([a, a], [1.0, 0.1], [1, 0], [z, z], [z, z], n_cls=2, n_reg=2)
    assert dm.rpn_loss(b) == pytest.approx((0 + -math.log(0.9)) / 2, abs=1e-15)


def test_rpn_ignored_anchor_excluded():
    z = _delta(0, 0, 0, 0)
    a = Box(8, 8, 16, 16)
    b = RpnBatch([a, a], [0.9, 0.0], [1, dm.IGNORE], [z, _delta(9, 9, 9, 9)], [z, z])
    assert b.n_cls == 1
    assert dm.rpn_loss(b) == pytest.approx(-math.log(0.9), abs=1e-15)


def test_rpn_domain_errors():
    z = _delta(0, 0, 0, 0)
    a = Box(8, 8, 16, 16)
    with pytest.raises(DomainError):
        dm.rpn_loss(RpnBatch([a], [0.0], [1], [z], [z]))
    with pytest.raises(DomainError):
        dm.rpn_loss(RpnBatch([a], [1.0], [0], [z], [z]))


def test_rpn_length_mismatch():
    z = _delta(0, 0, 0, 0)
    with pytest.raises(ParameterError):
        RpnBatch([Box(1, 1, 1, 1)], [0.5, 0.5], [1], [z], [z])


# --- gradients vs central differences ------------------------------------

def _away_from_kink(rng, lo=-3.0, hi=3.0):
    while True:
        x = rng.uniform(lo, hi)
        if abs(abs(x) - 1.0) > 1e-3 and abs(x) > 1e-3:
            return x


def test_smooth_l1_grad_fd():
    rng = random.Random(1)
    for _ in range(100):
        x = _away_from_kink(rng)
        assert rel_err(dm.smooth_l1_grad(x), central_diff(dm.smooth_l1, x)) < REL


def _perturb(delta, k, eps):
    v = list(delta.as_tuple())
    v[k] += eps
    return BoxDelta(*v)


def _random_delta_pair(rng):
    v = BoxDelta(*(rng.uniform(-2, 2) for _ in range(4)))
    t = BoxDelta(*(vi + _away_from_kink(rng) for vi in v.as_tuple()))
    return t, v


def test_box_reg_loss_grad_fd():
    rng = random.Random(2)
    for _ in range(100):
        t, v = _random_delta_pair(rng)
        g = dm.box_reg_loss_grad(t, v)
        for k in range(4):
            fd = central_diff(lambda e: dm.box_reg_loss(_perturb(t, k, e), v), 0.0)
            assert rel_err(g[k], fd) < REL


def _cls_fd(probs, c, k):
    # loss as a function of the raw k-th probability entry (no renormalising)
    def f(e):
        q = list(probs)
        q[k] += e
        return -math.log(q[c])
    return central_diff(f, 0.0)


def test_cls_loss_grad_fd():
    rng = random.Random(3)
    for _ in range(100):
        p = ClassProbs.from_logits([rng.uniform(-2, 2) for _ in range(4)])
        c = rng.randrange(4)
        g = dm.cls_loss_grad(p, c)
        for k in range(4):
            fd = _cls_fd(p.probs, c, k)
            if g[k] == 0.0:
                assert abs(fd) < 1e-12
            else:
                assert rel_err(g[k], fd) < REL


def test_multitask_loss_grad_fd():
    rng = random.Random(4)
    for _ in range(100):
        p = ClassProbs.from_logits([rng.uniform(-2, 2) for _ in range(3)])
        u = rng.randrange(3)
        t, v = _random_delta_pair(rng)
        lam = rng.uniform(0.5, 10)
        dp, dt = dm.multitask_loss_grad(p, u, t, v, lam)

        def loss(probs_u, tt):
            cls = -math.log(probs_u)
            return cls + (lam * dm.box_reg_loss(tt, v) if u >= 1 else 0.0)

        fd_p = central_diff(lambda e: loss(p[u] + e, t), 0.0)
        assert rel_err(dp[u], fd_p) < REL
        for k in range(4):
            fd = central_diff(lambda e: loss(p[u], _perturb(t, k, e)), 0.0)
            if u == 0:
                assert dt[k] == 0.0 and abs(fd) < 1e-12
            else:
                assert rel_err(dt[k], fd) < REL


def test_rpn_loss_grad_fd():
    rng = random.Random(5)
    for _ in range(100):
        n = rng.randint(1, 5)
        anchors = [Box(8, 8, 16, 16)] * n
        labels = [rng.choice([0, 1, dm.IGNORE]) for _ in range(n)]
        if all(lbl == dm.IGNORE for lbl in labels):
            labels[0] = 1
        p = [rng.uniform(0.05, 0.95) for _ in range(n)]
        pairs = [_random_delta_pair(rng) for _ in range(n)]
        t = [a for a, _ in pairs]
        ts = [b for _, b in pairs]
        lam = rng.uniform(1, 10)
        batch = RpnBatch(anchors, p, labels, t, ts, lam=lam, n_reg=float(n + 3))
        dp, dt = dm.rpn_loss_grad(batch)

        def with_p(i, e):
            q = list(p)
            q[i] += e
            return dm.rpn_loss(RpnBatch(anchors, q, labels, t, ts, lam=lam, n_reg=float(n + 3)))

        def with_t(i, k, e):
            tt = list(t)
            tt[i] = _perturb(t[i], k, e)
            return dm.rpn_loss(RpnBatch(anchors, p, labels, tt, ts, lam=lam, n_reg=float(n + 3)))

        for i in range(n):
            fd = central_diff(lambda e: with_p(i, e), 0.0)
            if labels[i] == dm.IGNORE:
                assert dp[i] == 0.0 and abs(fd) < 1e-12
            else:
                assert rel_err(dp[i], fd) < REL
            for k in range(4):
                fd = central_diff(lambda e: with_t(i, k, e), 0.0)
                if labels[i] == 1:
                    assert rel_err(dt[i][k], fd) < REL
                else:
                    assert dt[i][k] == 0.0 and abs(fd) < 1e-12


def test_losses_non_negative():
    rng = random.Random(6)
    for _ in range(200):
        p = ClassProbs.from_logits([rng.uniform(-3, 3) for _ in range(3)])
        t, v = _random_delta_pair(rng)
        assert dm.multitask_loss(p, rng.randrange(3), t, v) >= 0.0


# --- box coding and anchors ----------------------------------------------

def test_encode_identity():
    a = Box(10, 20, 8, 4)
    assert dm.encode_box(a, a).as_tuple() == (0.0, 0.0, 0.0, 0.0)


def test_encode_decode_roundtrip():
    rng = random.Random(7)
    for _ in range(1000):
        a = Box(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(1, 50), rng.uniform(1, 50))
        b = Box(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(1, 50), rng.uniform(1, 50))
        r = dm.decode_box(a, dm.encode_box(a, b))
        for x, y in zip((r.cx, r.cy, r.w, r.h), (b.cx, b.cy, b.w, b.h)):
            assert abs(x - y) <= 1e-9


def test_encode_anchor_width_doubled():
    target = Box(30, 10, 6, 6)
    a1 = Box(10, 10, 4, 4)
    a2 = Box(10, 10, 8, 4)
    d1, d2 = dm.encode_box(a1, target), dm.encode_box(a2, target)
    assert d2.tx == pytest.approx(d1.tx / 2, abs=1e-15)
    assert d2.tw == pytest.approx(d1.tw - math.log(2), abs=1e-15)


def test_anchor_grid_single_cell():
    a = dm.anchor_grid(16, 16, 16, [16], [1.0])
    assert a == [Box(8.0, 8.0, 16.0, 16.0)]


def test_anchor_grid_count():
    assert len(dm.anchor_grid(32, 32, 16, [8, 16, 32], [0.5, 1, 2])) == 2 * 2 * 3 * 3
    assert len(dm.anchor_grid(33, 17, 16, [8], [1])) == 3 * 2


def test_anchor_grid_area_preserved():
    for b in dm.anchor_grid(16, 16, 16, [10.0], [0.5, 2.0]):
        assert b.w * b.h == pytest.approx(100.0, abs=1e-9)
    tall = dm.anchor_grid(16, 16, 16, [10.0], [2.0])[0]
    assert tall.h / tall.w == pytest.approx(2.0, abs=1e-12)
