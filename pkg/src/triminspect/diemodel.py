"""Synthetic trimming dies: generation, inspection-spot placement and
analytic cross-sections.

A die is a set of 3D trimming lines, each carrying the cross-section
parameters of the cutting junction along it.  Sections are built in a
front-view frame (x across the line, y up) so that the five target points
sit at known coordinates around the lower-die cutting edge ``(xb, y0)``::

    #2 (xb, y0 + ul)      blade meets the upper-die body
    #4 (xb, y0)           lower-die cutting edge
    #3 (xb, y0 - land)    foot of the cutting land
    #5 (xb + gl, y0 - land)  relief step meets the lower-die body
    #1 (xb, y0 - pd)      blade tip

so PD, UL and GL are exact vertical/horizontal point-pair distances.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import GeometryError, ParameterError, UnknownLineError

PROFILE_FIELDS = ("pd", "ul", "gl", "land", "body_w", "body_h", "distractors")

DEFAULT_RANGES = {
    "pd": (5.0, 12.0),
    "ul": (20.0, 40.0),
    "gl": (8.0, 16.0),
    "land": (3.0, 8.0),
    "body_w": (250.0, 450.0),
    "body_h": (120.0, 220.0),
    "distractors": (2, 3),
}

DEFAULT_EXTENTS = ((0.0, 0.0, 0.0), (3000.0, 2000.0, 1000.0))

ROLES = ("upper_die", "blade", "lower_die", "distractor")

# distractor assemblies: scale of the body relative to the target die
_DISTRACTOR_BODY_SCALE = 0.45
_DISTRACTOR_JITTER = 0.20
_DISTRACTOR_GAP = 150.0  # mm between neighbouring assemblies


@dataclass(frozen=True)
class ProfileParams:
    pd: float
    ul: float
    gl: float
    land: float
    body_w: float
    body_h: float
    distractors: int = 0

    def __post_init__(self):
        for name in ("pd", "ul", "gl", "land", "body_w", "body_h"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.land < self.ul:
            raise ParameterError(f"land ({self.land}) must be below ul ({self.ul})")
        if self.distractors < 0:
            raise ParameterError("distractors must be >= 0")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TrimmingLine:
    line_id: str
    polyline: tuple  # ((x, y, z), ...) in mm
    is_target: bool
    profile: ProfileParams

    def __post_init__(self):
        pts = tuple(tuple(float(c) for c in p) for p in self.polyline)
        object.__setattr__(self, "polyline", pts)
        if len(pts) < 2:
            raise GeometryError(f"line {self.line_id}: polyline needs >= 2 points")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise GeometryError(f"line {self.line_id}: repeated consecutive point {a}")

    def length(self):
        p = np.asarray(self.polyline)
        return float(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1)))


@dataclass(frozen=True)
class DieDesign:
    design_id: str
    seed: int
    extents: tuple  # ((xmin, ymin, zmin), (xmax, ymax, zmax))
    trimming_lines: tuple

    def __post_init__(self):
        object.__setattr__(self, "trimming_lines", tuple(self.trimming_lines))
        object.__setattr__(self, "extents", tuple(tuple(float(c) for c in e) for e in self.extents))
        if not any(t.is_target for t in self.trimming_lines):
            raise GeometryError("design has no target trimming line")
        lo, hi = self.extents
        for line in self.trimming_lines:
            for p in line.polyline:
                if not all(lo[k] <= p[k] <= hi[k] for k in range(3)):
                    raise GeometryError(f"line {line.line_id}: vertex {p} outside extents")

    @property
    def target_line(self):
        return next(t for t in self.trimming_lines if t.is_target)

    def line(self, line_id):
        for t in self.trimming_lines:
            if t.line_id == line_id:
                return t
        raise UnknownLineError(f"no trimming line {line_id!r} in design {self.design_id}")

    def to_dict(self):
        return {
            "design_id": self.design_id,
            "seed": self.seed,
            "extents": [list(e) for e in self.extents],
            "trimming_lines": [
                {
                    "line_id": t.line_id,
                    "is_target": t.is_target,
                    "polyline": [list(p) for p in t.polyline],
                    "profile": t.profile.to_dict(),
                }
                for t in self.trimming_lines
            ],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            lines = [
                TrimmingLine(
                    line_id=str(t["line_id"]),
                    polyline=tuple(tuple(p) for p in t["polyline"]),
                    is_target=bool(t["is_target"]),
                    profile=ProfileParams(**{k: t["profile"][k] for k in PROFILE_FIELDS}),
                )
                for t in d["trimming_lines"]
            ]
            return cls(str(d["design_id"]), int(d["seed"]), tuple(d["extents"]), tuple(lines))
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed die-model document: {exc!r}") from exc

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"


def save_design(design: DieDesign, path):
    Path(path).write_text(design.dumps(), encoding="utf-8")


def load_design(path) -> DieDesign:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: {exc}") from exc
    return DieDesign.from_dict(doc)


def _check_ranges(ranges):
    out = dict(DEFAULT_RANGES)
    out.update(ranges or {})
    for name in PROFILE_FIELDS:
        lo, hi = out[name]
        if lo > hi:
            raise ParameterError(f"range for {name}: min {lo} > max {hi}")
        if name != "distractors" and lo <= 0:
            raise ParameterError(f"range for {name} must be positive, got min {lo}")
        if name == "distractors" and lo < 0:
            raise ParameterError("distractor count range must be >= 0")
    if not out["land"][1] < out["ul"][0]:
        raise ParameterError("land range must lie below the ul range")
    return out


def _sample_profile(rng, ranges):
    vals = {}
    for name in PROFILE_FIELDS:
        lo, hi = ranges[name]
        if name == "distractors":
            vals[name] = int(rng.integers(int(lo), int(hi) + 1))
        else:
            vals[name] = float(rng.uniform(lo, hi))
    return ProfileParams(**vals)


def _bezier(ctrl, n):
    t = np.linspace(0.0, 1.0, n)[:, None]
    p0, p1, p2, p3 = ctrl
    return ((1 - t) ** 3) * p0 + 3 * ((1 - t) ** 2) * t * p1 + 3 * (1 - t) * t * t * p2 + t ** 3 * p3


def _sample_polyline(rng, extents, n_pts=48):
    lo = np.asarray(extents[0])
    hi = np.asarray(extents[1])
    span = hi - lo
    margin = 0.1 * span[:2]
    ctrl = [lo[:2] + margin + rng.uniform(0, 1, 2) * (span[:2] - 2 * margin) for _ in range(4)]
    # keep the curve from folding back on itself: order control points along
    # their principal direction
    c = np.asarray(ctrl)
    axis = c[-1] - c[0]
    if np.linalg.norm(axis) < 1e-6:
        axis = np.array([1.0, 0.0])
    ctrl = list(c[np.argsort(c @ axis)])
    xy = _bezier(ctrl, n_pts)
    z_mid = lo[2] + 0.5 * span[2]
    amp = 0.02 * span[2]
    phase = rng.uniform(0, 2 * math.pi)
    s = np.linspace(0, 1, n_pts)
    z = z_mid + amp * np.sin(2 * math.pi * s + phase)
    pts = np.column_stack([xy, z])
    keep = [0]
    for i in range(1, n_pts):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > 1e-6:
            keep.append(i)
    return tuple(tuple(float(c) for c in p) for p in pts[keep])


def generate_design(seed: int, n_lines: int = 3, param_ranges=None,
                    extents=DEFAULT_EXTENTS, design_id=None) -> DieDesign:
    """Random die with ``n_lines`` trimming lines, exactly one the target."""
    if n_lines < 1:
        raise ParameterError("n_lines must be >= 1")
    if seed < 0:
        raise ParameterError("seed must be unsigned")
    ranges = _check_ranges(param_ranges)
    rng = np.random.default_rng(seed)
    target = int(rng.integers(n_lines))
    lines = []
    for i in range(n_lines):
        lines.append(TrimmingLine(
            line_id=f"L{i}",
            polyline=_sample_polyline(rng, extents),
            is_target=(i == target),
            profile=_sample_profile(rng, ranges),
        ))
    return DieDesign(design_id or f"die-{seed}", int(seed), extents, tuple(lines))


@dataclass(frozen=True)
class InspectionSpot:
    line_id: str
    spot_index: int
    position: tuple
    tangent: tuple
    section_normal: tuple
    arc_length: float


def place_spots(design: DieDesign, line_id: str, n_spots: int) -> list[InspectionSpot]:
    """Spots at equal arc-length intervals, half an interval in from each end."""
    if n_spots < 1:
        raise ParameterError("n_spots must be >= 1")
    line = design.line(line_id)
    pts = np.asarray(line.polyline, dtype=np.float64)
    seg = np.diff(pts, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]
    if not total > 0:
        raise GeometryError(f"line {line_id} has zero length")
    step = total / n_spots
    spots = []
    for k in range(n_spots):
        s = (k + 0.5) * step
        i = int(np.searchsorted(cum, s, side="right")) - 1
        i = min(max(i, 0), len(seg) - 1)
        frac = (s - cum[i]) / seg_len[i]
        pos = pts[i] + frac * seg[i]
        t = seg[i] / seg_len[i]
        horiz = math.hypot(t[0], t[1])
        if horiz < 1e-9:
            raise GeometryError(f"line {line_id} is vertical at arc length {s}")
        n = (-t[1] / horiz, t[0] / horiz, 0.0)
        spots.append(InspectionSpot(
            line_id=line_id,
            spot_index=k,
            position=tuple(float(c) for c in pos),
            tangent=tuple(float(c) for c in t),
            section_normal=tuple(float(c) for c in n),
            arc_length=float(s),
        ))
    return spots


@dataclass(frozen=True)
class TaggedPolygon:
    role: str
    group: int  # 0 for the target assembly, k >= 1 for distractor k
    points: tuple  # ((x, y), ...) counter-clockwise, mm

    def signed_area(self):
        p = self.points
        return 0.5 * sum(p[i][0] * p[(i + 1) % len(p)][1] - p[(i + 1) % len(p)][0] * p[i][1]
                         for i in range(len(p)))


@dataclass(frozen=True)
class SectionProfile:
    polygons: tuple
    truth_points: dict  # {1..5: (x, y)} mm
    truth_lengths: dict  # {"pd", "ul", "gl"} mm
    target_center: tuple
    distractor_points: tuple = field(default=())  # one {1..5: (x, y)} per distractor

    def distractor_groups(self):
        return sorted({p.group for p in self.polygons if p.role == "distractor"})

    def to_dict(self):
        return {
            "polygons": [{"role": p.role, "group": p.group, "points": [list(q) for q in p.points]}
                         for p in self.polygons],
            "truth_points": {str(k): list(v) for k, v in sorted(self.truth_points.items())},
            "truth_lengths": dict(self.truth_lengths),
            "target_center": list(self.target_center),
            "distractor_points": [{str(k): list(v) for k, v in sorted(d.items())}
                                  for d in self.distractor_points],
        }

    def to_bytes(self):
        return json.dumps(self.to_dict(), sort_keys=True).encode()


def junction_points(xb, y0, pd, ul, gl, land):
    return {
        1: (xb, y0 - pd),
        2: (xb, y0 + ul),
        3: (xb, y0 - land),
        4: (xb, y0),
        5: (xb + gl, y0 - land),
    }


def points_center(pts):
    xs = [p[0] for p in pts.values()]
    ys = [p[1] for p in pts.values()]
    return ((min(xs) + max(xs)) / 2.0, (min(ys) + max(ys)) / 2.0)


def _assembly(xb, y0, pd, ul, gl, land, body_w, body_h):
    """Upper die, blade and lower die polygons (counter-clockwise)."""
    blade_w = 0.5 * ul
    upper_h = 0.6 * body_h
    lower = (
        (xb, y0), (xb, y0 - land), (xb + gl, y0 - land), (xb + gl, y0 - body_h),
        (xb + body_w, y0 - body_h), (xb + body_w, y0 - 12.0), (xb + body_w - 12.0, y0),
    )
    blade = ((xb - blade_w, y0 - pd), (xb, y0 - pd), (xb, y0 + ul), (xb - blade_w, y0 + ul))
    upper = (
        (xb - 0.5 * body_w, y0 + ul), (xb + 0.5 * body_w, y0 + ul),
        (xb + 0.5 * body_w, y0 + ul + upper_h), (xb - 0.5 * body_w, y0 + ul + upper_h),
    )
    return [("upper_die", upper), ("blade", blade), ("lower_die", lower)]


def _assembly_bbox(xb, y0, pd, ul, body_w, body_h):
    return (xb - 0.5 * body_w, y0 - body_h, xb + body_w, y0 + ul + 0.6 * body_h)


def _spot_seed(design: DieDesign, spot: InspectionSpot):
    line_idx = next(i for i, t in enumerate(design.trimming_lines) if t.line_id == spot.line_id)
    return [int(design.seed), line_idx, int(spot.spot_index)]


def section_at(design: DieDesign, spot: InspectionSpot) -> SectionProfile:
    """Analytic cross-section perpendicular to the trimming line at ``spot``."""
    line = design.line(spot.line_id)
    lo, hi = design.extents
    if not all(lo[k] - 1e-9 <= spot.position[k] <= hi[k] + 1e-9 for k in range(3)):
        raise GeometryError(f"spot {spot.spot_index} at {spot.position} lies outside the design extents")
    t = np.asarray(spot.tangent)
    u = np.asarray(spot.section_normal)
    w = np.cross(t, u)
    w /= np.linalg.norm(w)
    if w[2] < 0:
        w = -w
    p = np.asarray(spot.position)
    xb = float(p @ u)
    y0 = float(p @ w)
    prof = line.profile

    polygons = [TaggedPolygon(role, 0, pts) for role, pts in
                _assembly(xb, y0, prof.pd, prof.ul, prof.gl, prof.land, prof.body_w, prof.body_h)]
    truth = junction_points(xb, y0, prof.pd, prof.ul, prof.gl, prof.land)
    center = points_center(truth)

    rng = np.random.default_rng(_spot_seed(design, spot))
    occupied = [_assembly_bbox(xb, y0, prof.pd, prof.ul, prof.body_w, prof.body_h)]
    right_edge = occupied[0][2]
    left_edge = occupied[0][0]
    distractor_pts = []

    def j(v):
        return v * float(rng.uniform(1 - _DISTRACTOR_JITTER, 1 + _DISTRACTOR_JITTER))

    for k in range(1, prof.distractors + 1):
        d_pd, d_ul, d_gl = j(prof.pd), j(prof.ul), j(prof.gl)
        d_land = min(j(prof.land), 0.9 * d_ul)
        d_bw = j(prof.body_w) * _DISTRACTOR_BODY_SCALE
        d_bh = j(prof.body_h) * _DISTRACTOR_BODY_SCALE
        dy = float(rng.uniform(-0.5, 0.5)) * prof.body_h
        if rng.integers(2) == 0:
            d_xb = right_edge + _DISTRACTOR_GAP + 0.5 * d_bw
            right_edge = d_xb + d_bw
        else:
            d_xb = left_edge - _DISTRACTOR_GAP - d_bw
            left_edge = d_xb - 0.5 * d_bw
        d_y0 = y0 + dy
        for _, pts in _assembly(d_xb, d_y0, d_pd, d_ul, d_gl, d_land, d_bw, d_bh):
            polygons.append(TaggedPolygon("distractor", k, pts))
        dpts = junction_points(d_xb, d_y0, d_pd, d_ul, d_gl, d_land)
        dc = points_center(dpts)
        if math.dist(dc, center) < 60.0:
            raise GeometryError("distractor placed too close to the target region")
        distractor_pts.append(dpts)

    return SectionProfile(
        polygons=tuple(polygons),
        truth_points=truth,
        truth_lengths={"pd": prof.pd, "ul": prof.ul, "gl": prof.gl},
        target_center=center,
        distractor_points=tuple(distractor_pts),
    )


def section_bbox(profile: SectionProfile):
    xs = [q[0] for p in profile.polygons for q in p.points]
    ys = [q[1] for p in profile.polygons for q in p.points]
    if not xs:
        return None
    return (min(xs), min(ys), max(xs), max(ys))
