"""Calibration, length measurement, tolerance judgment and the redundancy
failure model.

Inputs are pixel positions, calibration images and scalars; outputs are
millimetre lengths and probabilities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CalibrationError, MeasurementIncomplete, ParameterError
from .imaging import PALETTE, RgbImage

CIRCLE_DIAMETER_MM = 20.0
LENGTHS = ("pd", "ul", "gl")
# point pairs per length and the axis they are measured along (0 = x, 1 = y)
LENGTH_PAIRS = {"pd": (1, 4, 1), "ul": (2, 4, 1), "gl": (3, 5, 0)}


@dataclass(frozen=True)
class ScaleFactor:
    gamma: float  # mm per px
    px_circle: float
    d_circle: float = CIRCLE_DIAMETER_MM

    def __post_init__(self):
        if not (self.px_circle > 0 and self.d_circle > 0):
            raise ParameterError("circle size must be positive")
        if self.gamma != self.d_circle / self.px_circle:
            raise ParameterError("gamma must equal d_circle / px_circle")

    @classmethod
    def from_pixels(cls, px_circle, d_circle=CIRCLE_DIAMETER_MM):
        return cls(d_circle / px_circle, float(px_circle), float(d_circle))


def scale_factor(circle_img: RgbImage, d_circle: float = CIRCLE_DIAMETER_MM,
                 line_colour: tuple = PALETTE.line) -> ScaleFactor:
    """Scale from the horizontal diameter of a rendered circle outline.

    The diameter is the distance between the outermost black pixel centres
    on the row through the outline's centroid.
    """
    mask = circle_img.mask(line_colour)
    _, n = _kernels.label_components(mask)
    if n == 0:
        raise CalibrationError("calibration image has no black pixels")
    if n > 1:
        raise CalibrationError(f"calibration image has {n} separate black components, expected 1")
    ys, xs = np.nonzero(mask)
    row = math.floor(ys.mean() + 0.5)
    on_row = xs[ys == row]
    px = float(on_row.max() - on_row.min()) if on_row.size else 0.0
    if px <= 0:
        raise CalibrationError("circle has no horizontal extent through its centroid")
    return ScaleFactor.from_pixels(px, d_circle)


@dataclass(frozen=True)
class Measurements:
    pd: float
    ul: float
    gl: float
    px: dict  # length name -> pixel distance
    spot_id: object = None

    def as_dict(self):
        return {"pd": self.pd, "ul": self.ul, "gl": self.gl}

    def to_dict(self):
        return {"pd": self.pd, "ul": self.ul, "gl": self.gl, "px": dict(self.px), "spot_id": self.spot_id}

    @classmethod
    def from_dict(cls, d):
        return cls(d["pd"], d["ul"], d["gl"], dict(d["px"]), d.get("spot_id"))


def _point_key(label):
    if isinstance(label, str) and label.startswith("point_"):
        return int(label[len("point_"):])
    return int(label)


def points_from_detections(dets: list) -> dict:
    """``{k: (x, y)}`` from point detections; each point is its box centre."""
    return {_point_key(d.label): (d.box.cx, d.box.cy) for d in dets if d.label.startswith("point_")}


def measure_lengths(points: dict, gamma: ScaleFactor, mode: str = "axis",
                    spot_id: int | None = None) -> Measurements:
    """PD from #1 and #4, UL from #2 and #4, GL from #3 and #5.

    ``points`` maps 1..5 (or ``"point_1"``..) to pixel centres.  ``mode`` is
    ``"axis"`` (vertical for PD/UL, horizontal for GL) or ``"euclidean"``.
    """
    if mode not in ("axis", "euclidean"):
        raise ParameterError(f"unknown measurement mode {mode!r}")
    pts = {_point_key(k): v for k, v in points.items()}
    missing = [f"point_{k}" for k in range(1, 6) if k not in pts]
    if missing:
        raise MeasurementIncomplete(missing)
    px = {}
    for name, (a, b, axis) in LENGTH_PAIRS.items():
        pa, pb = pts[a], pts[b]
        if mode == "axis":
            px[name] = abs(pa[axis] - pb[axis])
        else:
            px[name] = math.hypot(pa[0] - pb[0], pa[1] - pb[1])
    g = gamma.gamma
    return Measurements(px["pd"] * g, px["ul"] * g, px["gl"] * g, px, spot_id)


def relative_error(measured: float, truth: float) -> float:
    """Absolute relative error in percent."""
    if not truth > 0:
        raise ParameterError(f"truth length must be positive, got {truth}")
    return abs(measured - truth) / truth * 100.0


def error_buckets(errors_pct: list, edges: tuple = (1.0, 4.0)) -> dict:
    """Fraction of errors strictly below each edge, keyed ``lt_<edge>pct``."""
    errs = list(errors_pct)
    out = {}
    for e in edges:
        key = f"lt_{e:g}pct"
        out[key] = sum(1 for v in errs if v < e) / len(errs) if errs else 0.0
    return out


@dataclass(frozen=True)
class LengthTolerance:
    nominal: float
    lower: float = 0.0
    upper: float = 0.0

    def __post_init__(self):
        if not self.lower <= 0.0 <= self.upper:
            raise ParameterError("tolerance needs lower <= 0 <= upper")


@dataclass(frozen=True)
class ToleranceSpec:
    """Allowed deviation per length: a band around nominal, or a relative bound."""

    limits: dict  # length name -> LengthTolerance
    max_rel_pct: float | None = None

    def __post_init__(self):
        missing = set(LENGTHS) - set(self.limits)
        if missing:
            raise ParameterError(f"tolerance spec lacks {sorted(missing)}")
        if self.max_rel_pct is not None and not self.max_rel_pct >= 0:
            raise ParameterError("max_rel_pct must be >= 0")

    @classmethod
    def band(cls, nominals, lower, upper):
        return cls({k: LengthTolerance(nominals[k], lower, upper) for k in LENGTHS})

    @classmethod
    def relative(cls, nominals, max_rel_pct):
        return cls({k: LengthTolerance(nominals[k]) for k in LENGTHS}, float(max_rel_pct))


@dataclass(frozen=True)
class Judgment:
    per_length: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.per_length.values())

    def to_dict(self):
        return {"per_length": dict(self.per_length), "passed": self.passed}


def judge(m: Measurements, spec: ToleranceSpec) -> Judgment:
    """Bounds are inclusive; overall pass needs all three lengths to pass."""
    verdict = {}
    values = m.as_dict()
    for name in LENGTHS:
        tol = spec.limits[name]
        v = values[name]
        if spec.max_rel_pct is not None:
            ok = relative_error(v, tol.nominal) <= spec.max_rel_pct
        else:
            ok = tol.nominal + tol.lower <= v <= tol.nominal + tol.upper
        verdict[name] = bool(ok)
    return Judgment(verdict)


@dataclass(frozen=True)
class FailureModel:
    p_point: float
    n_points: int = 5
    redundancy_k: int = 1

    def __post_init__(self):
        if not 0.0 <= self.p_point <= 1.0:
            raise ParameterError("p_point must lie in [0, 1]")
        if self.n_points < 1 or self.redundancy_k < 1:
            raise ParameterError("n_points and redundancy_k must be >= 1")


def spot_success_prob(model: FailureModel) -> float:
    """Chance that every target point of one spot is found."""
    return model.p_point ** model.n_points


def line_failure_rate(spot_failure: float, redundancy_k: int) -> float:
    """Chance that all ``redundancy_k`` spots covering one location fail."""
    if not 0.0 <= spot_failure <= 1.0:
        raise ParameterError("spot_failure must lie in [0, 1]")
    if redundancy_k < 1:
        raise ParameterError("redundancy_k must be >= 1")
    return spot_failure ** redundancy_k
