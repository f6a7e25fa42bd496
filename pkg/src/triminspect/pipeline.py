"""Zigzag orchestration: CAD-side sectioning and cropping alternate with
pixel-only detection and measurement.

Stages are plain functions whose signatures show what crosses the boundary.
``_cad_*`` stages may touch designs and profiles; ``_ai_*`` stages take only
images, pixel boxes, configs and scalars.  All section images of a die are
rendered first (batch mode); the remaining per-spot stages then run
concurrently and rows are merged by spot index.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import diemodel, raster
from .detector import (Detection, DetectorConfig, detect_target_points, detect_trimming_region,
                       evaluate_detections)
from .detmath import Box
from .errors import (ConfigError, GeometryError, InspectionError, MeasurementIncomplete,
                     ReportError)
from .imaging import RgbImage, write_ppm
from .measure import (LENGTHS, ScaleFactor, ToleranceSpec, error_buckets, judge,
                      line_failure_rate, measure_lengths, points_from_detections, relative_error,
                      scale_factor)

REPORT_VERSION = 1
STAGES = ("data_processing", "selective_cropping", "region_detection", "point_detection_measurement")
STATUSES = ("ok", "region_miss", "point_miss")


# --- configuration --------------------------------------------------------

@dataclass(frozen=True)
class GenerationConfig:
    seed: int = 0
    n_spots: int = 50
    line_id: str | None = None  # None inspects the design's target line


@dataclass(frozen=True)
class ViewportConfig:
    section_mm_per_px: float = raster.DEFAULT_SECTION_MM_PER_PX
    section_width: int = raster.SECTION_SIZE[0]
    section_height: int = raster.SECTION_SIZE[1]
    crop_size: int = raster.CROP_SIZE
    region_span_px: float = raster.REGION_SPAN_PX


@dataclass(frozen=True)
class ToleranceConfig:
    """``band`` uses ``lower``/``upper`` mm around nominal; ``relative`` uses ``max_rel_pct``."""

    mode: str = "band"
    lower: float = -0.5
    upper: float = 0.5
    max_rel_pct: float = 4.0


@dataclass(frozen=True)
class FailureConfig:
    redundancy_k: int = 2
    n_points: int = 5
    zigzag_overhead_s: float = 10.0


@dataclass(frozen=True)
class OutputConfig:
    dir: str | None = None
    formats: tuple = ("json", "csv")
    dump_images: bool = False
    workers: int = 1
    measure_mode: str = "axis"


_SECTIONS = {
    "generation": GenerationConfig,
    "viewport": ViewportConfig,
    "detector": DetectorConfig,
    "tolerances": ToleranceConfig,
    "failure_model": FailureConfig,
    "output": OutputConfig,
}


def _build(cls, name, data):
    if not isinstance(data, dict):
        raise ConfigError(f"[{name}] must be an object")
    if cls is DetectorConfig:
        try:
            return DetectorConfig.from_dict(data)
        except (InspectionError, TypeError) as exc:
            raise ConfigError(f"[{name}] {exc}") from exc
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"[{name}] unknown keys {sorted(unknown)}")
    data = dict(data)
    if "formats" in data:
        data["formats"] = tuple(data["formats"])
    return cls(**data)


@dataclass(frozen=True)
class PipelineConfig:
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    viewport: ViewportConfig = field(default_factory=ViewportConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    failure_model: FailureConfig = field(default_factory=FailureConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        g, v, t, f, o = self.generation, self.viewport, self.tolerances, self.failure_model, self.output
        if not (isinstance(g.n_spots, int) and 1 <= g.n_spots <= 1000):
            raise ConfigError(f"[generation] n_spots must be an integer in [1, 1000], got {g.n_spots!r}")
        if not v.section_mm_per_px > 0:
            raise ConfigError("[viewport] section_mm_per_px must be positive")
        if v.section_width < 1 or v.section_height < 1 or v.crop_size < 16:
            raise ConfigError("[viewport] image sizes too small")
        if not v.region_span_px > 0:
            raise ConfigError("[viewport] region_span_px must be positive")
        if t.mode not in ("band", "relative"):
            raise ConfigError(f"[tolerances] mode must be 'band' or 'relative', got {t.mode!r}")
        if not t.lower <= 0.0 <= t.upper or not t.max_rel_pct >= 0:
            raise ConfigError("[tolerances] need lower <= 0 <= upper and max_rel_pct >= 0")
        if f.redundancy_k < 1 or f.n_points < 1 or not f.zigzag_overhead_s >= 0:
            raise ConfigError("[failure_model] redundancy_k, n_points >= 1 and overhead >= 0 required")
        if o.workers < 1:
            raise ConfigError("[output] workers must be >= 1")
        if o.measure_mode not in ("axis", "euclidean"):
            raise ConfigError(f"[output] measure_mode must be 'axis' or 'euclidean', got {o.measure_mode!r}")
        if not set(o.formats) <= {"json", "csv"}:
            raise ConfigError(f"[output] formats must be drawn from json, csv; got {list(o.formats)}")

    @property
    def crop_mm_per_px(self):
        return raster.crop_mm_per_px(self.viewport.section_mm_per_px,
                                     self.detector.region_box_size, self.viewport.region_span_px)

    def to_dict(self):
        out = {}
        for name in _SECTIONS:
            sec = getattr(self, name)
            if isinstance(sec, DetectorConfig):
                out[name] = sec.to_dict()
            else:
                d = asdict(sec)
                if "formats" in d:
                    d["formats"] = list(d["formats"])
                out[name] = d
        return out

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        try:
            return cls(**{k: _build(_SECTIONS[k], k, v) for k, v in data.items()})
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **sections):
        d = {name: getattr(self, name) for name in _SECTIONS}
        d.update(sections)
        return PipelineConfig(**d)


def load_config(path) -> PipelineConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return PipelineConfig.from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def save_config(cfg: PipelineConfig, path):
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


# --- timing ---------------------------------------------------------------

@dataclass(frozen=True)
class StageTiming:
    """Seconds per spot for each stage, plus a per-die zigzag overhead."""

    data_processing: float = 0.0
    selective_cropping: float = 0.0
    region_detection: float = 0.0
    point_detection_measurement: float = 0.0
    zigzag_overhead: float = 0.0

    def __post_init__(self):
        if any(not getattr(self, f.name) >= 0 for f in fields(self)):
            raise ConfigError("stage timings must be >= 0")

    def per_spot(self):
        return (self.data_processing + self.selective_cropping
                + self.region_detection + self.point_detection_measurement)


def total_time(t: StageTiming, n_spots: int) -> float:
    if n_spots < 0:
        raise ConfigError("n_spots must be >= 0")
    return t.per_spot() * n_spots + t.zigzag_overhead


# --- stages ---------------------------------------------------------------

@dataclass
class _SpotContext:
    """CAD-side state for one spot; never handed to an ``_ai_*`` stage."""

    spot: diemodel.InspectionSpot
    profile: diemodel.SectionProfile | None = None
    viewport: raster.Viewport | None = None
    truth_boxes: list = field(default_factory=list)
    image: RgbImage | None = None
    error: str | None = None


def _cad_section(design, spot, cfg: PipelineConfig) -> _SpotContext:
    ctx = _SpotContext(spot)
    v = cfg.viewport
    try:
        ctx.profile = diemodel.section_at(design, spot)
        ctx.viewport = raster.section_viewport(ctx.profile, v.section_mm_per_px,
                                               (v.section_width, v.section_height))
        ctx.image, ctx.truth_boxes = raster.render_section(
            ctx.profile, ctx.viewport, cfg.detector.use_shortcut, cfg.detector.palette,
            region_min_px=cfg.detector.region_box_size)
    except (GeometryError, InspectionError) as exc:
        ctx.error = f"{type(exc).__name__}: {exc}"
    return ctx


def _ai_region(image: RgbImage, det_cfg: DetectorConfig) -> list[Detection]:
    return detect_trimming_region(image, det_cfg)


def _cad_crop(ctx: _SpotContext, box: Box, cfg: PipelineConfig):
    mpp = cfg.crop_mm_per_px
    center = raster.px_to_mm(ctx.viewport, (box.cx, box.cy))
    size = cfg.viewport.crop_size
    crop = raster.render_zoom(ctx.profile, center, mpp, size, cfg.detector.palette)
    circle = raster.render_calibration_circle(mpp, raster.calibration_size(mpp, minimum=size),
                                              palette=cfg.detector.palette)
    truth = raster.point_truth_boxes(ctx.profile, raster.zoom_viewport(center, mpp, size),
                                     cfg.detector.point_box_size)
    return crop, circle, center, truth


def _ai_points(crop: RgbImage, circle: RgbImage, det_cfg: DetectorConfig) -> tuple[list[Detection], ScaleFactor]:
    return detect_target_points(crop, det_cfg), scale_factor(circle, line_colour=det_cfg.palette.line)


# --- results --------------------------------------------------------------

@dataclass
class SpotResult:
    spot_index: int
    line_id: str
    arc_length: float
    status: str
    region: list = field(default_factory=list)  # Detection dicts, best first
    region_hit: bool = False
    crop_center_mm: list | None = None
    crop_mm_per_px: float | None = None
    gamma: float | None = None
    px_circle: float | None = None
    points: list = field(default_factory=list)
    points_hit: dict = field(default_factory=dict)  # label -> bool; empty when no crop was made
    measurements: dict | None = None
    truth_lengths: dict | None = None
    judgment: dict | None = None
    rel_errors: dict | None = None
    error: str | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ReportError(f"unknown spot status {self.status!r}")
        complete = self.measurements is not None and len(self.points_hit) == 5 and all(self.points_hit.values())
        if (self.status == "ok") != complete:
            raise ReportError(f"spot {self.spot_index}: status {self.status!r} inconsistent with its points")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _mean(xs):
    xs = list(xs)
    return math.fsum(xs) / len(xs) if xs else 0.0


def compute_aggregates(rows, redundancy_k: int, n_points: int = 5) -> dict:
    """Summary statistics recomputed purely from per-spot rows."""
    n = len(rows)
    cropped = [r for r in rows if r.points_hit]
    per_point = {}
    for k in range(1, 6):
        label = f"point_{k}"
        hits = [bool(r.points_hit.get(label)) for r in cropped]
        per_point[label] = _mean(hits) if hits else 0.0
    point_acc = _mean(per_point.values()) if cropped else 0.0
    ok = [r for r in rows if r.status == "ok"]
    errs = {k: [r.rel_errors[k] for r in ok] for k in LENGTHS}
    all_errs = [e for k in LENGTHS for e in errs[k]]
    spot_fail = 1.0 - point_acc ** n_points
    return {
        "n_spots": n,
        "status_counts": {s: sum(1 for r in rows if r.status == s) for s in STATUSES},
        "region_accuracy": _mean(r.region_hit for r in rows) if rows else 0.0,
        "point_accuracy": point_acc,
        "point_accuracy_per_label": per_point,
        "mean_rel_error_pct": _mean(all_errs),
        "mean_rel_error_pct_per_length": {k: _mean(v) for k, v in errs.items()},
        "max_rel_error_pct": max(all_errs) if all_errs else 0.0,
        "error_buckets": error_buckets(all_errs),
        "pass_rate": _mean(r.status == "ok" and r.judgment["passed"] for r in rows) if rows else 0.0,
        "spot_success_rate": len(ok) / n if n else 0.0,
        "predicted_spot_failure": spot_fail,
        "redundancy_k": redundancy_k,
        "predicted_line_failure_rate": line_failure_rate(spot_fail, redundancy_k),
    }


@dataclass
class InspectionReport:
    design_id: str
    line_id: str
    config: dict
    rows: list
    aggregates: dict
    timing: dict = field(default_factory=dict)

    def content_dict(self):
        """Everything except the timing block."""
        return {"version": REPORT_VERSION, "design_id": self.design_id, "line_id": self.line_id,
                "config": self.config, "rows": [r.to_dict() for r in self.rows],
                "aggregates": self.aggregates}

    def to_dict(self):
        d = self.content_dict()
        d["timing"] = self.timing
        return d

    def check_consistency(self):
        fm = self.config.get("failure_model", {})
        again = compute_aggregates(self.rows, fm.get("redundancy_k", 1), fm.get("n_points", 5))
        if again != self.aggregates:
            diff = sorted(k for k in again if again[k] != self.aggregates.get(k))
            raise ReportError(f"report aggregates disagree with its rows: {diff}")
        idx = [r.spot_index for r in self.rows]
        if idx != sorted(idx):
            raise ReportError("report rows are not sorted by spot index")


# --- orchestration --------------------------------------------------------

def _tolerance_spec(cfg: PipelineConfig, nominals) -> ToleranceSpec:
    t = cfg.tolerances
    if t.mode == "relative":
        return ToleranceSpec.relative(nominals, t.max_rel_pct)
    return ToleranceSpec.band(nominals, t.lower, t.upper)


def _process_spot(ctx: _SpotContext, cfg: PipelineConfig, artifacts: Path | None):
    spot = ctx.spot
    base = dict(spot_index=spot.spot_index, line_id=spot.line_id, arc_length=spot.arc_length)
    times = dict.fromkeys(STAGES[1:], 0.0)
    if ctx.error is not None:
        return SpotResult(status="region_miss", error=ctx.error, **base), times

    t0 = time.perf_counter()
    region = _ai_region(ctx.image, cfg.detector)
    times["region_detection"] = time.perf_counter() - t0
    hit = evaluate_detections(region[:1], ctx.truth_boxes[:1], cfg.detector.match_iou).accuracy == 1.0
    base.update(region=[d.to_dict() for d in region], region_hit=hit,
                truth_lengths=dict(ctx.profile.truth_lengths))
    if not region or not hit:
        return SpotResult(status="region_miss", error=None if region else "no region detected", **base), times

    t0 = time.perf_counter()
    crop, circle, center, truth = _cad_crop(ctx, region[0].box, cfg)
    times["selective_cropping"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    points, sf = _ai_points(crop, circle, cfg.detector)
    stats = evaluate_detections(points, truth, cfg.detector.match_iou)
    points_hit = {label: s.detected == s.total for label, s in sorted(stats.per_label.items())}
    base.update(crop_center_mm=list(center), crop_mm_per_px=cfg.crop_mm_per_px, gamma=sf.gamma,
                px_circle=sf.px_circle, points=[d.to_dict() for d in points], points_hit=points_hit)
    result = None
    if all(points_hit.values()):
        try:
            m = measure_lengths(points_from_detections(points), sf, cfg.output.measure_mode, spot.spot_index)
        except MeasurementIncomplete as exc:
            result = SpotResult(status="point_miss", error=str(exc), **base)
        else:
            truth_len = ctx.profile.truth_lengths
            verdict = judge(m, _tolerance_spec(cfg, truth_len))
            result = SpotResult(status="ok", measurements=m.to_dict(), judgment=verdict.to_dict(),
                                rel_errors={k: relative_error(m.as_dict()[k], truth_len[k]) for k in LENGTHS},
                                **base)
    else:
        missed = [k for k, v in points_hit.items() if not v]
        result = SpotResult(status="point_miss", error=f"missed {', '.join(missed)}", **base)
    times["point_detection_measurement"] = time.perf_counter() - t0

    if artifacts is not None:
        stem = artifacts / f"spot_{spot.spot_index:04d}"
        write_ppm(ctx.image, f"{stem}_section.ppm")
        write_ppm(crop, f"{stem}_crop.ppm")
        write_ppm(circle, f"{stem}_circle.ppm")
    return result, times


def inspect_die(design: diemodel.DieDesign, cfg: PipelineConfig, out_dir=None) -> InspectionReport:
    """Inspect every spot on one trimming line and build the report.

    Per-spot stage failures become status flags.  When ``out_dir`` (or the
    configured output dir) is set the report files are written there.
    """
    wall0 = time.perf_counter()
    line_id = cfg.generation.line_id or design.target_line.line_id
    spots = diemodel.place_spots(design, line_id, cfg.generation.n_spots)
    out_dir = out_dir if out_dir is not None else cfg.output.dir
    artifacts = None
    if out_dir is not None and cfg.output.dump_images:
        artifacts = Path(out_dir) / "artifacts"
        artifacts.mkdir(parents=True, exist_ok=True)

    # batch sectioning: every section image exists before detection starts
    contexts, section_times = [], []
    for spot in spots:
        t0 = time.perf_counter()
        contexts.append(_cad_section(design, spot, cfg))
        section_times.append(time.perf_counter() - t0)

    if cfg.output.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.output.workers) as pool:
            outcomes = list(pool.map(lambda c: _process_spot(c, cfg, artifacts), contexts))
    else:
        outcomes = [_process_spot(c, cfg, artifacts) for c in contexts]
    outcomes.sort(key=lambda o: o[0].spot_index)
    rows = [o[0] for o in outcomes]

    fm = cfg.failure_model
    aggregates = compute_aggregates(rows, fm.redundancy_k, fm.n_points)
    mean_stage = {"data_processing": _mean(section_times)}
    for name in STAGES[1:]:
        mean_stage[name] = _mean(o[1][name] for o in outcomes)
    timing = StageTiming(**mean_stage, zigzag_overhead=fm.zigzag_overhead_s)
    report = InspectionReport(
        design_id=design.design_id, line_id=line_id, config=cfg.to_dict(), rows=rows,
        aggregates=aggregates,
        timing={"per_spot_mean_s": mean_stage, "zigzag_overhead_s": fm.zigzag_overhead_s,
                "modelled_total_s": total_time(timing, len(rows)),
                "wall_clock_s": time.perf_counter() - wall0},
    )
    if out_dir is not None:
        write_reports(report, out_dir, cfg.output.formats)
    return report


# --- report IO ------------------------------------------------------------

CSV_FIELDS = ("spot_index", "line_id", "length", "status", "measured_mm", "truth_mm", "error_pct", "passed")


def _csv_text(report: InspectionReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in report.rows:
        for k in LENGTHS:
            ok = r.status == "ok"
            w.writerow([r.spot_index, r.line_id, k, r.status,
                        repr(r.measurements[k]) if ok else "",
                        repr(r.truth_lengths[k]) if r.truth_lengths else "",
                        repr(r.rel_errors[k]) if ok else "",
                        str(r.judgment["per_length"][k]).lower() if ok else ""])
    return buf.getvalue()


def emit_report(report: InspectionReport, path, fmt: str = "json"):
    """Write the report as ``json`` (full document) or ``csv`` (spot x length rows)."""
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        text = _csv_text(report)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ReportError(f"cannot write report {path}: {exc.strerror}") from exc
    return path


def report_paths(out_dir, design_id):
    out = Path(out_dir)
    return {"json": out / f"{design_id}_report.json", "csv": out / f"{design_id}_report.csv"}


def write_reports(report: InspectionReport, out_dir, formats=("json", "csv")):
    paths = report_paths(out_dir, report.design_id)
    return {f: emit_report(report, paths[f], f) for f in formats}


def report_from_dict(d) -> InspectionReport:
    try:
        rows = [SpotResult.from_dict(r) for r in d["rows"]]
        report = InspectionReport(d["design_id"], d["line_id"], d["config"], rows,
                                  d["aggregates"], d.get("timing", {}))
    except (KeyError, TypeError) as exc:
        raise ReportError(f"malformed report: {exc}") from exc
    report.check_consistency()
    return report


def load_report(path) -> InspectionReport:
    """Read a JSON report and verify its aggregates against its rows."""
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ReportError(f"cannot read report {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}: not JSON ({exc.msg})") from exc
    return report_from_dict(d)


def load_csv(path) -> list[dict]:
    """Rows of a tabular report with numeric fields parsed back."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ReportError(f"cannot read report {path}: {exc.strerror}") from exc
    out = []
    for r in rows:
        out.append({
            "spot_index": int(r["spot_index"]), "line_id": r["line_id"], "length": r["length"],
            "status": r["status"],
            "measured_mm": float(r["measured_mm"]) if r["measured_mm"] else None,
            "truth_mm": float(r["truth_mm"]) if r["truth_mm"] else None,
            "error_pct": float(r["error_pct"]) if r["error_pct"] else None,
            "passed": {"true": True, "false": False}.get(r["passed"]),
        })
    return out


def strip_timing(report_json: bytes) -> bytes:
    """JSON report bytes with the timing block removed, for run-to-run comparison."""
    d = json.loads(report_json)
    d.pop("timing", None)
    return json.dumps(d, indent=2, sort_keys=True).encode()


# --- experiments ----------------------------------------------------------

@dataclass(frozen=True)
class AblationRow:
    design_id: str
    n_sections: int
    with_shortcut: float
    without_shortcut: float

    def to_dict(self):
        return asdict(self)


def ablate_design(design: diemodel.DieDesign, cfg: PipelineConfig) -> AblationRow:
    """Top-1 region accuracy with and without the shortcut mark on every section."""
    line_id = cfg.generation.line_id or design.target_line.line_id
    v = cfg.viewport
    on = DetectorConfig.from_dict({**cfg.detector.to_dict(), "use_shortcut": True})
    off = DetectorConfig.from_dict({**cfg.detector.to_dict(), "use_shortcut": False})
    hits = {True: 0, False: 0}
    n = 0
    for spot in diemodel.place_spots(design, line_id, cfg.generation.n_spots):
        n += 1
        try:
            profile = diemodel.section_at(design, spot)
            vp = raster.section_viewport(profile, v.section_mm_per_px, (v.section_width, v.section_height))
            for det_cfg in (on, off):
                img, truth = raster.render_section(profile, vp, det_cfg.use_shortcut, det_cfg.palette,
                                                   region_min_px=det_cfg.region_box_size)
                dets = _ai_region(img, det_cfg)
                hits[det_cfg.use_shortcut] += evaluate_detections(
                    dets[:1], truth[:1], det_cfg.match_iou).accuracy == 1.0
        except (GeometryError, InspectionError):
            continue  # counts as a miss in both modes
    return AblationRow(design.design_id, n, hits[True] / n, hits[False] / n)


def overall_ablation(rows) -> AblationRow:
    n = sum(r.n_sections for r in rows)
    w = sum(r.with_shortcut * r.n_sections for r in rows) / n if n else 0.0
    wo = sum(r.without_shortcut * r.n_sections for r in rows) / n if n else 0.0
    return AblationRow("overall", n, w, wo)


def gamma_sweep(mm_per_px_values, diameter_mm=raster.CIRCLE_DIAMETER_MM):
    """Calibration accuracy against the zoom used to render the circle."""
    out = []
    for mpp in mm_per_px_values:
        size = raster.calibration_size(mpp, diameter_mm)
        sf = scale_factor(raster.render_calibration_circle(mpp, size, diameter_mm), diameter_mm)
        out.append({"mm_per_px": mpp, "px_circle": sf.px_circle, "gamma": sf.gamma,
                    "rel_err_pct": abs(sf.gamma - mpp) / mpp * 100.0})
    return out


def crop_sweep(design: diemodel.DieDesign, cfg: PipelineConfig, spans):
    """Measurement error against the pixel span given to the target region in the crop."""
    out = []
    for span in spans:
        c = cfg.replace(viewport=ViewportConfig(**{**asdict(cfg.viewport), "region_span_px": float(span)}),
                        output=OutputConfig(**{**asdict(cfg.output), "dir": None, "dump_images": False}))
        agg = inspect_die(design, c).aggregates
        out.append({"region_span_px": float(span), "crop_mm_per_px": c.crop_mm_per_px,
                    "point_accuracy": agg["point_accuracy"],
                    "mean_rel_error_pct": agg["mean_rel_error_pct"],
                    "max_rel_error_pct": agg["max_rel_error_pct"]})
    return out
