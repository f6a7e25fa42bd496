"""Command-line interface.

A failing command exits with status 1 after a one-line diagnostic on stderr.
Usage errors exit with 2.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__, diemodel, kernelcheck, pipeline
from .errors import InspectionError

DEFAULT_SWEEP_MPP = (0.01, 0.02, 0.05, 0.1, 0.2)
DEFAULT_SWEEP_SPANS = (100, 200, 300, 400, 500)


class CommandError(Exception):
    pass


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load_cfg(args):
    cfg = pipeline.load_config(args.config) if args.config else pipeline.PipelineConfig()
    if getattr(args, "spots", None) is not None:
        gen = pipeline.GenerationConfig(cfg.generation.seed, args.spots, cfg.generation.line_id)
        cfg = cfg.replace(generation=gen)
    if getattr(args, "workers", None) is not None:
        o = cfg.output
        cfg = cfg.replace(output=pipeline.OutputConfig(o.dir, o.formats, o.dump_images, args.workers, o.measure_mode))
    return cfg


def design_seeds(seed, n):
    """Per-design seeds drawn from one master seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def cmd_gen(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(design_seeds(args.seed, args.designs)):
        design = diemodel.generate_design(s, design_id=f"design_{i:03d}")
        path = out / f"design_{i:03d}.json"
        diemodel.save_design(design, path)
        print(path)
    return 0


def _print_summary(report):
    a = report.aggregates
    print(f"design: {report.design_id}  line: {report.line_id}  spots: {a['n_spots']}")
    print(f"region_accuracy: {a['region_accuracy']!r}")
    print(f"point_accuracy: {a['point_accuracy']!r}")
    for label, v in a["point_accuracy_per_label"].items():
        print(f"  {label}: {v!r}")
    print(f"mean_rel_error_pct: {a['mean_rel_error_pct']!r}")
    for k, v in a["mean_rel_error_pct_per_length"].items():
        print(f"  {k}: {v!r}")
    for k, v in a["error_buckets"].items():
        print(f"error_{k}: {v!r}")
    print(f"pass_rate: {a['pass_rate']!r}")
    print(f"predicted_line_failure_rate: {a['predicted_line_failure_rate']!r} (k={a['redundancy_k']})")


def _print_timing(report):
    t = report.timing
    if not t:
        return
    print("stage                          s/spot")
    for name, v in t["per_spot_mean_s"].items():
        print(f"  {name:<28} {v:.4f}")
    print(f"  {'zigzag_overhead (per die)':<28} {t['zigzag_overhead_s']:.4f}")
    print(f"modelled_total_s: {t['modelled_total_s']:.3f}  wall_clock_s: {t['wall_clock_s']:.3f}")


def cmd_inspect(args):
    cfg = _load_cfg(args)
    design = diemodel.load_design(args.die)
    report = pipeline.inspect_die(design, cfg, out_dir=args.out)
    _print_timing(report)
    _print_summary(report)
    for fmt, path in pipeline.report_paths(args.out, report.design_id).items():
        if fmt in cfg.output.formats:
            print(f"wrote {path}")
    return 0


def _design_files(directory):
    d = Path(directory)
    if not d.is_dir():
        raise CommandError(f"{d}: not a directory")
    files = sorted(d.glob("*.json"))
    if not files:
        raise CommandError(f"{d}: no design files (*.json)")
    return files


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r[h] for h in header])


def cmd_ablate(args):
    cfg = _load_cfg(args)
    rows = [pipeline.ablate_design(diemodel.load_design(f), cfg) for f in _design_files(args.dies)]
    rows.append(pipeline.overall_ablation(rows))
    header = ["design_id", "n_sections", "with_shortcut", "without_shortcut"]
    print(f"{'design':<16} {'sections':>8} {'with':>8} {'without':>8}")
    for r in rows:
        print(f"{r.design_id:<16} {r.n_sections:>8} {r.with_shortcut:>8.3f} {r.without_shortcut:>8.3f}")
    if args.out:
        _write_csv(args.out, header, [r.to_dict() for r in rows])
        print(f"wrote {args.out}")
    return 0


def cmd_sweep(args):
    if args.kind == "gamma":
        rows = pipeline.gamma_sweep(args.mpp)
        header = ["mm_per_px", "px_circle", "gamma", "rel_err_pct"]
    else:
        if not args.die:
            raise CommandError("--die is required for the crop sweep")
        cfg = _load_cfg(args)
        rows = pipeline.crop_sweep(diemodel.load_design(args.die), cfg, args.spans)
        header = ["region_span_px", "crop_mm_per_px", "point_accuracy", "mean_rel_error_pct", "max_rel_error_pct"]
    print(",".join(header))
    for r in rows:
        print(",".join(repr(r[h]) for h in header))
    if args.out:
        _write_csv(args.out, header, rows)
    return 0


def cmd_detmath_check(args):
    try:
        results = kernelcheck.run_checks(args.trials, args.seed, args.inject_fault)
    except ValueError as exc:
        raise CommandError(str(exc)) from exc
    failed = [r for r in results if not r.passed]
    for r in results:
        mark = "ok  " if r.passed else "FAIL"
        extra = f"  ({r.detail})" if r.detail else ""
        print(f"{mark} {r.name}: {r.trials - min(r.failures, r.trials)}/{r.trials}{extra}")
    if failed:
        raise CommandError(f"{len(failed)} of {len(results)} properties failed: "
                           + ", ".join(r.name for r in failed))
    print(f"all {len(results)} properties passed")
    return 0


def cmd_report(args):
    report = pipeline.load_report(args.report)
    _print_timing(report)
    _print_summary(report)
    print("aggregates consistent with rows")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="triminspect", description="Trimming-die section inspection simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate synthetic die designs")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--designs", type=_positive_int, default=4)
    g.add_argument("--out", default="designs")
    g.set_defaults(func=cmd_gen)

    i = sub.add_parser("inspect", help="inspect one die and write reports")
    i.add_argument("--die", required=True)
    i.add_argument("--config")
    i.add_argument("--out", default="reports")
    i.add_argument("--spots", type=_positive_int)
    i.add_argument("--workers", type=_positive_int)
    i.set_defaults(func=cmd_inspect)

    a = sub.add_parser("ablate", help="region accuracy with and without the shortcut mark")
    a.add_argument("--dies", required=True)
    a.add_argument("--out")
    a.add_argument("--config")
    a.add_argument("--spots", type=_positive_int)
    a.set_defaults(func=cmd_ablate)

    s = sub.add_parser("sweep", help="metrology sweeps as CSV")
    s.add_argument("--kind", choices=("gamma", "crop"), default="gamma")
    s.add_argument("--mpp", type=_float_list, default=list(DEFAULT_SWEEP_MPP))
    s.add_argument("--spans", type=_float_list, default=list(DEFAULT_SWEEP_SPANS))
    s.add_argument("--die")
    s.add_argument("--config")
    s.add_argument("--spots", type=_positive_int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    d = sub.add_parser("detmath-check", help="validate the detection maths")
    d.add_argument("--trials", type=_positive_int, default=100)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--inject-fault", choices=sorted(kernelcheck.FAULTS))
    d.set_defaults(func=cmd_detmath_check)

    r = sub.add_parser("report", help="summarise and verify a JSON report")
    r.add_argument("report")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CommandError, InspectionError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"triminspect {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
