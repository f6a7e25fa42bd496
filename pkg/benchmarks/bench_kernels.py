"""Time the compiled and NumPy kernel backends on realistic workloads.

    python benchmarks/bench_kernels.py [--repeat N]

Reports the best-of-N time per kernel and backend, and checks that both
backends produce identical output on each workload.
"""
import argparse
import time

import numpy as np

from triminspect import _kernels, diemodel, raster
from triminspect.imaging import PALETTE


def _section_workload():
    d = diemodel.generate_design(7)
    prof = diemodel.section_at(d, diemodel.place_spots(d, d.target_line.line_id, 5)[2])
    return prof, raster.section_viewport(prof)


def workloads():
    prof, vp = _section_workload()
    section, _ = raster.render_section(prof, vp, True)
    crop = raster.render_zoom(prof, prof.target_center, raster.crop_mm_per_px(2.0))
    line_mask = section.mask(PALETTE.line)
    crop_mask = crop.mask(PALETTE.line)
    h, w = vp.height, vp.width

    def render():
        return raster.render_section(prof, vp, True)[0].pixels

    def ring():
        c = np.full((h, w, 3), 255, dtype=np.uint8)
        _kernels.draw_ring(c, w // 2, h // 2, 300.0, 1.0, PALETTE.line)
        return c

    return {
        "render_section (fill + segments + ring)": render,
        "draw_ring r=300": ring,
        "label_components (section lines)": lambda: _kernels.label_components(line_mask)[0],
        "corner_arms arm_len=1 (section)": lambda: _kernels.corner_arms(line_mask, 1),
        "corner_arms arm_len=2 (crop)": lambda: _kernels.corner_arms(crop_mask, 2),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = _kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'workload':<42} " + " ".join(f"{b:>10}" for b in backends) + "   speed-up  same")
    previous = _kernels.backend_name()
    try:
        for name, fn in workloads().items():
            results = {}
            for b in backends:
                _kernels.use_backend(b)
                results[b] = best_of(fn, args.repeat)
            times = " ".join(f"{results[b][0] * 1e3:>8.2f}ms" for b in backends)
            if len(backends) == 2:
                speed = results["python"][0] / results["compiled"][0]
                same = np.array_equal(results["python"][1], results["compiled"][1])
                print(f"{name:<42} {times}   {speed:7.1f}x  {same}")
            else:
                print(f"{name:<42} {times}")
    finally:
        _kernels.use_backend(previous)


if __name__ == "__main__":
    main()
