"""Pixel kernels with a compiled core and a NumPy fallback.

The compiled extension is used when it imports; otherwise the NumPy twins
are used.  :func:`use_backend` switches at runtime (tests and the benchmark
use it to compare the two).
"""
from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

ARM_N = _pykernels.ARM_N
ARM_S = _pykernels.ARM_S
ARM_E = _pykernels.ARM_E
ARM_W = _pykernels.ARM_W

_active = _ckernels if _ckernels is not None else _pykernels


def available_backends():
    return ["compiled", "python"] if _ckernels is not None else ["python"]


def backend_name():
    return "compiled" if _active is _ckernels else "python"


def use_backend(name):
    """Select ``"compiled"`` or ``"python"``; returns the previous name."""
    global _active
    previous = backend_name()
    if name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        _active = _ckernels
    elif name == "python":
        _active = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def fill_polygon(canvas, xs, ys, color):
    _active.fill_polygon(canvas, xs, ys, color)


def draw_segment(canvas, x0, y0, x1, y1, color):
    _active.draw_segment(canvas, float(x0), float(y0), float(x1), float(y1), color)


def draw_ring(canvas, cx, cy, radius, stroke, color):
    _active.draw_ring(canvas, float(cx), float(cy), float(radius), float(stroke), color)


def label_components(mask):
    return _active.label_components(mask)


def corner_arms(mask, arm_len=1):
    return _active.corner_arms(mask, int(arm_len))
