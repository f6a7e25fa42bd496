"""The image interface between the CAD and AI sides.

Only values defined here (plus pixel-space boxes from :mod:`.detmath` and
plain scalars) cross between the rendering stages and the detection stages.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detmath import Box
from .errors import DecodeError, ParameterError


@dataclass(frozen=True)
class Palette:
    background: tuple = (255, 255, 255)
    line: tuple = (0, 0, 0)
    fill: tuple = (128, 128, 128)
    shortcut: tuple = (255, 0, 0)

    def __post_init__(self):
        colours = [tuple(c) for c in (self.background, self.line, self.fill, self.shortcut)]
        if len(set(colours)) != 4:
            raise ParameterError("palette colours must be pairwise distinct")

    def to_dict(self):
        return {k: list(getattr(self, k)) for k in ("background", "line", "fill", "shortcut")}


PALETTE = Palette()


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Row-major 8-bit RGB raster backed by an ``(h, w, 3)`` uint8 array."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ParameterError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        px = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ParameterError(f"pixel buffer shape {px.shape} does not match {self.width}x{self.height}")
        object.__setattr__(self, "pixels", px)

    @classmethod
    def blank(cls, width, height, colour=PALETTE.background):
        return cls(width, height, np.full((height, width, 3), colour, dtype=np.uint8))

    def mask(self, colour):
        px = self.pixels
        r, g, b = (int(v) for v in colour)
        return (px[..., 0] == r) & (px[..., 1] == g) & (px[..., 2] == b)

    def tobytes(self):
        return self.pixels.tobytes()

    def __eq__(self, other):
        return (isinstance(other, RgbImage) and self.width == other.width
                and self.height == other.height and np.array_equal(self.pixels, other.pixels))

    __hash__ = None


@dataclass(frozen=True)
class LabeledBox:
    label: str
    box: Box


# --- PPM (P6, maxval 255) ------------------------------------------------

def encode_ppm(img: RgbImage) -> bytes:
    return b"P6 %d %d 255\n" % (img.width, img.height) + img.tobytes()


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def decode_ppm(data: bytes) -> RgbImage:
    pos = 0
    tokens = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise DecodeError("truncated PPM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P6":
        raise DecodeError(f"not a binary PPM (magic {tokens[0]!r})")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise DecodeError(f"malformed PPM header: {exc}") from exc
    if w < 1 or h < 1:
        raise DecodeError(f"bad PPM dimensions {w}x{h}")
    if maxval != 255:
        raise DecodeError(f"unsupported maxval {maxval}")
    if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\n", b"\r", b"\t"):
        raise DecodeError("missing whitespace after PPM header")
    payload = data[pos + 1:]
    need = w * h * 3
    if len(payload) < need:
        raise DecodeError(f"truncated PPM payload: {len(payload)} of {need} bytes")
    if len(payload) > need:
        raise DecodeError(f"{len(payload) - need} trailing bytes after PPM payload")
    px = np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).copy()
    return RgbImage(w, h, px)


def write_ppm(img: RgbImage, path):
    Path(path).write_bytes(encode_ppm(img))


def read_ppm(path) -> RgbImage:
    return decode_ppm(Path(path).read_bytes())
