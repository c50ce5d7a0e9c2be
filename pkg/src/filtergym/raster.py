"""8-bit RGB raster values, grayscale reductions, convolution and PPM I/O.

A Raster is an immutable (height, width, 3) uint8 array. All operations
return new Rasters; pixel buffers are copied in and marked read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import accel

GRAY_WEIGHTS = (0.299, 0.587, 0.114)


class PPMError(ValueError):
    """Raised for malformed, truncated or unsupported PPM data."""


class Raster:
    """Immutable RGB image with uint8 channels."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels) -> None:
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) pixels, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("raster must be at least 1x1")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError(f"pixels must be integer-typed, got {arr.dtype}")
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("pixel values outside [0, 255]")
        arr = arr.astype(np.uint8, copy=True)
        arr.setflags(write=False)
        self._pixels = arr

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Raster):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and bool(
            np.array_equal(self._pixels, other._pixels)
        )

    def __hash__(self) -> int:
        return hash((self._pixels.shape, self._pixels.tobytes()))

    def __repr__(self) -> str:
        return f"Raster({self.width}x{self.height})"


@dataclass(frozen=True)
class Kernel:
    """Square convolution kernel with finite float weights, side 3 or 5."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.weights, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"kernel must be square, got shape {arr.shape}")
        if arr.shape[0] not in (3, 5):
            raise ValueError(f"kernel side must be 3 or 5, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("kernel weights must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)

    @property
    def side(self) -> int:
        return self.weights.shape[0]


def to_gray(img: Raster) -> np.ndarray:
    """Luma grayscale (0.299 R + 0.587 G + 0.114 B), rounded half away, uint8."""
    p = img.pixels.astype(np.float64)
    g = GRAY_WEIGHTS[0] * p[:, :, 0] + GRAY_WEIGHTS[1] * p[:, :, 1] + GRAY_WEIGHTS[2] * p[:, :, 2]
    return np.floor(g + 0.5).astype(np.uint8)  # weights are non-negative, g >= 0


def convolve(img: Raster, kernel: Kernel) -> Raster:
    """Convolve each channel with replicate edge padding; quantize and clamp once."""
    if img.height < 3 or img.width < 3:
        raise ValueError("convolution requires at least a 3x3 raster")
    return Raster(accel.convolve_u8(img.pixels, kernel.weights))


def gamma_lut(g: float) -> np.ndarray:
    """256-entry uint8 lookup of out = 255 * (v / 255) ** (1 / g).

    g > 1 brightens, g < 1 darkens.
    """
    if not (math.isfinite(g) and g > 0):
        raise ValueError(f"gamma must be finite and positive, got {g}")
    lut = np.empty(256, dtype=np.uint8)
    inv = 1.0 / g
    for v in range(256):
        out = 255.0 * math.pow(v / 255.0, inv)
        q = math.floor(out + 0.5)  # out >= 0, so half-away == floor(x + 0.5)
        lut[v] = min(max(q, 0), 255)
    return lut


def gamma_map(img: Raster, g: float) -> Raster:
    """Apply the gamma curve per channel value."""
    return Raster(gamma_lut(g)[img.pixels])


def mean_gray(img: Raster) -> float:
    """Mean of the luma grayscale over all pixels."""
    return float(np.mean(to_gray(img)))


def mean_v(img: Raster) -> float:
    """Mean of the per-pixel channel maximum (HSV value)."""
    return float(np.mean(np.max(img.pixels, axis=2)))


def mean_l(img: Raster) -> float:
    """Mean of the per-pixel (max + min) / 2 (HSL lightness)."""
    p = img.pixels
    return float(np.mean((np.max(p, axis=2).astype(np.float64) + np.min(p, axis=2)) / 2.0))


def rmse(a: Raster, b: Raster) -> float:
    """Root mean squared error over all channel values of two same-shape rasters."""
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"shape mismatch: {a.pixels.shape} vs {b.pixels.shape}")
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.sqrt(np.mean(diff * diff)))


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise PPMError("malformed header: unexpected end of data")
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def read_ppm(data: bytes) -> Raster:
    """Parse binary PPM (P6) bytes into a Raster."""
    if not isinstance(data, (bytes, bytearray)):
        raise PPMError("malformed header: expected bytes")
    data = bytes(data)
    if data[:2] != b"P6":
        raise PPMError("malformed header: not a P6 PPM")
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _next_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise PPMError(f"malformed header: non-integer field {token!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PPMError(f"malformed header: bad dimensions {width}x{height}")
    if maxval != 255:
        raise PPMError(f"unsupported maxval {maxval} (only 255)")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise PPMError("malformed header: missing whitespace before payload")
    pos += 1  # exactly one whitespace byte separates header and payload
    need = width * height * 3
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise PPMError(f"truncated payload: expected {need} bytes, got {len(payload)}")
    return Raster(np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3))


def write_ppm(img: Raster) -> bytes:
    """Serialize to canonical binary PPM: header 'P6\\n{w} {h}\\n255\\n' + payload."""
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def load_ppm(path) -> Raster:
    with open(path, "rb") as fh:
        return read_ppm(fh.read())


def save_ppm(img: Raster, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_ppm(img))
