"""Pixel kernels with an optional numba JIT path and a pure-numpy fallback.

The JIT path is used when numba imports cleanly and neither
``FILTERGYM_DISABLE_NUMBA`` nor ``NUMBA_DISABLE_JIT`` is set in the
environment. Both paths are bit-exact: they visit kernel taps in the same
(ky, kx) order, do the same float64 multiply-then-add per output element,
and quantize with the same round-half-away-from-zero rule. The JIT is
compiled without fastmath so the accumulation order is not reassociated.

``fallback_*`` names always refer to the numpy implementations regardless
of the selected path; benchmarks and cross-path tests rely on that.
"""

import math
import os

import numpy as np

_DISABLE_FLAGS = ("FILTERGYM_DISABLE_NUMBA", "NUMBA_DISABLE_JIT")


def _jit_requested() -> bool:
    return not any(os.environ.get(flag) for flag in _DISABLE_FLAGS)


HAS_NUMBA = False
if _jit_requested():
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        pass

JIT_ENABLED = HAS_NUMBA


def _convolve_u8_numpy(pixels: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Convolve (H, W, 3) uint8 pixels with a square kernel, replicate padding.

    Returns uint8 with each float64 tap sum rounded half away from zero and
    clamped to [0, 255].
    """
    k = weights.shape[0]
    r = k // 2
    h, w = pixels.shape[0], pixels.shape[1]
    padded = np.pad(pixels, ((r, r), (r, r), (0, 0)), mode="edge").astype(np.float64)
    acc = np.zeros((h, w, 3), dtype=np.float64)
    for ky in range(k):
        for kx in range(k):
            acc += weights[ky, kx] * padded[ky : ky + h, kx : kx + w, :]
    quant = np.where(acc >= 0.0, np.floor(acc + 0.5), np.ceil(acc - 0.5))
    return np.clip(quant, 0.0, 255.0).astype(np.uint8)


def _laplacian_numpy(gray: np.ndarray) -> np.ndarray:
    """4-neighbour Laplacian response of (H, W) uint8 gray, replicate padding.

    Integer arithmetic, so the result is exact (int64).
    """
    h, w = gray.shape
    g = np.pad(gray.astype(np.int64), 1, mode="edge")
    center = g[1 : 1 + h, 1 : 1 + w]
    return (
        g[0:h, 1 : 1 + w]
        + g[2 : 2 + h, 1 : 1 + w]
        + g[1 : 1 + h, 0:w]
        + g[1 : 1 + h, 2 : 2 + w]
        - 4 * center
    )


fallback_convolve_u8 = _convolve_u8_numpy
fallback_laplacian = _laplacian_numpy

if JIT_ENABLED:

    @njit(cache=True)
    def _convolve_u8_jit(pixels, weights):  # pragma: no cover - exercised via wrapper
        k = weights.shape[0]
        r = k // 2
        h = pixels.shape[0]
        w = pixels.shape[1]
        out = np.empty((h, w, 3), dtype=np.uint8)
        for y in range(h):
            for x in range(w):
                for c in range(3):
                    acc = 0.0
                    for ky in range(k):
                        sy = y + ky - r
                        if sy < 0:
                            sy = 0
                        elif sy >= h:
                            sy = h - 1
                        for kx in range(k):
                            sx = x + kx - r
                            if sx < 0:
                                sx = 0
                            elif sx >= w:
                                sx = w - 1
                            acc = acc + weights[ky, kx] * pixels[sy, sx, c]
                    if acc >= 0.0:
                        q = math.floor(acc + 0.5)
                    else:
                        q = math.ceil(acc - 0.5)
                    if q < 0.0:
                        q = 0.0
                    elif q > 255.0:
                        q = 255.0
                    out[y, x, c] = np.uint8(q)
        return out

    @njit(cache=True)
    def _laplacian_jit(gray):  # pragma: no cover - exercised via wrapper
        h = gray.shape[0]
        w = gray.shape[1]
        out = np.empty((h, w), dtype=np.int64)
        for y in range(h):
            up = y - 1 if y > 0 else 0
            down = y + 1 if y + 1 < h else h - 1
            for x in range(w):
                left = x - 1 if x > 0 else 0
                right = x + 1 if x + 1 < w else w - 1
                out[y, x] = (
                    np.int64(gray[up, x])
                    + np.int64(gray[down, x])
                    + np.int64(gray[y, left])
                    + np.int64(gray[y, right])
                    - 4 * np.int64(gray[y, x])
                )
        return out

    def convolve_u8(pixels: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return _convolve_u8_jit(
            np.ascontiguousarray(pixels), np.ascontiguousarray(weights, dtype=np.float64)
        )

    def laplacian_response(gray: np.ndarray) -> np.ndarray:
        return _laplacian_jit(np.ascontiguousarray(gray))

else:
    convolve_u8 = _convolve_u8_numpy
    laplacian_response = _laplacian_numpy
