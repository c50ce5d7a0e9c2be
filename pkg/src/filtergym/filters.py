"""Noise corruptions and the de-noise action bank.

Gamma convention throughout: out = 255 * (in / 255) ** (1 / g), so g > 1
brightens and g < 1 darkens. The white noise (over-exposure) uses g = 3.5,
the dark noise (under-exposure) g = 0.2; the strong counter-filters are
their exact reciprocals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from .raster import Kernel, Raster, convolve, gamma_map


class NoiseKind(Enum):
    BLUR = "blur"
    DARK = "dark"
    WHITE = "white"
    CLEAN = "clean"


class Action(IntEnum):
    """De-noise actions; ordinal order is the tie-break order everywhere."""

    NONE = 0
    DEBLUR = 1
    WEAK_WHITEN = 2
    STRONG_WHITEN = 3
    WEAK_DARKEN = 4
    STRONG_DARKEN = 5


ACTIONS = tuple(Action)


@dataclass(frozen=True)
class FilterParams:
    """Pinned constants for the noise and action filters."""

    blur_side: int = 5
    white_gamma: float = 3.5
    dark_gamma: float = 0.2
    sharpen_center: float = 9.0
    sharpen_off: float = -1.0
    weak_whiten_gamma: float = 2.0
    strong_whiten_gamma: float = 5.0
    weak_darken_gamma: float = 0.5
    strong_darken_gamma: float = 1.0 / 3.5

    def __post_init__(self) -> None:
        if self.blur_side not in (3, 5):
            raise ValueError(f"blur_side must be 3 or 5, got {self.blur_side}")
        for field in (
            "white_gamma",
            "dark_gamma",
            "weak_whiten_gamma",
            "strong_whiten_gamma",
            "weak_darken_gamma",
            "strong_darken_gamma",
        ):
            v = getattr(self, field)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{field} must be finite and positive, got {v}")


DEFAULT_PARAMS = FilterParams()


def box_kernel(side: int) -> Kernel:
    """Uniform mean kernel, weights 1 / side**2."""
    return Kernel(np.full((side, side), 1.0 / (side * side)))


def sharpen_kernel(center: float = 9.0, off: float = -1.0) -> Kernel:
    """3x3 sharpen: given center weight, all eight neighbours at `off`."""
    w = np.full((3, 3), off, dtype=np.float64)
    w[1, 1] = center
    return Kernel(w)


def apply_noise(img: Raster, kind: NoiseKind, params: FilterParams = DEFAULT_PARAMS) -> Raster:
    """Corrupt an image: box blur, under-exposure, over-exposure, or no-op."""
    if kind is NoiseKind.BLUR:
        return convolve(img, box_kernel(params.blur_side))
    if kind is NoiseKind.DARK:
        return gamma_map(img, params.dark_gamma)
    if kind is NoiseKind.WHITE:
        return gamma_map(img, params.white_gamma)
    if kind is NoiseKind.CLEAN:
        return img
    raise ValueError(f"unknown noise kind {kind!r}")


def apply_action(img: Raster, action: Action, params: FilterParams = DEFAULT_PARAMS) -> Raster:
    """Apply a de-noise action to an observed image."""
    if action is Action.NONE:
        return img
    if action is Action.DEBLUR:
        return convolve(img, sharpen_kernel(params.sharpen_center, params.sharpen_off))
    if action is Action.WEAK_WHITEN:
        return gamma_map(img, params.weak_whiten_gamma)
    if action is Action.STRONG_WHITEN:
        return gamma_map(img, params.strong_whiten_gamma)
    if action is Action.WEAK_DARKEN:
        return gamma_map(img, params.weak_darken_gamma)
    if action is Action.STRONG_DARKEN:
        return gamma_map(img, params.strong_darken_gamma)
    raise ValueError(f"unknown action {action!r}")


def counter_actions(kind: NoiseKind, lenient: bool = False) -> frozenset[Action]:
    """Actions counted as correct for a noise kind.

    Strict: the single matched counter-filter (NONE for clean frames).
    Lenient: additionally accept the weak variant of the matched direction.
    """
    if kind is NoiseKind.BLUR:
        return frozenset({Action.DEBLUR})
    if kind is NoiseKind.DARK:
        strict = {Action.STRONG_WHITEN}
        if lenient:
            strict.add(Action.WEAK_WHITEN)
        return frozenset(strict)
    if kind is NoiseKind.WHITE:
        strict = {Action.STRONG_DARKEN}
        if lenient:
            strict.add(Action.WEAK_DARKEN)
        return frozenset(strict)
    if kind is NoiseKind.CLEAN:
        return frozenset({Action.NONE})
    raise ValueError(f"unknown noise kind {kind!r}")
