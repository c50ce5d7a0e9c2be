"""Image-quality features, their quantization into the agent state, and the
real-valued context vector.

Four features: Laplacian variance (blurriness), mean gray vs. a reference
brightness, mean HSV value, mean HSL lightness. Each is bucketed into three
levels; the dense index packs the four buckets into [0, 81).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import accel
from .raster import Raster, mean_gray, mean_l, mean_v, to_gray

STATE_COUNT = 81
FEATURE_DIM = 5


@dataclass(frozen=True)
class AgentState:
    """Quantized observation: blur level, brightness deviation, V and L tertiles."""

    x1: int  # blurriness 0..2, larger is blurrier
    x2: int  # brightness deviation -1, 0, +1
    x3: int  # mean-V tertile 0..2
    x4: int  # mean-L tertile 0..2

    def __post_init__(self) -> None:
        if self.x1 not in (0, 1, 2):
            raise ValueError(f"x1 must be in {{0,1,2}}, got {self.x1}")
        if self.x2 not in (-1, 0, 1):
            raise ValueError(f"x2 must be in {{-1,0,1}}, got {self.x2}")
        if self.x3 not in (0, 1, 2):
            raise ValueError(f"x3 must be in {{0,1,2}}, got {self.x3}")
        if self.x4 not in (0, 1, 2):
            raise ValueError(f"x4 must be in {{0,1,2}}, got {self.x4}")

    @property
    def index(self) -> int:
        """Dense index in [0, 81): x1*27 + (x2+1)*9 + x3*3 + x4."""
        return self.x1 * 27 + (self.x2 + 1) * 9 + self.x3 * 3 + self.x4

    @classmethod
    def from_index(cls, index: int) -> "AgentState":
        if not 0 <= index < STATE_COUNT:
            raise ValueError(f"state index out of range: {index}")
        x1, rest = divmod(index, 27)
        x2p, rest = divmod(rest, 9)
        x3, x4 = divmod(rest, 3)
        return cls(x1, x2p - 1, x3, x4)


@dataclass(frozen=True)
class SenseConfig:
    """Quantization thresholds for sense_state."""

    lap_var_hi: float = 100.0
    lap_var_lo: float = 30.0
    brightness_ref: float = 128.0
    brightness_band: float = 20.0
    tertile_lo: float = 85.0
    tertile_hi: float = 170.0

    def __post_init__(self) -> None:
        if not (self.lap_var_hi > self.lap_var_lo >= 0):
            raise ValueError(
                f"need lap_var_hi > lap_var_lo >= 0, got {self.lap_var_hi}, {self.lap_var_lo}"
            )
        if not 0 <= self.brightness_ref <= 255:
            raise ValueError(f"brightness_ref must be in [0, 255], got {self.brightness_ref}")
        if not self.brightness_band > 0:
            raise ValueError(f"brightness_band must be positive, got {self.brightness_band}")
        if not 0 < self.tertile_lo < self.tertile_hi < 255:
            raise ValueError(
                f"need 0 < tertile_lo < tertile_hi < 255, got {self.tertile_lo}, {self.tertile_hi}"
            )
        for name in ("lap_var_hi", "lap_var_lo", "brightness_ref", "brightness_band"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def laplacian_variance(img: Raster) -> float:
    """Population variance of the un-clamped 3x3 Laplacian response on gray."""
    if img.height < 3 or img.width < 3:
        raise ValueError("laplacian_variance requires at least a 3x3 raster")
    response = accel.laplacian_response(to_gray(img))
    return float(np.var(response.astype(np.float64)))


def _tertile(value: float, lo: float, hi: float) -> int:
    """Bucket 0/1/2; boundary values go to the upper bucket."""
    if value < lo:
        return 0
    if value < hi:
        return 1
    return 2


def sense_state(img: Raster, cfg: SenseConfig = SenseConfig()) -> AgentState:
    """Quantize the four quality features of an image into an AgentState."""
    lapvar = laplacian_variance(img)
    if lapvar >= cfg.lap_var_hi:
        x1 = 0
    elif lapvar >= cfg.lap_var_lo:
        x1 = 1
    else:
        x1 = 2
    gray = mean_gray(img)
    if gray < cfg.brightness_ref - cfg.brightness_band:
        x2 = -1
    elif gray > cfg.brightness_ref + cfg.brightness_band:
        x2 = 1
    else:
        x2 = 0
    x3 = _tertile(mean_v(img), cfg.tertile_lo, cfg.tertile_hi)
    x4 = _tertile(mean_l(img), cfg.tertile_lo, cfg.tertile_hi)
    return AgentState(x1, x2, x3, x4)


def feature_vector(state: AgentState) -> np.ndarray:
    """Context for the linear bandit: [1, x1/2, x2, x3/2, x4/2], all in [-1, 1]."""
    return np.array(
        [1.0, state.x1 / 2.0, float(state.x2), state.x3 / 2.0, state.x4 / 2.0],
        dtype=np.float64,
    )
