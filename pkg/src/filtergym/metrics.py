"""Derived series from iteration logs: prefix means, per-round summaries and
cross-round 95% confidence bands, exported as CSV.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .env import IterationRecord
from .filters import counter_actions

SUMMARY_HEADER = "round,mean_reward,accuracy,gap_baseline,gap_oracle"
SERIES_HEADER = "iter,running_reward,running_accuracy"


@dataclass(frozen=True)
class RunningSeries:
    """Prefix means: point k holds (iteration index, mean of first k values)."""

    points: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        indices = [i for i, _ in self.points]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("running-series indices must be strictly increasing")

    def value_at(self, position: int) -> float:
        """Running mean after `position` observations (1-based)."""
        return self.points[position - 1][1]


@dataclass(frozen=True)
class RoundSummary:
    round: int
    mean_reward: float
    accuracy: float
    mean_gap_baseline: float
    mean_gap_oracle: float

    def __post_init__(self) -> None:
        if not 0 <= self.accuracy <= 1:
            raise ValueError(f"accuracy must be in [0, 1], got {self.accuracy}")
        for name in ("mean_reward", "mean_gap_baseline", "mean_gap_oracle"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class CIBand:
    """Normal-approximation 95% band: half_width = 1.96 * s / sqrt(n), ddof 1."""

    mean: float
    half_width: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")
        if self.half_width < 0:
            raise ValueError(f"half_width must be >= 0, got {self.half_width}")


def running_mean(values: Sequence[float], indices: Sequence[int] | None = None) -> RunningSeries:
    """Prefix means of a value sequence; empty input gives an empty series."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        return RunningSeries(points=())
    means = np.cumsum(arr) / np.arange(1, arr.size + 1)
    idx = list(indices) if indices is not None else list(range(1, arr.size + 1))
    if len(idx) != arr.size:
        raise ValueError(f"{len(idx)} indices for {arr.size} values")
    return RunningSeries(points=tuple(zip(idx, (float(m) for m in means))))


def accuracy_flags(records: Sequence[IterationRecord], lenient: bool = False) -> list[bool]:
    """Accurate-action flags; strict uses the logged flag, lenient recomputes."""
    if not lenient:
        return [r.accurate for r in records]
    return [r.action in counter_actions(r.noise, lenient=True) for r in records]


def summarize_round(records: Sequence[IterationRecord], lenient: bool = False) -> RoundSummary:
    """Per-round means; records must be non-empty and share one round id."""
    if not records:
        raise ValueError("cannot summarize an empty round")
    rounds = {r.round for r in records}
    if len(rounds) != 1:
        raise ValueError(f"records span multiple rounds: {sorted(rounds)}")
    flags = accuracy_flags(records, lenient)
    return RoundSummary(
        round=records[0].round,
        mean_reward=float(np.mean([r.reward for r in records])),
        accuracy=sum(flags) / len(records),
        mean_gap_baseline=float(np.mean([r.denoise_pr - r.baseline_pr for r in records])),
        mean_gap_oracle=float(np.mean([r.denoise_pr - r.oracle_pr for r in records])),
    )


def ci_across_rounds(values: Sequence[float]) -> CIBand:
    """95% normal band of one value per round; degenerate (width 0) when n = 1."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size < 1:
        raise ValueError("need at least one value")
    if arr.size == 1:
        return CIBand(mean=float(arr[0]), half_width=0.0, n=1)
    s = float(np.std(arr, ddof=1))
    return CIBand(
        mean=float(np.mean(arr)),
        half_width=1.96 * s / float(np.sqrt(arr.size)),
        n=int(arr.size),
    )


def split_rounds(records: Sequence[IterationRecord]) -> list[list[IterationRecord]]:
    """Group records by round id, in first-appearance order."""
    groups: dict[int, list[IterationRecord]] = {}
    for r in records:
        groups.setdefault(r.round, []).append(r)
    return list(groups.values())


def export_summary(records: Sequence[IterationRecord], lenient: bool = False) -> bytes:
    """Summary CSV: one row per round, then a `ci95` row of half-widths."""
    lines = [SUMMARY_HEADER]
    summaries = [summarize_round(group, lenient) for group in split_rounds(records)]
    summaries.sort(key=lambda s: s.round)
    for s in summaries:
        lines.append(
            f"{s.round},{s.mean_reward!r},{s.accuracy!r},"
            f"{s.mean_gap_baseline!r},{s.mean_gap_oracle!r}"
        )
    if summaries:
        bands = [
            ci_across_rounds([getattr(s, name) for s in summaries]).half_width
            for name in ("mean_reward", "accuracy", "mean_gap_baseline", "mean_gap_oracle")
        ]
        lines.append("ci95," + ",".join(repr(b) for b in bands))
    return ("\n".join(lines) + "\n").encode("utf-8")


def export_series(records: Sequence[IterationRecord], lenient: bool = False) -> bytes:
    """Per-iteration series CSV: running mean reward and accurate-action rate."""
    lines = [SERIES_HEADER]
    rewards = running_mean([r.reward for r in records], [r.iter for r in records])
    flags = accuracy_flags(records, lenient)
    accuracy = running_mean([1.0 if f else 0.0 for f in flags], [r.iter for r in records])
    for (it, rew), (_, acc) in zip(rewards.points, accuracy.points):
        lines.append(f"{it},{rew!r},{acc!r}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def export_comparison(
    a: Sequence[IterationRecord], b: Sequence[IterationRecord], lenient: bool = False
) -> bytes:
    """Side-by-side series of two runs, inner-joined on iteration index."""
    header = "iter,running_reward_1,running_accuracy_1,running_reward_2,running_accuracy_2"
    lines = [header]

    def series(records):
        rewards = running_mean([r.reward for r in records], [r.iter for r in records])
        flags = accuracy_flags(records, lenient)
        accuracy = running_mean([1.0 if f else 0.0 for f in flags], [r.iter for r in records])
        return {it: (rew, acc) for (it, rew), (_, acc) in zip(rewards.points, accuracy.points)}

    sa, sb = series(a), series(b)
    for it in sorted(set(sa) & set(sb)):
        ra, aa = sa[it]
        rb, ab = sb[it]
        lines.append(f"{it},{ra!r},{aa!r},{rb!r},{ab!r}")
    return ("\n".join(lines) + "\n").encode("utf-8")
