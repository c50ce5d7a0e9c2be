"""Environment loop: noise injection, sensing, action application, detector
scoring and reward quantization, producing the (s, a, r, s') stream.

Agent state is not carried across images; when prefetch_next is on, s' is the
sensed state of the following noisy image, otherwise the transition is
terminal and the bootstrap value is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .detector import DetectorError, OracleTable, correct_prob
from .filters import (
    DEFAULT_PARAMS,
    Action,
    FilterParams,
    NoiseKind,
    apply_action,
    apply_noise,
    counter_actions,
)
from .raster import Raster
from .sensing import AgentState, SenseConfig, sense_state

# Fixed category order for weight vectors and cumulative sampling.
MIX_ORDER = (NoiseKind.BLUR, NoiseKind.DARK, NoiseKind.WHITE, NoiseKind.CLEAN)

DEFAULT_NOISE_MIX: dict[NoiseKind, float] = {
    NoiseKind.BLUR: 1.0,
    NoiseKind.DARK: 1.0,
    NoiseKind.WHITE: 1.0,
    NoiseKind.CLEAN: 0.0,
}

LOG_HEADER = "round,iter,image,noise,state_index,action,reward,baseline_pr,denoise_pr,oracle_pr,accurate"


class MissingOracleEntryError(KeyError):
    """An image in the round has no oracle-table entry."""


@dataclass(frozen=True)
class RewardConfig:
    """Quantized reward ladder: clamp(2 + floor(delta / pd), floor, cap)."""

    pd: float = 0.05
    floor: int = -6
    cap: int = 2

    def __post_init__(self) -> None:
        if not (math.isfinite(self.pd) and self.pd > 0):
            raise ValueError(f"pd must be finite and positive, got {self.pd}")
        if not self.floor < self.cap:
            raise ValueError(f"need floor < cap, got {self.floor}, {self.cap}")


@dataclass(frozen=True)
class StreamConfig:
    """Noise mix and ingestion order for a run."""

    noise_mix: Mapping[NoiseKind, float] = None  # type: ignore[assignment]
    shuffle: bool = True
    seed: int = 0
    prefetch_next: bool = False

    def __post_init__(self) -> None:
        mix = dict(DEFAULT_NOISE_MIX if self.noise_mix is None else self.noise_mix)
        for kind in mix:
            if not isinstance(kind, NoiseKind):
                raise ValueError(f"noise_mix key must be a NoiseKind, got {kind!r}")
        weights = [float(mix.get(kind, 0.0)) for kind in MIX_ORDER]
        if any(not math.isfinite(w) or w < 0 for w in weights):
            raise ValueError(f"noise weights must be non-negative and finite, got {mix}")
        if sum(weights) <= 0:
            raise ValueError("noise weights must not all be zero")
        object.__setattr__(self, "noise_mix", {k: float(mix.get(k, 0.0)) for k in MIX_ORDER})


@dataclass
class IterationRecord:
    """One environment step, as logged."""

    round: int
    iter: int
    image_name: str
    noise: NoiseKind
    state: AgentState
    action: Action
    reward: int
    baseline_pr: float
    denoise_pr: float
    oracle_pr: float
    accurate: bool

    def to_csv_row(self) -> str:
        return ",".join(
            (
                str(self.round),
                str(self.iter),
                self.image_name,
                self.noise.value,
                str(self.state.index),
                self.action.name.lower(),
                str(self.reward),
                repr(self.baseline_pr),
                repr(self.denoise_pr),
                repr(self.oracle_pr),
                "1" if self.accurate else "0",
            )
        )


_ACTION_BY_NAME = {a.name.lower(): a for a in Action}
_NOISE_BY_NAME = {k.value: k for k in NoiseKind}


def records_to_csv(records: Sequence[IterationRecord]) -> bytes:
    lines = [LOG_HEADER]
    lines.extend(r.to_csv_row() for r in records)
    return ("\n".join(lines) + "\n").encode("utf-8")


def records_from_csv(data: bytes) -> list[IterationRecord]:
    """Parse an iteration log; raises ValueError naming the offending line."""
    lines = data.decode("utf-8").splitlines()
    if not lines or lines[0] != LOG_HEADER:
        raise ValueError(f"line 1: expected header {LOG_HEADER!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 11:
            raise ValueError(f"line {lineno}: expected 11 fields, got {len(parts)}")
        try:
            records.append(
                IterationRecord(
                    round=int(parts[0]),
                    iter=int(parts[1]),
                    image_name=parts[2],
                    noise=_NOISE_BY_NAME[parts[3]],
                    state=AgentState.from_index(int(parts[4])),
                    action=_ACTION_BY_NAME[parts[5]],
                    reward=int(parts[6]),
                    baseline_pr=float(parts[7]),
                    denoise_pr=float(parts[8]),
                    oracle_pr=float(parts[9]),
                    accurate=_parse_flag(parts[10], lineno),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return records


def _parse_flag(token: str, lineno: int) -> bool:
    if token == "1":
        return True
    if token == "0":
        return False
    raise ValueError(f"accurate flag must be 0 or 1, got {token!r}")


def quantize_reward(denoise_pr: float, oracle_pr: float, cfg: RewardConfig = RewardConfig()) -> int:
    """clamp(2 + floor((denoise_pr - oracle_pr) / pd), floor, cap)."""
    delta = denoise_pr - oracle_pr
    raw = 2 + math.floor(delta / cfg.pd)
    return max(cfg.floor, min(cfg.cap, raw))


def sample_noise(mix: Mapping[NoiseKind, float], rng: np.random.Generator) -> NoiseKind:
    """Draw a noise kind proportional to its weight, one uniform draw per call."""
    weights = [float(mix.get(kind, 0.0)) for kind in MIX_ORDER]
    total = sum(weights)
    if total <= 0 or any(w < 0 for w in weights):
        raise ValueError(f"invalid noise mix {mix!r}")
    u = rng.random() * total
    acc = 0.0
    for kind, w in zip(MIX_ORDER, weights):
        acc += w
        if u < acc:
            return kind
    return MIX_ORDER[-1]  # u == total edge case from rounding


def run_round(
    agent,
    originals: Sequence[tuple[str, Raster]],
    oracle: OracleTable,
    detector,
    *,
    round_index: int,
    start_iter: int = 0,
    stream: StreamConfig = StreamConfig(),
    reward_cfg: RewardConfig = RewardConfig(),
    sense_cfg: SenseConfig = SenseConfig(),
    params: FilterParams = DEFAULT_PARAMS,
    rng: np.random.Generator,
    lenient: bool = False,
) -> list[IterationRecord]:
    """Run one round over the originals; returns one record per image.

    Sequence per image: sample noise, corrupt, sense s, score the noisy
    baseline, select a, filter, score the filtered image, quantize the reward
    against the oracle entry, optionally prefetch s' from the next noisy
    image, update the agent, append the record.
    """
    items = list(originals)
    for name, _ in items:
        if name not in oracle.entries:
            raise MissingOracleEntryError(name)
    n = len(items)
    order = rng.permutation(n) if stream.shuffle else np.arange(n)
    kinds = [sample_noise(stream.noise_mix, rng) for _ in range(n)]

    def corrupt(pos: int) -> tuple[str, Raster, Raster, AgentState]:
        name, original = items[int(order[pos])]
        noisy = apply_noise(original, kinds[pos], params)
        return name, original, noisy, sense_state(noisy, sense_cfg)

    records: list[IterationRecord] = []
    pending: tuple[str, Raster, Raster, AgentState] | None = None
    for pos in range(n):
        name, original, noisy, state = pending if pending is not None else corrupt(pos)
        pending = None
        try:
            true_class = detector.true_class(name, original)
            baseline_pr = correct_prob(detector.infer(noisy, name), true_class)
            action = agent.select(state)
            filtered = apply_action(noisy, action, params)
            denoise_pr = correct_prob(detector.infer(filtered, name), true_class)
        except DetectorError as exc:
            raise type(exc)(f"iteration {start_iter + pos + 1}: {exc}") from exc
        reward = quantize_reward(denoise_pr, oracle.entries[name], reward_cfg)
        next_state: AgentState | None = None
        if stream.prefetch_next and pos + 1 < n:
            pending = corrupt(pos + 1)
            next_state = pending[3]
        agent.update(state, action, reward, next_state)
        records.append(
            IterationRecord(
                round=round_index,
                iter=start_iter + pos + 1,
                image_name=name,
                noise=kinds[pos],
                state=state,
                action=action,
                reward=reward,
                baseline_pr=baseline_pr,
                denoise_pr=denoise_pr,
                oracle_pr=oracle.entries[name],
                accurate=action in counter_actions(kinds[pos], lenient),
            )
        )
    return records
