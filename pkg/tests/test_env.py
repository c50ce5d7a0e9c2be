"""Environment loop: reward quantization, noise sampling, rounds, log CSV."""

import math

import numpy as np
import pytest

from filtergym.agents import make_agent
from filtergym.detector import SurrogateDetector, build_oracle_table
from filtergym.env import (
    DEFAULT_NOISE_MIX,
    LOG_HEADER,
    MissingOracleEntryError,
    RewardConfig,
    StreamConfig,
    records_from_csv,
    records_to_csv,
    quantize_reward,
    run_round,
    sample_noise,
)
from filtergym.filters import Action, NoiseKind, apply_noise, counter_actions
from filtergym.raster import rmse
from filtergym.sensing import SenseConfig
from filtergym.texgen import TexSpec, generate


class FixedAgent:
    """Always plays one action; records update calls."""

    def __init__(self, action):
        self.action = action
        self.updates = []

    def select(self, state):
        return self.action

    def update(self, state, action, reward, next_state=None):
        self.updates.append((state, action, reward, next_state))


@pytest.fixture(scope="module")
def corpus():
    imgs = generate(TexSpec(count=8))
    det = SurrogateDetector(dict(imgs))
    oracle = build_oracle_table(imgs, det)
    sense = SenseConfig(brightness_ref=oracle.brightness_ref)
    return imgs, det, oracle, sense


class TestRewardConfig:
    def test_defaults(self):
        cfg = RewardConfig()
        assert (cfg.pd, cfg.floor, cfg.cap) == (0.05, -6, 2)

    def test_validation(self):
        with pytest.raises(ValueError):
            RewardConfig(pd=0.0)
        with pytest.raises(ValueError):
            RewardConfig(pd=float("nan"))
        with pytest.raises(ValueError):
            RewardConfig(floor=2, cap=2)


class TestQuantizeReward:
    def test_zero_delta(self):
        assert quantize_reward(0.68, 0.68) == 2

    def test_small_drop(self):
        # oracle: 2 + floor(-0.04/0.05) = 2 + floor(-0.8) = 1
        assert quantize_reward(0.64, 0.68) == 1

    def test_clamped_floor(self):
        # oracle: floor(-11.6) = -12 -> 2 - 12 = -10 -> clamp -6
        assert quantize_reward(0.10, 0.68) == -6

    def test_gain_clamped_to_cap(self):
        assert quantize_reward(0.9, 0.1) == 2

    def test_staircase(self):
        assert quantize_reward(0.68 - 0.051, 0.68) == 0
        assert quantize_reward(0.68 - 0.101, 0.68) == -1

    def test_custom_config(self):
        cfg = RewardConfig(pd=0.1, floor=-2, cap=2)
        assert quantize_reward(0.0, 1.0, cfg) == -2


class TestStreamConfig:
    def test_default_mix(self):
        cfg = StreamConfig()
        assert cfg.noise_mix[NoiseKind.BLUR] == 1.0
        assert cfg.noise_mix[NoiseKind.CLEAN] == 0.0
        assert cfg.shuffle is True and cfg.prefetch_next is False

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            StreamConfig(noise_mix={NoiseKind.BLUR: -1.0})

    def test_rejects_all_zero(self):
        with pytest.raises(ValueError):
            StreamConfig(noise_mix={NoiseKind.BLUR: 0.0})

    def test_rejects_non_enum_keys(self):
        with pytest.raises(ValueError):
            StreamConfig(noise_mix={"blur": 1.0})


class TestSampleNoise:
    def test_single_kind(self):
        rng = np.random.Generator(np.random.PCG64(0))
        mix = {NoiseKind.BLUR: 1.0}
        assert all(sample_noise(mix, rng) is NoiseKind.BLUR for _ in range(100))

    def test_frequencies(self):
        rng = np.random.Generator(np.random.PCG64(123))
        mix = {NoiseKind.BLUR: 1.0, NoiseKind.DARK: 1.0, NoiseKind.WHITE: 1.0}
        counts = {k: 0 for k in NoiseKind}
        for _ in range(30000):
            counts[sample_noise(mix, rng)] += 1
        for kind in (NoiseKind.BLUR, NoiseKind.DARK, NoiseKind.WHITE):
            assert abs(counts[kind] / 30000 - 1 / 3) < 0.02
        assert counts[NoiseKind.CLEAN] == 0

    def test_deterministic(self):
        rng_a = np.random.Generator(np.random.PCG64(7))
        rng_b = np.random.Generator(np.random.PCG64(7))
        a = [sample_noise(DEFAULT_NOISE_MIX, rng_a) for _ in range(200)]
        b = [sample_noise(DEFAULT_NOISE_MIX, rng_b) for _ in range(200)]
        assert a == b


class TestRunRound:
    def test_clean_only_none_agent(self, corpus):
        imgs, det, oracle, sense = corpus
        agent = FixedAgent(Action.NONE)
        stream = StreamConfig(noise_mix={NoiseKind.CLEAN: 1.0})
        rng = np.random.Generator(np.random.PCG64(1))
        records = run_round(
            agent, imgs, oracle, det, round_index=1, stream=stream, sense_cfg=sense, rng=rng
        )
        assert len(records) == len(imgs)
        for r in records:
            assert r.noise is NoiseKind.CLEAN
            assert r.denoise_pr == r.baseline_pr == pytest.approx(r.oracle_pr, abs=1e-12)
            assert r.reward == 2
            assert r.accurate  # NONE counters CLEAN

    def test_dark_strong_whiten_reward_matches_formula(self, corpus):
        imgs, det, oracle, sense = corpus
        name, original = imgs[0]
        agent = FixedAgent(Action.STRONG_WHITEN)
        stream = StreamConfig(noise_mix={NoiseKind.DARK: 1.0}, shuffle=False)
        rng = np.random.Generator(np.random.PCG64(2))
        [record] = run_round(
            agent, [(name, original)], oracle, det, round_index=1, stream=stream,
            sense_cfg=sense, rng=rng,
        )
        from filtergym.filters import apply_action

        restored = apply_action(apply_noise(original, NoiseKind.DARK), Action.STRONG_WHITEN)
        p_true = 0.1 + 0.58 * math.exp(-12.0 * rmse(restored, original) / 255.0)
        assert record.denoise_pr == pytest.approx(p_true, abs=1e-12)
        expected = max(-6, min(2, 2 + math.floor((p_true - 0.68) / 0.05)))
        assert record.reward == expected
        assert record.reward >= 1  # corpus guarantees a recoverable round trip

    def test_prefetch_alignment(self, corpus):
        imgs, det, oracle, sense = corpus
        agent = FixedAgent(Action.NONE)
        stream = StreamConfig(shuffle=False, prefetch_next=True)
        rng = np.random.Generator(np.random.PCG64(3))
        records = run_round(
            agent, imgs[:3], oracle, det, round_index=1, stream=stream, sense_cfg=sense, rng=rng
        )
        assert len(agent.updates) == 3
        assert agent.updates[0][3] == records[1].state
        assert agent.updates[1][3] == records[2].state
        assert agent.updates[2][3] is None  # terminal

    def test_missing_oracle_entry(self, corpus):
        imgs, det, oracle, sense = corpus
        bad = [("ghost.ppm", imgs[0][1])]
        with pytest.raises(MissingOracleEntryError):
            run_round(
                FixedAgent(Action.NONE), bad, oracle, det, round_index=1,
                sense_cfg=sense, rng=np.random.Generator(np.random.PCG64(0)),
            )

    def test_oracle_pr_from_table(self, corpus):
        imgs, det, oracle, sense = corpus
        rng = np.random.Generator(np.random.PCG64(4))
        records = run_round(
            FixedAgent(Action.DEBLUR), imgs, oracle, det, round_index=1,
            sense_cfg=sense, rng=rng,
        )
        for r in records:
            assert r.oracle_pr == oracle.entries[r.image_name]

    def test_accurate_flag_definition(self, corpus):
        imgs, det, oracle, sense = corpus
        rng = np.random.Generator(np.random.PCG64(5))
        records = run_round(
            FixedAgent(Action.DEBLUR), imgs, oracle, det, round_index=1,
            sense_cfg=sense, rng=rng,
        )
        for r in records:
            assert r.accurate == (r.action in counter_actions(r.noise))

    def test_rewards_always_in_range(self, corpus):
        imgs, det, oracle, sense = corpus
        for action in (Action.NONE, Action.STRONG_DARKEN, Action.WEAK_WHITEN):
            rng = np.random.Generator(np.random.PCG64(6))
            records = run_round(
                FixedAgent(action), imgs, oracle, det, round_index=1,
                sense_cfg=sense, rng=rng,
            )
            assert all(-6 <= r.reward <= 2 for r in records)

    def test_replay_determinism(self, corpus):
        imgs, det, oracle, sense = corpus

        def run():
            agent = make_agent("qlearn", seed=9)
            rng = np.random.Generator(np.random.PCG64(11))
            stream = StreamConfig(seed=11)
            out = []
            for rnd in (1, 2):
                out.extend(
                    run_round(
                        agent, imgs, oracle, det, round_index=rnd, start_iter=len(out),
                        stream=stream, sense_cfg=sense, rng=rng,
                    )
                )
            return out

        assert records_to_csv(run()) == records_to_csv(run())


class TestLogCSV:
    def test_roundtrip(self, corpus):
        imgs, det, oracle, sense = corpus
        rng = np.random.Generator(np.random.PCG64(8))
        records = run_round(
            FixedAgent(Action.WEAK_DARKEN), imgs, oracle, det, round_index=3,
            start_iter=16, sense_cfg=sense, rng=rng,
        )
        data = records_to_csv(records)
        assert data.decode().splitlines()[0] == LOG_HEADER
        back = records_from_csv(data)
        assert records_to_csv(back) == data
        assert back[0].round == 3 and back[0].iter == 17

    def test_bad_header(self):
        with pytest.raises(ValueError, match="line 1"):
            records_from_csv(b"nope\n")

    def test_bad_field_count(self):
        data = (LOG_HEADER + "\n1,2,3\n").encode()
        with pytest.raises(ValueError, match="line 2"):
            records_from_csv(data)

    def test_bad_flag(self):
        row = "1,1,a.ppm,blur,0,none,0,0.5,0.5,0.68,yes"
        with pytest.raises(ValueError, match="line 2"):
            records_from_csv((LOG_HEADER + "\n" + row + "\n").encode())

    def test_bad_action_name(self):
        row = "1,1,a.ppm,blur,0,explode,0,0.5,0.5,0.68,1"
        with pytest.raises(ValueError, match="line 2"):
            records_from_csv((LOG_HEADER + "\n" + row + "\n").encode())
