"""Learners: LinUCB ridge algebra, Q-table updates, snapshots, make_agent."""

import numpy as np
import pytest

from filtergym.agents import (
    SNAPSHOT_FORMAT,
    LinUCBAgent,
    QTableAgent,
    make_agent,
    restore_agent,
)
from filtergym.filters import ACTIONS, Action
from filtergym.sensing import FEATURE_DIM, STATE_COUNT, AgentState, feature_vector


def random_state(rng):
    return AgentState(
        int(rng.integers(0, 3)), int(rng.integers(-1, 2)),
        int(rng.integers(0, 3)), int(rng.integers(0, 3)),
    )


STATE_A = AgentState(1, 0, 2, 1)
STATE_B = AgentState(0, -1, 1, 0)


class TestLinUCBSelect:
    def test_fresh_agent_ties_to_none(self):
        # All arms score identically on a fresh agent; argmax takes ordinal 0.
        assert LinUCBAgent().select(STATE_A) is Action.NONE

    def test_one_update_scores_match_hand_ridge(self):
        agent = LinUCBAgent(alpha=1.0)
        x = feature_vector(STATE_A)
        agent.update(STATE_A, Action.DEBLUR, 2)
        A = np.eye(FEATURE_DIM) + np.outer(x, x)
        b = 2.0 * x
        theta = np.linalg.inv(A) @ b
        expected = float(theta @ x) + np.sqrt(float(x @ np.linalg.inv(A) @ x))
        # Recompute the arm's score exactly as select() does.
        got = float(np.linalg.solve(agent.A[Action.DEBLUR], agent.b[Action.DEBLUR]) @ x)
        got += agent.alpha * np.sqrt(float(x @ np.linalg.solve(agent.A[Action.DEBLUR], x)))
        assert got == pytest.approx(expected, abs=1e-12)

    def test_positive_reward_wins_arm(self):
        agent = LinUCBAgent(alpha=0.5)
        for _ in range(50):
            agent.update(STATE_A, Action.DEBLUR, 2)
        assert agent.select(STATE_A) is Action.DEBLUR

    def test_zero_reward_leaves_b_zero(self):
        agent = LinUCBAgent()
        agent.update(STATE_A, Action.WEAK_WHITEN, 0)
        assert np.all(agent.b[Action.WEAK_WHITEN] == 0.0)
        x = feature_vector(STATE_A)
        assert np.array_equal(agent.A[Action.WEAK_WHITEN], np.eye(FEATURE_DIM) + np.outer(x, x))

    def test_select_does_not_mutate(self):
        agent = LinUCBAgent()
        agent.update(STATE_A, Action.DEBLUR, 1)
        A0, b0 = agent.A.copy(), agent.b.copy()
        for _ in range(5):
            agent.select(STATE_B)
        assert np.array_equal(agent.A, A0) and np.array_equal(agent.b, b0)

    def test_arms_are_disjoint(self):
        agent = LinUCBAgent()
        agent.update(STATE_A, Action.STRONG_WHITEN, 2)
        eye = np.eye(FEATURE_DIM)
        for arm in ACTIONS:
            if arm is Action.STRONG_WHITEN:
                continue
            assert np.array_equal(agent.A[arm], eye)
            assert np.all(agent.b[arm] == 0.0)

    def test_alpha_zero_is_greedy(self):
        agent = LinUCBAgent(alpha=0.0)
        agent.update(STATE_A, Action.WEAK_DARKEN, 2)
        agent.update(STATE_A, Action.STRONG_DARKEN, 1)
        assert agent.select(STATE_A) is Action.WEAK_DARKEN

    def test_alpha_validation(self):
        for bad in (-0.1, float("nan"), float("inf")):
            with pytest.raises(ValueError):
                LinUCBAgent(alpha=bad)


class TestLinUCBRidgeEquivalence:
    def test_theta_matches_closed_form(self):
        # After N (x, r) updates on one arm, theta must equal the ridge
        # regression solution (I + X^T X)^-1 X^T r to high precision.
        rng = np.random.Generator(np.random.PCG64(42))
        agent = LinUCBAgent()
        xs, rs = [], []
        for _ in range(400):
            s = random_state(rng)
            r = int(rng.integers(-6, 3))
            agent.update(s, Action.DEBLUR, r)
            xs.append(feature_vector(s))
            rs.append(float(r))
        X = np.array(xs)
        r = np.array(rs)
        theta_closed = np.linalg.solve(np.eye(FEATURE_DIM) + X.T @ X, X.T @ r)
        theta_agent = np.linalg.solve(agent.A[Action.DEBLUR], agent.b[Action.DEBLUR])
        assert np.max(np.abs(theta_agent - theta_closed)) < 1e-9


class TestQTableSelect:
    def test_greedy_all_zero_ties_to_none(self):
        agent = QTableAgent(epsilon=0.0)
        assert agent.select(STATE_A) is Action.NONE

    def test_greedy_follows_table(self):
        agent = QTableAgent(epsilon=0.0)
        agent.q[STATE_A.index, Action.DEBLUR] = 1.0
        assert agent.select(STATE_A) is Action.DEBLUR
        assert agent.select(STATE_B) is Action.NONE

    def test_full_exploration_uniform(self):
        agent = QTableAgent(epsilon=1.0, epsilon_min=1.0, seed=5)
        counts = np.zeros(len(ACTIONS))
        n = 60000
        for _ in range(n):
            counts[agent.select(STATE_A)] += 1
        assert np.all(np.abs(counts / n - 1 / 6) < 0.02)

    def test_epsilon_decay_schedule(self):
        agent = QTableAgent(epsilon=0.5, epsilon_min=0.1, epsilon_decay_steps=4)
        seen = []
        for _ in range(6):
            seen.append(agent.current_epsilon())
            agent.select(STATE_A)
        assert seen == pytest.approx([0.5, 0.4, 0.3, 0.2, 0.1, 0.1])

    def test_constant_epsilon_without_steps(self):
        agent = QTableAgent(epsilon=0.25)
        for _ in range(100):
            agent.select(STATE_A)
        assert agent.current_epsilon() == 0.25

    def test_validation(self):
        with pytest.raises(ValueError):
            QTableAgent(eta=0.0)
        with pytest.raises(ValueError):
            QTableAgent(eta=1.5)
        with pytest.raises(ValueError):
            QTableAgent(gamma=1.0)
        with pytest.raises(ValueError):
            QTableAgent(gamma=-0.1)
        with pytest.raises(ValueError):
            QTableAgent(epsilon=1.0001)
        with pytest.raises(ValueError):
            QTableAgent(epsilon_min=-0.1)
        with pytest.raises(ValueError):
            QTableAgent(epsilon_decay_steps=0)


class TestQTableUpdate:
    def test_single_step_exact(self):
        agent = QTableAgent(eta=0.002)
        agent.update(STATE_A, Action.DEBLUR, 2)
        assert agent.q[STATE_A.index, Action.DEBLUR] == 0.002 * 2
        assert np.count_nonzero(agent.q) == 1

    def test_discounted_bootstrap(self):
        agent = QTableAgent(eta=0.5, gamma=0.9)
        agent.q[STATE_B.index, Action.STRONG_WHITEN] = 1.0
        agent.update(STATE_A, Action.NONE, 1, next_state=STATE_B)
        # q <- 0 + 0.5 * (1 + 0.9 * 1 - 0) = 0.95
        assert agent.q[STATE_A.index, Action.NONE] == pytest.approx(0.95)

    def test_terminal_skips_bootstrap(self):
        agent = QTableAgent(eta=0.5, gamma=0.9)
        agent.q[STATE_B.index, Action.STRONG_WHITEN] = 1.0
        agent.update(STATE_A, Action.NONE, 1, next_state=None)
        assert agent.q[STATE_A.index, Action.NONE] == 0.5

    def test_gamma_zero_matches_simplified_rule(self):
        # With gamma = 0 the discounted update must be bit-identical to
        # q + eta * (r - q) regardless of next_state.
        rng = np.random.Generator(np.random.PCG64(3))
        agent = QTableAgent(eta=0.002, gamma=0.0)
        shadow = np.zeros_like(agent.q)
        for _ in range(5000):
            s, ns = random_state(rng), random_state(rng)
            a = int(rng.integers(0, 6))
            r = int(rng.integers(-6, 3))
            agent.update(s, Action(a), r, next_state=ns)
            q = shadow[s.index, a]
            shadow[s.index, a] = q + 0.002 * (r - q)
        assert np.array_equal(agent.q, shadow)

    def test_converges_to_reward_mean(self):
        rng = np.random.Generator(np.random.PCG64(7))
        agent = QTableAgent(eta=0.01)
        rewards = rng.choice([0, 1, 2], size=10000, p=[0.2, 0.5, 0.3])
        for r in rewards:
            agent.update(STATE_A, Action.NONE, int(r))
        assert abs(agent.q[STATE_A.index, Action.NONE] - 1.1) < 0.15

    def test_values_stay_in_reward_range(self):
        rng = np.random.Generator(np.random.PCG64(9))
        agent = QTableAgent(eta=0.3)
        for _ in range(2000):
            agent.update(random_state(rng), Action(int(rng.integers(0, 6))), int(rng.integers(-6, 3)))
        assert np.all(agent.q >= -6.0) and np.all(agent.q <= 2.0)


class TestSnapshots:
    def test_fresh_linucb_roundtrip(self):
        agent = LinUCBAgent(alpha=1.7)
        clone = restore_agent(agent.snapshot())
        assert isinstance(clone, LinUCBAgent)
        assert clone.alpha == 1.7
        assert clone.snapshot() == agent.snapshot()

    def test_fresh_qtable_roundtrip(self):
        agent = QTableAgent(eta=0.01, gamma=0.5, epsilon=0.2, epsilon_decay_steps=10, seed=3)
        clone = restore_agent(agent.snapshot())
        assert isinstance(clone, QTableAgent)
        assert clone.snapshot() == agent.snapshot()

    @pytest.mark.parametrize("kind", ["linucb", "qlearn"])
    def test_midrun_fork_streams_identically(self, kind):
        rng = np.random.Generator(np.random.PCG64(21))
        agent = make_agent(kind) if kind == "linucb" else make_agent(kind, epsilon=0.5, seed=4)
        trace = [(random_state(rng), int(rng.integers(-6, 3))) for _ in range(300)]
        for s, r in trace[:150]:
            a = agent.select(s)
            agent.update(s, a, r)
        clone = restore_agent(agent.snapshot())
        tail_a, tail_b = [], []
        for s, r in trace[150:]:
            a1, a2 = agent.select(s), clone.select(s)
            tail_a.append(a1)
            tail_b.append(a2)
            agent.update(s, a1, r)
            clone.update(s, a2, r)
        assert tail_a == tail_b
        assert agent.snapshot() == clone.snapshot()

    def test_truncated_bytes(self):
        with pytest.raises(ValueError, match="malformed"):
            restore_agent(LinUCBAgent().snapshot()[:-10])

    def test_wrong_format_tag(self):
        import json

        payload = json.loads(QTableAgent().snapshot())
        payload["format"] = "filtergym.agent.v0"
        with pytest.raises(ValueError, match="format"):
            restore_agent(json.dumps(payload).encode())

    def test_unknown_kind(self):
        import json

        payload = json.loads(QTableAgent().snapshot())
        payload["kind"] = "sarsa"
        with pytest.raises(ValueError, match="kind"):
            restore_agent(json.dumps(payload).encode())

    def test_missing_field(self):
        import json

        payload = json.loads(QTableAgent().snapshot())
        del payload["q"]
        with pytest.raises(ValueError, match="malformed"):
            restore_agent(json.dumps(payload).encode())

    def test_format_constant(self):
        assert SNAPSHOT_FORMAT == "filtergym.agent.v1"
        import json

        assert json.loads(LinUCBAgent().snapshot())["format"] == SNAPSHOT_FORMAT


class TestMakeAgent:
    def test_kinds(self):
        assert isinstance(make_agent("linucb"), LinUCBAgent)
        assert isinstance(make_agent("qlearn"), QTableAgent)

    def test_params_forwarded(self):
        assert make_agent("linucb", alpha=2.5).alpha == 2.5
        assert make_agent("qlearn", eta=0.1).eta == 0.1

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown agent kind"):
            make_agent("dqn")


class TestBanditSanity:
    """Both learners should master a stationary deterministic bandit."""

    PAYOFF = {Action.DEBLUR: 2, Action.NONE: 0}

    def run(self, agent):
        rng = np.random.Generator(np.random.PCG64(31))
        hits = []
        for _ in range(1000):
            a = agent.select(STATE_A)
            agent.update(STATE_A, a, self.PAYOFF.get(a, -2))
            hits.append(a is Action.DEBLUR)
        return np.mean(hits[-100:])

    def test_linucb(self):
        assert self.run(LinUCBAgent(alpha=0.2)) >= 0.95

    def test_qtable(self):
        agent = QTableAgent(eta=0.05, epsilon=0.2, epsilon_min=0.0, epsilon_decay_steps=500, seed=2)
        assert self.run(agent) >= 0.95
