"""The two learners behind one interface: select(state) -> Action and
update(state, action, reward, next_state) -> None.

* LinUCBAgent — disjoint contextual bandit; each arm keeps its own ridge
  parameters (A = I + sum x xT, b = sum r x) over the 5-dim context.
* QTableAgent — tabular epsilon-greedy Q-learning over 81 states x 6 actions.
  The update is a single expression whose bootstrap term is 0.0 when gamma is
  0 or the transition is terminal, so the discounted and the simplified
  update rules coincide bit-for-bit at gamma = 0.

Snapshots are versioned JSON carrying every learnable parameter plus the rng
state; restore(snapshot()) reproduces subsequent behavior exactly.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .filters import ACTIONS, Action
from .sensing import FEATURE_DIM, STATE_COUNT, AgentState, feature_vector

SNAPSHOT_FORMAT = "filtergym.agent.v1"


class LinUCBAgent:
    """Disjoint LinUCB: score each arm by theta_a.x + alpha*sqrt(x A_a^-1 x)."""

    kind = "linucb"

    def __init__(self, alpha: float = 1.0) -> None:
        if not (math.isfinite(alpha) and alpha >= 0):
            raise ValueError(f"alpha must be finite and >= 0, got {alpha}")
        self.alpha = float(alpha)
        self.A = np.stack([np.eye(FEATURE_DIM) for _ in ACTIONS])
        self.b = np.zeros((len(ACTIONS), FEATURE_DIM))

    def select(self, state: AgentState) -> Action:
        x = feature_vector(state)
        scores = np.empty(len(ACTIONS))
        for arm in range(len(ACTIONS)):
            try:
                theta = np.linalg.solve(self.A[arm], self.b[arm])
                a_inv_x = np.linalg.solve(self.A[arm], x)
            except np.linalg.LinAlgError as exc:  # impossible by invariant
                raise RuntimeError(f"internal fault: singular A for arm {arm}") from exc
            scores[arm] = float(theta @ x) + self.alpha * math.sqrt(float(x @ a_inv_x))
        return Action(int(np.argmax(scores)))  # ties resolve to the lowest ordinal

    def update(
        self, state: AgentState, action: Action, reward: int, next_state: AgentState | None = None
    ) -> None:
        x = feature_vector(state)
        self.A[int(action)] += np.outer(x, x)
        self.b[int(action)] += float(reward) * x

    def snapshot(self) -> bytes:
        payload = {
            "format": SNAPSHOT_FORMAT,
            "kind": self.kind,
            "alpha": self.alpha,
            "A": self.A.tolist(),
            "b": self.b.tolist(),
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("ascii")

    @classmethod
    def restore(cls, payload: dict) -> "LinUCBAgent":
        agent = cls(alpha=payload["alpha"])
        A = np.asarray(payload["A"], dtype=np.float64)
        b = np.asarray(payload["b"], dtype=np.float64)
        if A.shape != agent.A.shape or b.shape != agent.b.shape:
            raise ValueError(f"snapshot parameter shapes {A.shape}/{b.shape} are wrong")
        agent.A, agent.b = A, b
        return agent


class QTableAgent:
    """Tabular Q-learning with epsilon-greedy exploration.

    epsilon decays linearly from `epsilon` to `epsilon_min` over
    `epsilon_decay_steps` selections when a step count is given, else stays
    constant. Selection always consumes one uniform draw, plus one integer
    draw when exploring, so replay is deterministic from the seed.
    """

    kind = "qlearn"

    def __init__(
        self,
        eta: float = 0.002,
        gamma: float = 0.0,
        epsilon: float = 0.1,
        epsilon_min: float = 0.01,
        epsilon_decay_steps: int | None = None,
        seed: int = 0,
    ) -> None:
        if not (math.isfinite(eta) and 0 < eta <= 1):
            raise ValueError(f"eta must be in (0, 1], got {eta}")
        if not (math.isfinite(gamma) and 0 <= gamma < 1):
            raise ValueError(f"gamma must be in [0, 1), got {gamma}")
        if not 0 <= epsilon <= 1:
            raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
        if not 0 <= epsilon_min <= 1:
            raise ValueError(f"epsilon_min must be in [0, 1], got {epsilon_min}")
        if epsilon_decay_steps is not None and epsilon_decay_steps < 1:
            raise ValueError(f"epsilon_decay_steps must be >= 1, got {epsilon_decay_steps}")
        self.eta = float(eta)
        self.gamma = float(gamma)
        self.epsilon = float(epsilon)
        self.epsilon_min = float(epsilon_min)
        self.epsilon_decay_steps = epsilon_decay_steps
        self.seed = int(seed)
        self.q = np.zeros((STATE_COUNT, len(ACTIONS)))
        self.select_count = 0
        self._rng = np.random.Generator(np.random.PCG64(seed))

    def current_epsilon(self) -> float:
        if self.epsilon_decay_steps is None:
            return self.epsilon
        frac = min(1.0, self.select_count / self.epsilon_decay_steps)
        return self.epsilon + (self.epsilon_min - self.epsilon) * frac

    def select(self, state: AgentState) -> Action:
        eps = self.current_epsilon()
        self.select_count += 1
        if self._rng.random() < eps:
            return Action(int(self._rng.integers(0, len(ACTIONS))))
        return Action(int(np.argmax(self.q[state.index])))

    def update(
        self, state: AgentState, action: Action, reward: int, next_state: AgentState | None = None
    ) -> None:
        # Single code path: bootstrap is exactly 0.0 when gamma = 0 or the
        # transition is terminal, which reduces the discounted update to the
        # simplified one bit-for-bit.
        if self.gamma != 0.0 and next_state is not None:
            bootstrap = self.gamma * float(np.max(self.q[next_state.index]))
        else:
            bootstrap = 0.0
        q = self.q[state.index, int(action)]
        self.q[state.index, int(action)] = q + self.eta * (reward + bootstrap - q)

    def snapshot(self) -> bytes:
        payload = {
            "format": SNAPSHOT_FORMAT,
            "kind": self.kind,
            "eta": self.eta,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "epsilon_min": self.epsilon_min,
            "epsilon_decay_steps": self.epsilon_decay_steps,
            "seed": self.seed,
            "select_count": self.select_count,
            "q": self.q.tolist(),
            "rng_state": self._rng.bit_generator.state,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("ascii")

    @classmethod
    def restore(cls, payload: dict) -> "QTableAgent":
        agent = cls(
            eta=payload["eta"],
            gamma=payload["gamma"],
            epsilon=payload["epsilon"],
            epsilon_min=payload["epsilon_min"],
            epsilon_decay_steps=payload["epsilon_decay_steps"],
            seed=payload["seed"],
        )
        q = np.asarray(payload["q"], dtype=np.float64)
        if q.shape != agent.q.shape:
            raise ValueError(f"snapshot Q-table shape {q.shape} is wrong")
        agent.q = q
        agent.select_count = int(payload["select_count"])
        agent._rng.bit_generator.state = payload["rng_state"]
        return agent


_AGENT_TYPES = {LinUCBAgent.kind: LinUCBAgent, QTableAgent.kind: QTableAgent}


def make_agent(kind: str, **params):
    """Construct a fresh agent by kind name ('linucb' or 'qlearn')."""
    try:
        cls = _AGENT_TYPES[kind]
    except KeyError:
        raise ValueError(f"unknown agent kind {kind!r} (expected one of {sorted(_AGENT_TYPES)})") from None
    return cls(**params)


def restore_agent(data: bytes):
    """Rebuild an agent from snapshot bytes; raises ValueError when malformed."""
    try:
        payload = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ValueError(f"malformed snapshot: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != SNAPSHOT_FORMAT:
        raise ValueError(f"malformed snapshot: expected format {SNAPSHOT_FORMAT!r}")
    kind = payload.get("kind")
    if kind not in _AGENT_TYPES:
        raise ValueError(f"malformed snapshot: unknown agent kind {kind!r}")
    try:
        return _AGENT_TYPES[kind].restore(payload)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed snapshot: missing or bad field {exc}") from exc
