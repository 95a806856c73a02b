"""Double-DQN agent: epsilon-greedy acting, uniform replay, double-Q targets.

The online network picks the bootstrap action, the target network evaluates
it; the target network is refreshed by copying every ``target_sync_interval``
applied updates. One agent instance belongs to one training loop; all of its
randomness (init, exploration, replay sampling) flows through a single seeded
generator so runs replay deterministically.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import nn

EPSILON_DECAYS = ("linear_per_episode", "exponential_per_step")


class Transition(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """FIFO store of transitions; insertion beyond capacity evicts the oldest."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._storage: deque[Transition] = deque(maxlen=capacity)

    def push(self, t: Transition) -> None:
        self._storage.append(t)

    def __len__(self) -> int:
        return len(self._storage)

    def __getitem__(self, i: int) -> Transition:
        return self._storage[i]


def sample_batch(buffer: ReplayBuffer, k: int, rng: np.random.Generator) -> list[Transition]:
    """k transitions drawn uniformly with replacement."""
    if k > len(buffer):
        raise ValueError(f"insufficient experience: requested {k}, buffer holds {len(buffer)}")
    indices = rng.integers(0, len(buffer), size=k)
    return [buffer[int(i)] for i in indices]


@dataclass(frozen=True)
class EpsilonSchedule:
    """Monotone non-increasing exploration rate.

    linear_per_episode interpolates from ``start`` at t=0 to ``end`` at
    t=horizon-1 (so a horizon-length run exhibits both endpoints exactly);
    exponential_per_step decays geometrically to reach ``end`` at the same
    point. Past the horizon the value stays at ``end``.
    """

    start: float = 0.93
    end: float = 0.08
    decay: str = "linear_per_episode"
    horizon: int = 500

    def __post_init__(self):
        if not (0.0 < self.start <= 1.0):
            raise ValueError("epsilon_start must be in (0, 1]")
        if not (0.0 <= self.end <= self.start):
            raise ValueError("epsilon_end must be in [0, epsilon_start]")
        if self.decay not in EPSILON_DECAYS:
            raise ValueError(f"epsilon_decay must be one of {EPSILON_DECAYS}")
        if self.horizon < 1:
            raise ValueError("epsilon_horizon must be >= 1")

    def value(self, t: int) -> float:
        # end-branch first: a horizon of 1 pins the rate to `end` from t=0
        if t >= self.horizon - 1:
            return self.end
        if t <= 0:
            return self.start
        if self.decay == "linear_per_episode":
            return self.start + (self.end - self.start) * (t / (self.horizon - 1))
        ratio = (self.end / self.start) ** (1.0 / (self.horizon - 1))
        return max(self.end, self.start * ratio**t)


@dataclass(frozen=True)
class AgentHyper:
    """DDQN hyperparameters (defaults per the artifact's standard run)."""

    gamma: float = 0.99
    batch_size: int = 32
    replay_capacity: int = 10_000
    learning_rate: float = 1e-3
    target_sync_interval: int = 100
    grad_clip_norm: float = 0.0  # 0 disables clipping

    def __post_init__(self):
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.replay_capacity < self.batch_size:
            raise ValueError("replay_capacity must be >= batch_size")
        if not math.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.target_sync_interval < 1:
            raise ValueError("target_sync_interval must be >= 1")
        if self.grad_clip_norm < 0:
            raise ValueError("grad_clip_norm must be >= 0")


class DdqnAgent:
    """Online/target Q-networks over ``num_channels`` actions."""

    def __init__(
        self,
        num_channels: int,
        hyper: AgentHyper = AgentHyper(),
        schedule: EpsilonSchedule = EpsilonSchedule(),
        seed: int = 0,
        hidden: int = 256,
    ):
        self.num_channels = num_channels
        self.hyper = hyper
        self.schedule = schedule
        self.rng = np.random.default_rng(seed)
        self.online = nn.Mlp.q_network(num_channels, hidden)
        self.target = nn.Mlp.q_network(num_channels, hidden)
        nn.init_parameters(self.online, self.rng)
        nn.copy_parameters(self.online, self.target)
        self.buffer = ReplayBuffer(hyper.replay_capacity)
        self.update_count = 0

    def act(self, state: np.ndarray, exploration_t: int) -> int:
        """Epsilon-greedy channel choice; ties break to the lowest index."""
        eps = self.schedule.value(exploration_t)
        if self.rng.random() < eps:
            return int(self.rng.integers(self.num_channels))
        return self.greedy_policy(state)

    def greedy_policy(self, state: np.ndarray) -> int:
        return int(np.argmax(nn.forward(self.online, state)))

    def remember(self, t: Transition) -> None:
        state = np.asarray(t.state, dtype=np.float64)
        next_state = np.asarray(t.next_state, dtype=np.float64)
        if state.shape != (self.num_channels,) or next_state.shape != (self.num_channels,):
            raise ValueError("transition state length must equal num_channels")
        if not 0 <= t.action < self.num_channels:
            raise ValueError(f"transition action {t.action} out of range")
        self.buffer.push(Transition(state, int(t.action), float(t.reward), next_state, bool(t.done)))

    def compute_target(self, t: Transition) -> float:
        """Double-Q target: r + gamma * Q_target(s', argmax_a Q_online(s', a)); r if done."""
        if t.done:
            return float(t.reward)
        a_star = int(np.argmax(nn.forward(self.online, t.next_state)))
        return float(t.reward + self.hyper.gamma * nn.forward(self.target, t.next_state)[a_star])

    def learn(self) -> Optional[float]:
        """One batch update; no-op while the buffer is short of a batch.

        All targets in the batch are computed before any parameter changes,
        then one SGD step applies the mean gradient. Returns the mean loss,
        or None when nothing was updated.
        """
        h = self.hyper
        if len(self.buffer) < h.batch_size:
            return None
        batch = sample_batch(self.buffer, h.batch_size, self.rng)
        states = np.stack([t.state for t in batch])
        actions = np.array([t.action for t in batch], dtype=np.int64)
        rewards = np.array([t.reward for t in batch])
        next_states = np.stack([t.next_state for t in batch])
        not_done = np.array([0.0 if t.done else 1.0 for t in batch])

        q_online_next = nn.forward_batch(self.online, next_states)
        a_star = np.argmax(q_online_next, axis=1)
        q_target_next = nn.forward_batch(self.target, next_states)
        rows = np.arange(h.batch_size)
        targets = rewards + h.gamma * not_done * q_target_next[rows, a_star]

        loss, grads = nn.backward_batch(self.online, states, actions, targets)
        if h.grad_clip_norm > 0:
            norm = grads.global_norm()
            if norm > h.grad_clip_norm:
                grads.scale(h.grad_clip_norm / norm)
        nn.sgd_step(self.online, grads, h.learning_rate)
        self.update_count += 1
        if self.update_count % h.target_sync_interval == 0:
            nn.copy_parameters(self.online, self.target)
        return loss


def save_checkpoint(agent: DdqnAgent, path: str) -> None:
    """Checkpoint = both parameter sets + hyperparameters + rng state, one text file."""
    h = agent.hyper
    s = agent.schedule
    lines = [
        "ddqn-checkpoint v1",
        f"num_channels {agent.num_channels}",
        f"gamma {h.gamma!r}",
        f"batch_size {h.batch_size}",
        f"replay_capacity {h.replay_capacity}",
        f"learning_rate {h.learning_rate!r}",
        f"target_sync_interval {h.target_sync_interval}",
        f"grad_clip_norm {h.grad_clip_norm!r}",
        f"epsilon_start {s.start!r}",
        f"epsilon_end {s.end!r}",
        f"epsilon_decay {s.decay}",
        f"epsilon_horizon {s.horizon}",
        f"update_count {agent.update_count}",
        "rng " + json.dumps(agent.rng.bit_generator.state),
        "[online]",
        nn.mlp_to_text(agent.online).rstrip("\n"),
        "[target]",
        nn.mlp_to_text(agent.target).rstrip("\n"),
    ]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_checkpoint(path: str) -> DdqnAgent:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    lines = text.splitlines()
    if not lines or lines[0] != "ddqn-checkpoint v1":
        raise ValueError(f"{path}: not a ddqn-checkpoint v1 file")
    fields: dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i] != "[online]":
        key, _, value = lines[i].partition(" ")
        fields[key] = value
        i += 1
    try:
        target_idx = lines.index("[target]")
        online_text = "\n".join(lines[i + 1 : target_idx])
        target_text = "\n".join(lines[target_idx + 1 :])
        num_channels = int(fields["num_channels"])
        hyper = AgentHyper(
            gamma=float(fields["gamma"]),
            batch_size=int(fields["batch_size"]),
            replay_capacity=int(fields["replay_capacity"]),
            learning_rate=float(fields["learning_rate"]),
            target_sync_interval=int(fields["target_sync_interval"]),
            grad_clip_norm=float(fields["grad_clip_norm"]),
        )
        schedule = EpsilonSchedule(
            start=float(fields["epsilon_start"]),
            end=float(fields["epsilon_end"]),
            decay=fields["epsilon_decay"],
            horizon=int(fields["epsilon_horizon"]),
        )
        rng_state = json.loads(fields["rng"])
        update_count = int(fields["update_count"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed checkpoint header: {exc}") from exc
    online = nn.mlp_from_text(online_text)
    target = nn.mlp_from_text(target_text)
    if online.architecture() != target.architecture():
        raise ValueError(f"{path}: online/target architectures differ")
    agent = DdqnAgent(num_channels, hyper, schedule, seed=0, hidden=online.layers[0].out_dim)
    if online.architecture() != agent.online.architecture():
        raise ValueError(f"{path}: checkpoint architecture does not match q_network layout")
    agent.online = online
    agent.target = target
    agent.rng.bit_generator.state = rng_state
    agent.update_count = update_count
    return agent
