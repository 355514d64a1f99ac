"""DQN over a one-dimensional action index.

``action_mode="joint"`` flattens the per-region defer counts into a single
index (first region most significant). ``"shared"`` uses one defer count
for every region.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .nn import Adam, Mlp, clip_grad_norm
from .ppo import NonFiniteLoss

ACTION_MODES = ("joint", "shared")


@dataclass(frozen=True)
class DqnConfig:
    learning_rate: float = 3e-4
    gamma: float = 0.99
    batch_size: int = 16
    exploration_fraction: float = 0.1
    exploration_initial_eps: float = 1.0
    exploration_final_eps: float = 0.05
    replay_capacity: int = 100_000
    target_update_interval: int = 1_000
    learning_starts: int = 1_000
    train_freq: int = 4
    max_grad_norm: float = 10.0
    action_mode: str = "joint"
    hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        if not 0 <= self.exploration_final_eps <= self.exploration_initial_eps <= 1:
            raise ValueError("DqnConfig: need 0 <= final_eps <= initial_eps <= 1")
        if self.action_mode not in ACTION_MODES:
            raise ValueError(f"DqnConfig.action_mode must be one of {ACTION_MODES}")
        if self.batch_size <= 0 or self.replay_capacity < self.batch_size:
            raise ValueError("DqnConfig: replay_capacity must hold at least one batch")


def epsilon_at(progress: float, config: DqnConfig) -> float:
    """Linear anneal over the first ``exploration_fraction`` of training."""
    if progress >= config.exploration_fraction:
        return config.exploration_final_eps
    frac = progress / config.exploration_fraction
    return config.exploration_initial_eps + frac * (config.exploration_final_eps - config.exploration_initial_eps)


class DqnAgent:
    kind = "dqn"

    def __init__(self, obs_dim: int, head_sizes: Sequence[int], config: DqnConfig = DqnConfig(),
                 seed: int | None = 0):
        self.config = config
        self.obs_dim = obs_dim
        self.head_sizes = [int(h) for h in head_sizes]
        if config.action_mode == "shared" and len(set(self.head_sizes)) > 1:
            raise ValueError("shared action mode needs equally sized regions")
        self.n_actions = int(np.prod(self.head_sizes)) if config.action_mode == "joint" else self.head_sizes[0]
        init_rng = np.random.default_rng(seed)
        self.qnet = Mlp([obs_dim, *config.hidden, self.n_actions], init_rng, out_gain=1.0)
        self.target = self.qnet.copy()
        self.optimizer = Adam(self.qnet.params, lr=config.learning_rate)
        self.rng = np.random.default_rng(None if seed is None else [seed, 1])

    def decode(self, index: int) -> list[int]:
        if self.config.action_mode == "shared":
            return [int(index)] * len(self.head_sizes)
        out = []
        for size in reversed(self.head_sizes):
            index, a = divmod(int(index), size)
            out.append(a)
        return out[::-1]

    def encode(self, action: Sequence[int]) -> int:
        if self.config.action_mode == "shared":
            return int(action[0])
        index = 0
        for a, size in zip(action, self.head_sizes):
            index = index * size + int(a)
        return index

    def q_values(self, obs: np.ndarray) -> np.ndarray:
        return self.qnet(obs)

    def greedy_index(self, obs: np.ndarray) -> int:
        return int(np.argmax(self.q_values(obs)))

    def greedy(self, obs: np.ndarray) -> list[int]:
        return self.decode(self.greedy_index(obs))

    def act(self, obs: np.ndarray, eps: float) -> int:
        if self.rng.random() < eps:
            return int(self.rng.integers(self.n_actions))
        return self.greedy_index(obs)

    def sync_target(self) -> None:
        self.target = self.qnet.copy()


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, seed: int | None = 0):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.terminal = np.zeros(capacity, dtype=bool)
        self.pos = 0
        self.size = 0
        self.rng = np.random.default_rng(None if seed is None else [seed, 2])

    def __len__(self) -> int:
        return self.size

    def add(self, obs, action: int, reward: float, next_obs, terminal: bool) -> None:
        i = self.pos
        self.obs[i], self.actions[i], self.rewards[i] = obs, action, reward
        self.next_obs[i], self.terminal[i] = next_obs, terminal
        self.pos = (self.pos + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int) -> tuple[np.ndarray, ...]:
        idx = self.rng.integers(0, self.size, size=n)
        return self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx], self.terminal[idx]


def huber(x: np.ndarray, delta: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Smooth-L1 value and derivative."""
    a = np.abs(x)
    val = np.where(a <= delta, 0.5 * x * x, delta * (a - 0.5 * delta))
    grad = np.where(a <= delta, x, delta * np.sign(x))
    return val, grad


def dqn_loss_and_grads(agent: DqnAgent, obs, actions, rewards, next_obs, terminal) -> tuple[float, list[np.ndarray]]:
    cfg = agent.config
    n = obs.shape[0]
    q_next = agent.target(next_obs).max(axis=1)
    target = rewards + cfg.gamma * np.where(terminal, 0.0, q_next)
    q, acts = agent.qnet.forward(obs)
    rows = np.arange(n)
    val, d = huber(q[rows, actions] - target)
    g_out = np.zeros_like(q)
    g_out[rows, actions] = d / n
    return float(val.mean()), agent.qnet.backward(acts, g_out)


def dqn_update(agent: DqnAgent, replay: ReplayBuffer, global_step: int) -> float | None:
    """One gradient step when due; hard target sync on its own schedule.

    Returns the loss, or ``None`` when no gradient step ran.
    """
    cfg = agent.config
    loss = None
    if len(replay) >= cfg.learning_starts and global_step % cfg.train_freq == 0:
        loss, grads = dqn_loss_and_grads(agent, *replay.sample(cfg.batch_size))
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise NonFiniteLoss(f"non-finite DQN loss {loss!r} at step {global_step}")
        clip_grad_norm(grads, cfg.max_grad_norm)
        agent.optimizer.step(grads)
    if global_step % cfg.target_update_interval == 0:
        agent.sync_target()
    return loss
