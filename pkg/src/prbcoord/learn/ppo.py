"""Clipped-surrogate PPO with a factorised categorical policy.

The actor emits one logit block per overlap region; the joint
log-probability of an action is the sum over blocks. Actor and critic are
separate networks updated by one Adam optimiser.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .nn import Adam, Mlp, clip_grad_norm, entropy, log_softmax, split_heads


class NonFiniteLoss(FloatingPointError):
    pass


@dataclass(frozen=True)
class PpoConfig:
    learning_rate: float = 3e-4
    gamma: float = 0.99
    ent_coef: float = 0.01
    n_steps: int = 512
    batch_size: int = 16
    n_epochs: int = 3
    clip_range: float = 0.2
    gae_lambda: float = 0.95
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        for name in ("learning_rate", "gamma", "n_steps", "batch_size", "n_epochs", "gae_lambda", "value_coef"):
            if getattr(self, name) <= 0:
                raise ValueError(f"PpoConfig.{name} must be positive")
        if self.ent_coef < 0:
            raise ValueError("PpoConfig.ent_coef must be non-negative")
        if not 0 < self.clip_range < 1:
            raise ValueError("PpoConfig.clip_range must lie in (0, 1)")


class PpoAgent:
    kind = "ppo"

    def __init__(self, obs_dim: int, head_sizes: Sequence[int], config: PpoConfig = PpoConfig(),
                 seed: int | None = 0):
        self.config = config
        self.obs_dim = obs_dim
        self.head_sizes = [int(h) for h in head_sizes]
        init_rng = np.random.default_rng(seed)
        hidden = list(config.hidden)
        self.actor = Mlp([obs_dim, *hidden, sum(self.head_sizes)], init_rng, out_gain=0.01)
        self.critic = Mlp([obs_dim, *hidden, 1], init_rng, out_gain=1.0)
        self.optimizer = Adam(self.actor.params + self.critic.params, lr=config.learning_rate)
        self.rng = np.random.default_rng(None if seed is None else [seed, 1])

    # -- policy --------------------------------------------------------
    def head_logprobs(self, obs: np.ndarray) -> list[np.ndarray]:
        return [log_softmax(z) for z in split_heads(self.actor(obs), self.head_sizes)]

    def value(self, obs: np.ndarray) -> np.ndarray:
        return self.critic(obs)[..., 0]

    def act(self, obs: np.ndarray) -> tuple[list[int], float, float]:
        """Sample an action; return it with its log-probability and the state value."""
        action, logp = [], 0.0
        for lp in self.head_logprobs(obs):
            p = np.exp(lp)
            a = int(self.rng.choice(len(p), p=p / p.sum()))
            action.append(a)
            logp += float(lp[a])
        return action, logp, float(self.value(obs))

    def greedy(self, obs: np.ndarray) -> list[int]:
        return [int(np.argmax(lp)) for lp in self.head_logprobs(obs)]

    def log_prob(self, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
        actions = np.asarray(actions)
        rows = np.arange(actions.shape[0])
        return sum(lp[rows, actions[:, h]] for h, lp in enumerate(self.head_logprobs(obs)))


class RolloutBuffer:
    """Fixed-length on-policy storage; advantages are recomputed on every fill."""

    def __init__(self, n_steps: int, obs_dim: int, n_heads: int):
        self.n_steps = n_steps
        self.obs = np.zeros((n_steps, obs_dim))
        self.actions = np.zeros((n_steps, n_heads), dtype=np.int64)
        self.logp = np.zeros(n_steps)
        self.values = np.zeros(n_steps)
        self.rewards = np.zeros(n_steps)
        self.dones = np.zeros(n_steps, dtype=bool)
        self.pos = 0

    @property
    def full(self) -> bool:
        return self.pos >= self.n_steps

    def add(self, obs, action, logp, value, reward, done) -> None:
        i = self.pos
        self.obs[i] = obs
        self.actions[i] = action
        self.logp[i] = logp
        self.values[i] = value
        self.rewards[i] = reward
        self.dones[i] = done
        self.pos += 1

    def reset(self) -> None:
        self.pos = 0


def compute_gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray, last_value: float,
                gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Generalised advantage estimates and the matching value targets.

    ``dones[t]`` marks that the episode ended after step ``t``.
    """
    n = len(rewards)
    adv = np.zeros(n)
    gae = 0.0
    for t in reversed(range(n)):
        next_value = last_value if t == n - 1 else values[t + 1]
        live = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * live - values[t]
        gae = delta + gamma * lam * live * gae
        adv[t] = gae
    return adv, adv + values


def ppo_loss_and_grads(agent: PpoAgent, obs: np.ndarray, actions: np.ndarray, old_logp: np.ndarray,
                       advantages: np.ndarray, returns: np.ndarray) -> tuple[float, list[np.ndarray], dict]:
    cfg = agent.config
    n = obs.shape[0]
    rows = np.arange(n)
    logits, actor_acts = agent.actor.forward(obs)
    heads = [log_softmax(z) for z in split_heads(logits, agent.head_sizes)]
    new_logp = sum(lp[rows, actions[:, h]] for h, lp in enumerate(heads))
    ratio = np.exp(new_logp - old_logp)
    clipped = np.clip(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range)
    s1, s2 = ratio * advantages, clipped * advantages
    policy_loss = -float(np.mean(np.minimum(s1, s2)))
    ents = [entropy(lp) for lp in heads]
    entropy_mean = float(np.mean(sum(ents)))

    v, critic_acts = agent.critic.forward(obs)
    v = v[:, 0]
    value_loss = float(np.mean((returns - v) ** 2))
    loss = policy_loss - cfg.ent_coef * entropy_mean + cfg.value_coef * value_loss

    # d loss / d new_logp: only where the unclipped term is the active minimum
    g_logp = np.where(s1 <= s2, -advantages * ratio, 0.0) / n
    g_logits = []
    for h, lp in enumerate(heads):
        p = np.exp(lp)
        onehot = np.zeros_like(p)
        onehot[rows, actions[:, h]] = 1.0
        g = g_logp[:, None] * (onehot - p)
        g += cfg.ent_coef / n * p * (lp + ents[h][:, None])
        g_logits.append(g)
    grads = agent.actor.backward(actor_acts, np.concatenate(g_logits, axis=1))
    g_v = cfg.value_coef * 2.0 * (v - returns) / n
    grads += agent.critic.backward(critic_acts, g_v[:, None])

    diag = {
        "policy_loss": policy_loss,
        "value_loss": value_loss,
        "entropy": entropy_mean,
        "approx_kl": float(np.mean((ratio - 1.0) - np.log(ratio))),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > cfg.clip_range)),
    }
    return loss, grads, diag


def ppo_update(agent: PpoAgent, buffer: RolloutBuffer, last_value: float) -> dict:
    """Run ``n_epochs`` of minibatch updates over a full rollout."""
    cfg = agent.config
    adv, returns = compute_gae(buffer.rewards, buffer.values, buffer.dones, last_value,
                               cfg.gamma, cfg.gae_lambda)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    n = buffer.n_steps
    sums: dict[str, float] = {}
    count = 0
    for _ in range(cfg.n_epochs):
        perm = agent.rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            loss, grads, diag = ppo_loss_and_grads(agent, buffer.obs[idx], buffer.actions[idx],
                                                   buffer.logp[idx], adv[idx], returns[idx])
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
                raise NonFiniteLoss(f"non-finite PPO loss {loss!r}; diagnostics {diag}")
            clip_grad_norm(grads, cfg.max_grad_norm)
            agent.optimizer.step(grads)
            for k, val in diag.items():
                sums[k] = sums.get(k, 0.0) + val
            count += 1
    out = {k: val / count for k, val in sums.items()}
    var_y = float(np.var(returns))
    out["explained_variance"] = float("nan") if var_y == 0 else 1.0 - float(np.var(returns - buffer.values)) / var_y
    return out
