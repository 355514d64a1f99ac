from .checkpoint import load_policy, save_policy
from .dqn import DqnAgent, DqnConfig, ReplayBuffer, dqn_update, epsilon_at
from .nn import Adam, Mlp
from .ppo import PpoAgent, PpoConfig, RolloutBuffer, compute_gae, ppo_update

__all__ = [
    "Adam", "DqnAgent", "DqnConfig", "Mlp", "PpoAgent", "PpoConfig", "ReplayBuffer", "RolloutBuffer",
    "compute_gae", "dqn_update", "epsilon_at", "load_policy", "ppo_update", "save_policy",
]
