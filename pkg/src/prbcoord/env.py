"""Episodic PRB-split environment.

One step is one 15 s traffic interval. The agent picks, for every overlap
region, how many shared PRBs the lower-priority cell defers to the
higher-priority one; cells then split their budgets over their users by
demand. The reward is the per-user satisfaction plus a per-region
utilisation bonus for the higher-priority cell.

Positions and demands are drawn from an episode trace that depends only on
the seed, never on the actions, so every strategy can be replayed against
the same conditions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .radio import (
    DEFAULT_RADIO,
    MobilityState,
    RadioConfig,
    achieved_throughput,
    pathloss_from_distance,
    pathloss_from_position,
    sample_position,
    step_mobility,
)
from .sched import DemandView, partition_from_hi_shares, proportional_plan
from .spectrum import AllocationPlan, SpectrumTopology, default_topology
from .traffic import SERVICE_CLASSES, UserSpec, default_users, demand_to_prbs, sample_demand

FEATURES_PER_USER = 4


class EpisodeOver(RuntimeError):
    pass


@dataclass(frozen=True)
class EnvConfig:
    topology: SpectrumTopology = field(default_factory=default_topology)
    users: tuple[UserSpec, ...] = field(default_factory=lambda: tuple(default_users()))
    radio: RadioConfig = DEFAULT_RADIO
    phi: float = 0.05
    epsilon: float = 1e-6
    demand_scale: float = 3.5e6  # bytes/s mapped to 1.0 in the observation
    episode_len: int = 100
    dt: float = 15.0
    fixed_positions: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        cells = set(self.topology.cell_ids)
        for u in self.users:
            if u.cell_id not in cells:
                raise ValueError(f"user {u.user_id} is served by unknown cell {u.cell_id}")
        if self.fixed_positions is not None and len(self.fixed_positions) != len(self.users):
            raise ValueError("fixed_positions must list one position per user")
        if self.episode_len <= 0 or self.dt <= 0:
            raise ValueError("episode_len and dt must be positive")

    @property
    def pathloss_span(self) -> tuple[float, float]:
        return pathloss_from_distance(1.0, self.radio), pathloss_from_distance(self.radio.radius_m, self.radio)


@dataclass(frozen=True)
class EpisodeTrace:
    """Per-step positions, pathlosses and requested rates, ``episode_len + 1`` rows."""

    positions: np.ndarray  # (T+1, U, 2)
    bearings: np.ndarray  # (T+1, U)
    pathloss: np.ndarray  # (T+1, U)
    rates: np.ndarray  # (T+1, U) bytes/s

    @property
    def n_steps(self) -> int:
        return self.rates.shape[0] - 1


def generate_episode(config: EnvConfig, seed, n_steps: int | None = None) -> EpisodeTrace:
    """Draw one episode; one independent random stream per user."""
    n_steps = config.episode_len if n_steps is None else n_steps
    ss = np.random.SeedSequence(seed)
    rngs = [np.random.default_rng(s) for s in ss.spawn(len(config.users))]
    n_users = len(config.users)
    pos = np.empty((n_steps + 1, n_users, 2))
    bearing = np.empty((n_steps + 1, n_users))
    pl = np.empty((n_steps + 1, n_users))
    rates = np.empty((n_steps + 1, n_users))
    for i, (user, rng) in enumerate(zip(config.users, rngs)):
        if config.fixed_positions is None:
            x, y = sample_position(rng, config.radio)
        else:
            x, y = config.fixed_positions[i]
        state = MobilityState(x, y, 2.0 * math.pi * rng.random(), config.radio.speed_mps)
        for t in range(n_steps + 1):
            pos[t, i] = state.x, state.y
            bearing[t, i] = state.bearing
            pl[t, i] = pathloss_from_position(state.x, state.y, config.radio)
            rates[t, i] = sample_demand(user.profile, rng).rate
            if t < n_steps and state.speed > 0:
                state = step_mobility(state, config.dt, config.radio.radius_m)
    return EpisodeTrace(pos, bearing, pl, rates)


@dataclass(frozen=True)
class UserState:
    c_user: str
    lambda_t: float
    L_t: float
    serving_cell: int
    mobility: MobilityState


def satisfaction_reward(lambda_a: float, lambda_r: float, epsilon: float = 1e-6) -> float:
    return min(lambda_a / (lambda_r + epsilon), 1.0)


def utilization_reward(n: int, phi: float, alpha: int, chi: int) -> float:
    return n * phi * alpha / chi


def total_reward(r_s: Sequence[float], r_u: Sequence[float]) -> float:
    return sum(r_s) + sum(r_u)


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    satisfaction: dict[int, float]
    utilization: dict[int, float]
    requested: dict[int, float]
    achieved: dict[int, float]
    violations: dict[int, bool]
    region_loss: dict[int, int]
    plan: AllocationPlan
    done: bool

    @property
    def lost_prbs(self) -> int:
        return 2 * sum(self.region_loss.values())

    @property
    def n_violations(self) -> int:
        return sum(self.violations.values())

    @property
    def aggregate_throughput(self) -> float:
        return sum(self.achieved.values())


class InterferenceEnv:
    def __init__(self, config: EnvConfig | None = None):
        self.config = config or EnvConfig()
        self.topology = self.config.topology
        self.users = list(self.config.users)
        self.action_sizes = [r.size_prbs + 1 for r in self.topology.regions]
        self.obs_dim = FEATURES_PER_USER * len(self.users)
        self._trace: EpisodeTrace | None = None
        self._t = 0

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def t(self) -> int:
        return self._t

    @property
    def done(self) -> bool:
        return self._trace is None or self._t >= self._trace.n_steps

    def reset(self, seed=None, trace: EpisodeTrace | None = None) -> np.ndarray:
        self._trace = trace if trace is not None else generate_episode(self.config, seed)
        self._t = 0
        return self.observation()

    # -- state ---------------------------------------------------------
    def user_states(self) -> list[UserState]:
        tr, t = self._trace, self._t
        return [
            UserState(u.profile.service, float(tr.rates[t, i]), float(tr.pathloss[t, i]), u.cell_id,
                      MobilityState(*tr.positions[t, i], tr.bearings[t, i], self.config.radio.speed_mps))
            for i, u in enumerate(self.users)
        ]

    def observation(self) -> np.ndarray:
        tr, t = self._trace, self._t
        return encode_observation(self.config, [u.profile.service for u in self.users],
                                  tr.rates[t], tr.pathloss[t])

    def demand_views(self) -> list[DemandView]:
        tr, t = self._trace, self._t
        radio = self.config.radio
        return [
            DemandView(u.user_id, u.cell_id, u.profile.service,
                       demand_to_prbs(tr.rates[t, i], tr.pathloss[t, i], radio,
                                      self.topology.cell(u.cell_id).prb_count),
                       float(tr.rates[t, i]), float(tr.pathloss[t, i]))
            for i, u in enumerate(self.users)
        ]

    # -- dynamics ------------------------------------------------------
    def apply_action(self, action: Sequence[int], views: Sequence[DemandView] | None = None) -> AllocationPlan:
        action = [int(a) for a in action]
        if len(action) != len(self.topology.regions):
            raise ValueError(f"expected {len(self.topology.regions)} defer counts, got {len(action)}")
        for a, r in zip(action, self.topology.regions):
            if not 0 <= a <= r.size_prbs:
                raise ValueError(f"defer count {a} outside [0, {r.size_prbs}] for region {r.region_id}")
        partition = partition_from_hi_shares(self.topology, {r.region_id: a for a, r in zip(action, self.topology.regions)})
        views = self.demand_views() if views is None else views
        return proportional_plan(views, partition, self.topology, self.config.radio.min_prbs)

    def step(self, action: Sequence[int]) -> StepOutcome:
        if self.done:
            raise EpisodeOver("step() called on a finished episode; call reset()")
        return self.step_plan(self.apply_action(action))

    def step_plan(self, plan: AllocationPlan) -> StepOutcome:
        """Advance one step under an already interference-resolved plan."""
        if self.done:
            raise EpisodeOver("step() called on a finished episode; call reset()")
        tr, t, cfg = self._trace, self._t, self.config
        requested, achieved, r_s, viol = {}, {}, {}, {}
        for i, u in enumerate(self.users):
            lam_r = float(tr.rates[t, i])
            lam_a = achieved_throughput(plan.user_effective[u.user_id], lam_r, float(tr.pathloss[t, i]), cfg.radio)
            requested[u.user_id] = lam_r
            achieved[u.user_id] = lam_a
            r_s[u.user_id] = satisfaction_reward(lam_a, lam_r, cfg.epsilon)
            viol[u.user_id] = lam_a < lam_r
        r_u = {r.region_id: utilization_reward(self.n_users, cfg.phi, plan.hi_shares.get(r.region_id, 0), r.size_prbs)
               for r in self.topology.regions}
        reward = total_reward(list(r_s.values()), list(r_u.values()))
        self._t += 1
        done = self._t >= tr.n_steps
        return StepOutcome(self.observation(), reward, r_s, r_u, requested, achieved, viol,
                           dict(plan.region_loss), plan, done)


def encode_observation(config: EnvConfig, services: Sequence[str], rates, pathloss) -> np.ndarray:
    """Per user: class one-hot, demand / scale, pathloss mapped onto [0, 1]."""
    pl_lo, pl_hi = config.pathloss_span
    out = np.zeros(FEATURES_PER_USER * len(services))
    for i, s in enumerate(services):
        k = FEATURES_PER_USER * i
        out[k + SERVICE_CLASSES.index(s)] = 1.0
        out[k + 2] = rates[i] / config.demand_scale
        out[k + 3] = (pathloss[i] - pl_lo) / (pl_hi - pl_lo)
    return out


def decode_observation(config: EnvConfig, obs: np.ndarray) -> tuple[list[str], np.ndarray, np.ndarray]:
    pl_lo, pl_hi = config.pathloss_span
    feats = np.asarray(obs).reshape(-1, FEATURES_PER_USER)
    services = [SERVICE_CLASSES[int(np.argmax(f[:2]))] for f in feats]
    return services, feats[:, 2] * config.demand_scale, pl_lo + feats[:, 3] * (pl_hi - pl_lo)
