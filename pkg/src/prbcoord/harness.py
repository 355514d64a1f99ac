"""Training driver, scripted evaluation, metric aggregation and CSV I/O."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .env import EnvConfig, EpisodeTrace, InterferenceEnv, StepOutcome, generate_episode
from .learn.dqn import DqnAgent, DqnConfig, ReplayBuffer, dqn_update, epsilon_at
from .learn.ppo import PpoAgent, PpoConfig, RolloutBuffer, ppo_update
from .sched import PfState, SliceConfig, DEFAULT_SLICES, nsa_pf, sa_ca_pf, sa_va_pf, static_partition

log = logging.getLogger(__name__)

# plotting / reporting order
STRATEGIES = ("ppo", "dqn", "sa-va-pf", "sa-ca-pf", "nsa-pf")
LEARNED = ("ppo", "dqn")
BASELINES = ("sa-va-pf", "sa-ca-pf", "nsa-pf")

TRAIN_STREAM = 0
EVAL_STREAM = 1


class TrainingAborted(RuntimeError):
    pass


def episode_seed(seed: int, stream: int, episode: int) -> list[int]:
    return [int(seed), stream, int(episode)]


# -- training ------------------------------------------------------------

@dataclass
class TrainResult:
    agent: PpoAgent | DqnAgent
    curve: list[float]  # total reward per episode
    diagnostics: list[dict] = field(default_factory=list)


def make_agent(kind: str, env: InterferenceEnv, seed: int, ppo_config: PpoConfig | None = None,
               dqn_config: DqnConfig | None = None):
    if kind == "ppo":
        return PpoAgent(env.obs_dim, env.action_sizes, ppo_config or PpoConfig(), seed)
    if kind == "dqn":
        return DqnAgent(env.obs_dim, env.action_sizes, dqn_config or DqnConfig(), seed)
    raise ValueError(f"unknown agent kind {kind!r}; expected ppo or dqn")


def _check_reward(reward: float, episode: int, step: int) -> None:
    if not math.isfinite(reward):
        raise TrainingAborted(f"non-finite reward {reward!r} at episode {episode}, step {step}")


def train(agent_kind: str, env_config: EnvConfig, episodes: int, seed: int,
          ppo_config: PpoConfig | None = None, dqn_config: DqnConfig | None = None,
          log_every: int = 50, progress: Callable[[int, float], None] | None = None) -> TrainResult:
    env = InterferenceEnv(env_config)
    agent = make_agent(agent_kind, env, seed, ppo_config, dqn_config)
    if agent_kind == "ppo":
        result = _train_ppo(agent, env, episodes, seed, log_every)
    else:
        result = _train_dqn(agent, env, episodes, seed, log_every)
    if progress is not None:
        for i, r in enumerate(result.curve):
            progress(i, r)
    return result


def _log_curve(curve: list[float], log_every: int, kind: str) -> None:
    ep = len(curve)
    if log_every and ep % log_every == 0:
        log.info("%s episode %d: mean reward over last %d episodes %.3f",
                 kind, ep, log_every, float(np.mean(curve[-log_every:])))


def _train_ppo(agent: PpoAgent, env: InterferenceEnv, episodes: int, seed: int, log_every: int) -> TrainResult:
    cfg = agent.config
    buf = RolloutBuffer(cfg.n_steps, env.obs_dim, len(env.action_sizes))
    curve, diags = [], []
    for ep in range(episodes):
        obs = env.reset(episode_seed(seed, TRAIN_STREAM, ep))
        total = 0.0
        while not env.done:
            action, logp, value = agent.act(obs)
            out = env.step(action)
            _check_reward(out.reward, ep, env.t)
            total += out.reward
            reward = out.reward
            if out.done:
                # time-limit end: bootstrap from the state the episode was cut at
                reward += cfg.gamma * float(agent.value(out.observation))
            buf.add(obs, action, logp, value, reward, out.done)
            obs = out.observation
            if buf.full:
                last_value = 0.0 if out.done else float(agent.value(obs))
                diags.append(ppo_update(agent, buf, last_value))
                buf.reset()
        curve.append(total)
        _log_curve(curve, log_every, "ppo")
    return TrainResult(agent, curve, diags)


def _train_dqn(agent: DqnAgent, env: InterferenceEnv, episodes: int, seed: int, log_every: int) -> TrainResult:
    cfg = agent.config
    replay = ReplayBuffer(cfg.replay_capacity, env.obs_dim, seed)
    total_steps = episodes * env.config.episode_len
    step = 0
    curve, diags = [], []
    for ep in range(episodes):
        obs = env.reset(episode_seed(seed, TRAIN_STREAM, ep))
        total = 0.0
        while not env.done:
            idx = agent.act(obs, epsilon_at(step / total_steps, cfg))
            out = env.step(agent.decode(idx))
            _check_reward(out.reward, ep, env.t)
            total += out.reward
            # episodes only end on the time limit, so never cut the bootstrap
            replay.add(obs, idx, out.reward, out.observation, False)
            obs = out.observation
            step += 1
            loss = dqn_update(agent, replay, step)
            if loss is not None and step % 1000 == 0:
                diags.append({"step": step, "loss": loss})
        curve.append(total)
        _log_curve(curve, log_every, "dqn")
    return TrainResult(agent, curve, diags)


# -- evaluation ----------------------------------------------------------

@dataclass(frozen=True)
class ScenarioScript:
    seed: int
    episodes: int
    steps: int
    traces: tuple[EpisodeTrace, ...]


def make_script(env_config: EnvConfig, seed: int, episodes: int = 5, steps: int = 70) -> ScenarioScript:
    cfg = replace(env_config, episode_len=steps)
    traces = tuple(generate_episode(cfg, episode_seed(seed, EVAL_STREAM, e), steps) for e in range(episodes))
    return ScenarioScript(seed, episodes, steps, traces)


@dataclass(frozen=True)
class EvaluationRecord:
    strategy: str
    episode: int
    step: int
    users: tuple[int, ...]
    cells: tuple[int, ...]
    services: tuple[str, ...]
    requested: tuple[float, ...]
    achieved: tuple[float, ...]
    granted: tuple[int, ...]
    effective: tuple[int, ...]
    violations: tuple[bool, ...]
    region_loss: tuple[int, ...]

    @property
    def lost_prbs(self) -> int:
        return 2 * sum(self.region_loss)

    @property
    def n_violations(self) -> int:
        return sum(self.violations)

    @property
    def aggregate(self) -> float:
        return sum(self.achieved)


class _Baseline:
    def __init__(self, name: str, env: InterferenceEnv, slices: Sequence[SliceConfig], hi_fraction: float = 0.5):
        self.name = name
        self.env = env
        self.slices = slices
        self.partition = static_partition(env.topology, hi_fraction)
        self.pf = PfState()

    def step(self) -> StepOutcome:
        views = self.env.demand_views()
        topo = self.env.topology
        if self.name == "nsa-pf":
            plan = nsa_pf(views, topo, self.env.config.radio.min_prbs)
        elif self.name == "sa-ca-pf":
            plan = sa_ca_pf(views, self.partition, topo, self.env.config.radio.min_prbs)
        else:
            plan = sa_va_pf(views, self.partition, topo, self.pf, self.slices, self.env.config.radio,
                            self.env.config.radio.min_prbs)
        out = self.env.step_plan(plan)
        if self.name == "sa-va-pf":
            self.pf.update(out.achieved)
        return out


def _record(strategy: str, episode: int, step: int, env: InterferenceEnv, out: StepOutcome) -> EvaluationRecord:
    users = [u.user_id for u in env.users]
    return EvaluationRecord(
        strategy, episode, step, tuple(users),
        tuple(u.cell_id for u in env.users),
        tuple(u.profile.service for u in env.users),
        tuple(out.requested[u] for u in users),
        tuple(out.achieved[u] for u in users),
        tuple(out.plan.user_grants[u] for u in users),
        tuple(out.plan.user_effective[u] for u in users),
        tuple(out.violations[u] for u in users),
        tuple(out.region_loss[r.region_id] for r in env.topology.regions),
    )


def evaluate(strategies: Iterable[str], env_config: EnvConfig, policies: Mapping[str, object] | None = None,
             episodes: int = 5, steps: int = 70, seed: int = 0,
             slices: Sequence[SliceConfig] = DEFAULT_SLICES,
             script: ScenarioScript | None = None,
             static_hi_fraction: float = 0.5) -> tuple[list[EvaluationRecord], dict[str, str]]:
    """Replay one scenario script for every strategy.

    Learned strategies act greedily. A learned strategy without a policy
    is reported in the returned error map and skipped. The coordinated
    baselines split each shared region with ``static_hi_fraction`` going to
    the higher-priority cell.
    """
    policies = dict(policies or {})
    script = script or make_script(env_config, seed, episodes, steps)
    env = InterferenceEnv(replace(env_config, episode_len=script.steps))
    records: list[EvaluationRecord] = []
    errors: dict[str, str] = {}
    for name in strategies:
        if name in LEARNED:
            agent = policies.get(name)
            if agent is None:
                errors[name] = f"no checkpoint available for {name}"
                continue
        elif name not in BASELINES:
            errors[name] = f"unknown strategy {name!r}"
            continue
        baseline = None if name in LEARNED else _Baseline(name, env, slices, static_hi_fraction)
        for ep, trace in enumerate(script.traces):
            obs = env.reset(trace=trace)
            while not env.done:
                t = env.t
                out = env.step(agent.greedy(obs)) if baseline is None else baseline.step()
                records.append(_record(name, ep, t, env, out))
                obs = out.observation
    return records, errors


# -- summaries -----------------------------------------------------------

@dataclass(frozen=True)
class Summary:
    strategy: str
    steps: int
    qos_violations: int
    lost_prbs_total: int
    lost_prbs_mean: float
    lost_prbs_std: float
    throughput_mean_mbps: float
    throughput_std_mbps: float
    qos_change_pct: float | None  # vs the best non-learning baseline


def relative_change(value: float, reference: float) -> float | None:
    if reference == 0:
        return None
    return 100.0 * (value - reference) / reference


def ordered_strategies(names: Iterable[str]) -> list[str]:
    names = list(dict.fromkeys(names))
    known = [s for s in STRATEGIES if s in names]
    return known + sorted(s for s in names if s not in STRATEGIES)


def summarize(records: Sequence[EvaluationRecord]) -> list[Summary]:
    by_strategy: dict[str, list[EvaluationRecord]] = {}
    for r in records:
        by_strategy.setdefault(r.strategy, []).append(r)
    totals = {s: sum(r.n_violations for r in recs) for s, recs in by_strategy.items()}
    baseline_totals = [totals[s] for s in BASELINES if s in totals]
    best = min(baseline_totals) if baseline_totals else None
    out = []
    for s in ordered_strategies(by_strategy):
        recs = by_strategy[s]
        lost = np.array([r.lost_prbs for r in recs], dtype=float)
        tput = np.array([r.aggregate * 8.0 / 1e6 for r in recs])
        out.append(Summary(
            s, len(recs), totals[s], int(lost.sum()), float(lost.mean()), float(lost.std()),
            float(tput.mean()), float(tput.std()),
            None if best is None else relative_change(totals[s], best),
        ))
    return out


# -- CSV -----------------------------------------------------------------

RECORD_COLUMNS = (
    "strategy", "episode", "step", "user", "cell", "service", "requested_Bps", "achieved_Bps",
    "granted_prbs", "effective_prbs", "qos_violation", "lost_prbs_step", "aggregate_Bps",
)
SUMMARY_COLUMNS = (
    "strategy", "steps", "qos_violations", "lost_prbs_total", "lost_prbs_mean", "lost_prbs_std",
    "throughput_mean_mbps", "throughput_std_mbps", "qos_change_pct",
)


def write_records_csv(records: Sequence[EvaluationRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in records:
            for i, u in enumerate(r.users):
                w.writerow([
                    r.strategy, r.episode, r.step, u, r.cells[i], r.services[i],
                    f"{r.requested[i]:.4f}", f"{r.achieved[i]:.4f}", r.granted[i], r.effective[i],
                    int(r.violations[i]), r.lost_prbs, f"{r.aggregate:.4f}",
                ])


def write_summary_csv(summaries: Sequence[Summary], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow([
                s.strategy, s.steps, s.qos_violations, s.lost_prbs_total, f"{s.lost_prbs_mean:.6f}",
                f"{s.lost_prbs_std:.6f}", f"{s.throughput_mean_mbps:.6f}", f"{s.throughput_std_mbps:.6f}",
                "" if s.qos_change_pct is None else f"{s.qos_change_pct:.6f}",
            ])


def write_curve_csv(curve: Sequence[float], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("episode", "total_reward"))
        for i, r in enumerate(curve):
            w.writerow((i, f"{r:.6f}"))


class RecordsCsvError(ValueError):
    pass


@dataclass
class StepTotals:
    """Per-strategy totals recovered from a records CSV."""

    qos_violations: int = 0
    lost_prbs: int = 0
    aggregate_mbps: list[float] = field(default_factory=list)


def read_records_csv(path) -> dict[str, StepTotals]:
    out: dict[str, StepTotals] = {}
    seen: set[tuple[str, str, str]] = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RECORD_COLUMNS:
            raise RecordsCsvError(f"{path}: row 1: expected header {','.join(RECORD_COLUMNS)}")
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(RECORD_COLUMNS):
                raise RecordsCsvError(f"{path}: row {row_no}: expected {len(RECORD_COLUMNS)} fields, got {len(row)}")
            rec = dict(zip(RECORD_COLUMNS, row))
            try:
                viol = int(rec["qos_violation"])
                lost = int(rec["lost_prbs_step"])
                agg = float(rec["aggregate_Bps"])
            except ValueError as e:
                raise RecordsCsvError(f"{path}: row {row_no}: {e}") from None
            tot = out.setdefault(rec["strategy"], StepTotals())
            tot.qos_violations += viol
            key = (rec["strategy"], rec["episode"], rec["step"])
            if key not in seen:
                seen.add(key)
                tot.lost_prbs += lost
                tot.aggregate_mbps.append(agg * 8.0 / 1e6)
    return out
