"""Run configuration: YAML file <-> nested dataclasses.

Every value is validated at load time; errors name the offending field
path, e.g. ``topology.overlaps[1].prbs``. ``PRBCOORD_SEED`` and
``PRBCOORD_OUT`` override the seed and output directory.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .env import EnvConfig
from .learn.dqn import DqnConfig
from .learn.ppo import PpoConfig
from .radio import RadioConfig
from .sched import SliceConfig
from .spectrum import SpectrumTopology, TopologyError, build_topology
from .traffic import SDR_EMBB, VIR_EMBB, VIR_MMTC, ServiceProfile, UserSpec

ENV_SEED = "PRBCOORD_SEED"
ENV_OUT = "PRBCOORD_OUT"


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class CellEntry:
    id: int
    prbs: int
    priority: int


@dataclass(frozen=True)
class OverlapEntry:
    cells: tuple[int, int]
    prbs: int


@dataclass(frozen=True)
class TopologyBlock:
    cells: tuple[CellEntry, ...] = (CellEntry(2, 52, 2), CellEntry(1, 52, 1), CellEntry(3, 52, 3))
    overlaps: tuple[OverlapEntry, ...] = (OverlapEntry((1, 2), 20), OverlapEntry((1, 3), 20))

    def build(self) -> SpectrumTopology:
        return build_topology([(c.id, c.prbs, c.priority) for c in self.cells],
                              [(tuple(o.cells), o.prbs) for o in self.overlaps])


@dataclass(frozen=True)
class ProfileEntry:
    service: str
    demand_lo: float
    demand_hi: float
    frequency: float
    prb_lo: int
    prb_hi: int


def _profile_entry(p: ServiceProfile) -> ProfileEntry:
    return ProfileEntry(p.service, p.demand_lo, p.demand_hi, p.frequency, p.prb_lo, p.prb_hi)


@dataclass(frozen=True)
class UserEntry:
    id: int
    profile: str
    cell: int


@dataclass(frozen=True)
class EnvBlock:
    phi: float = 0.05
    epsilon: float = 1e-6
    demand_scale: float = 3.5e6
    train_episode_len: int = 100
    eval_episode_len: int = 70
    dt: float = 15.0


@dataclass(frozen=True)
class HarnessBlock:
    train_episodes: int = 500
    eval_episodes: int = 5
    eval_steps: int = 70
    static_hi_fraction: float = 0.5


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    output_dir: str = "runs/default"
    topology: TopologyBlock = TopologyBlock()
    radio: RadioConfig = RadioConfig()
    profiles: dict[str, ProfileEntry] = field(default_factory=lambda: {
        "sdr_embb": _profile_entry(SDR_EMBB),
        "vir_embb": _profile_entry(VIR_EMBB),
        "vir_mmtc": _profile_entry(VIR_MMTC),
    })
    users: tuple[UserEntry, ...] = (
        UserEntry(0, "sdr_embb", 1), UserEntry(1, "vir_embb", 2), UserEntry(2, "vir_mmtc", 2),
        UserEntry(3, "vir_embb", 3), UserEntry(4, "vir_mmtc", 3),
    )
    env: EnvBlock = EnvBlock()
    slices: tuple[SliceConfig, ...] = (SliceConfig("eMBB"), SliceConfig("mMTC"))
    ppo: PpoConfig = PpoConfig()
    dqn: DqnConfig = DqnConfig()
    harness: HarnessBlock = HarnessBlock()

    def topology_obj(self) -> SpectrumTopology:
        return self.topology.build()

    def env_config(self, train: bool = True) -> EnvConfig:
        profiles = {name: ServiceProfile(name, p.service, p.demand_lo, p.demand_hi, p.frequency, p.prb_lo, p.prb_hi)
                    for name, p in self.profiles.items()}
        users = tuple(UserSpec(u.id, profiles[u.profile], u.cell) for u in self.users)
        e = self.env
        return EnvConfig(self.topology_obj(), users, self.radio, e.phi, e.epsilon, e.demand_scale,
                         e.train_episode_len if train else e.eval_episode_len, e.dt)


# -- (de)serialisation ---------------------------------------------------

def to_dict(obj) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: to_dict(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {k: to_dict(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_dict(v) for v in obj]
    return obj


def _coerce(value, default, path: str):
    """Convert ``value`` to the type of ``default``."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    return value


def _build(cls, data, path: str, base=None):
    """Overlay ``data`` (a mapping) on ``base`` (or ``cls()`` defaults)."""
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected a mapping, got {type(data).__name__}")
    names = {f.name: f for f in fields(cls)}
    for k in data:
        if k not in names:
            raise ConfigError(f"{path}.{k}" if path else k, "unknown field")
    kwargs = {}
    for name, f in names.items():
        sub = f"{path}.{name}" if path else name
        if base is not None:
            default = getattr(base, name)
        elif f.default is not dataclasses.MISSING:
            default = f.default
        elif f.default_factory is not dataclasses.MISSING:  # type: ignore[misc]
            default = f.default_factory()  # type: ignore[misc]
        else:
            default = dataclasses.MISSING
        if name not in data:
            if default is dataclasses.MISSING:
                raise ConfigError(sub, "required field missing")
            kwargs[name] = default
            continue
        kwargs[name] = _value(cls, name, data[name], default, sub)
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as e:
        raise ConfigError(path, str(e)) from None


_LIST_ITEMS = {
    (TopologyBlock, "cells"): CellEntry,
    (TopologyBlock, "overlaps"): OverlapEntry,
    (RunConfig, "users"): UserEntry,
    (RunConfig, "slices"): SliceConfig,
}


def _value(cls, name, value, default, path):
    if (cls, name) in _LIST_ITEMS:
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        return tuple(_build(_LIST_ITEMS[(cls, name)], v, f"{path}[{i}]") for i, v in enumerate(value))
    if cls is RunConfig and name == "profiles":
        if not isinstance(value, dict) or not value:
            raise ConfigError(path, "expected a non-empty mapping of profile name to profile")
        return {k: _build(ProfileEntry, v, f"{path}.{k}") for k, v in value.items()}
    if cls is OverlapEntry and name == "cells":
        if not isinstance(value, list) or len(value) != 2 or not all(isinstance(c, int) for c in value):
            raise ConfigError(path, "expected two cell ids")
        return tuple(value)
    if name == "hidden":
        if not isinstance(value, list) or not all(isinstance(h, int) and h > 0 for h in value):
            raise ConfigError(path, "expected a list of positive layer widths")
        return tuple(value)
    if name == "n_max":
        if value is not None and (isinstance(value, bool) or not isinstance(value, int)):
            raise ConfigError(path, f"expected an integer or null, got {value!r}")
        return value
    if dataclasses.is_dataclass(default):
        return _build(type(default), value, path, base=default)
    return _coerce(value, default, path)


def from_dict(data: dict) -> RunConfig:
    cfg = _build(RunConfig, data or {}, "")
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    try:
        topo = cfg.topology_obj()
    except TopologyError as e:
        raise ConfigError("topology", str(e)) from None
    for i, c in enumerate(cfg.topology.cells):
        if c.prbs <= 0:
            raise ConfigError(f"topology.cells[{i}].prbs", "must be positive")
    cells = set(topo.cell_ids)
    seen = set()
    for i, u in enumerate(cfg.users):
        if u.profile not in cfg.profiles:
            raise ConfigError(f"users[{i}].profile", f"unknown profile {u.profile!r}")
        if u.cell not in cells:
            raise ConfigError(f"users[{i}].cell", f"unknown cell {u.cell}")
        if u.id in seen:
            raise ConfigError(f"users[{i}].id", f"duplicate user id {u.id}")
        seen.add(u.id)
    for name, p in cfg.profiles.items():
        try:
            ServiceProfile(name, p.service, p.demand_lo, p.demand_hi, p.frequency, p.prb_lo, p.prb_hi)
        except ValueError as e:
            raise ConfigError(f"profiles.{name}", str(e)) from None
    e = cfg.env
    if e.phi < 0:
        raise ConfigError("env.phi", "must be non-negative")
    if e.epsilon <= 0 or e.demand_scale <= 0 or e.dt <= 0:
        raise ConfigError("env", "epsilon, demand_scale and dt must be positive")
    if e.train_episode_len <= 0 or e.eval_episode_len <= 0:
        raise ConfigError("env", "episode lengths must be positive")
    h = cfg.harness
    if h.train_episodes <= 0 or h.eval_episodes <= 0 or h.eval_steps <= 0:
        raise ConfigError("harness", "episode and step counts must be positive")
    if not 0 <= h.static_hi_fraction <= 1:
        raise ConfigError("harness.static_hi_fraction", "must lie in [0, 1]")
    r = cfg.radio
    if r.rate_per_prb_bps <= 0 or r.radius_m <= 0 or r.carrier_mhz <= 0:
        raise ConfigError("radio", "rate_per_prb_bps, radius_m and carrier_mhz must be positive")
    if not 0 < r.g_min <= 1:
        raise ConfigError("radio.g_min", "must lie in (0, 1]")


def load_config(path=None, environ=None) -> RunConfig:
    """Load a YAML config (or defaults when ``path`` is None) and apply env overrides."""
    environ = os.environ if environ is None else environ
    data = {}
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = f"line {mark.line + 1}" if mark is not None else "yaml"
            raise ConfigError(where, f"cannot parse {path}: {e}") from None
    cfg = from_dict(data)
    if environ.get(ENV_SEED):
        try:
            cfg = replace(cfg, seed=int(environ[ENV_SEED]))
        except ValueError:
            raise ConfigError(ENV_SEED, f"expected an integer, got {environ[ENV_SEED]!r}") from None
    if environ.get(ENV_OUT):
        cfg = replace(cfg, output_dir=environ[ENV_OUT])
    return cfg


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)
