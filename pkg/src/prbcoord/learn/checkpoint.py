"""Binary policy checkpoints.

Layout, all little-endian::

    8s   magic  b"PRBCKPT\\0"
    u16  format version
    u8   agent kind (1 = ppo, 2 = dqn)
    u8   action mode (0 = factorised, 1 = joint, 2 = shared)
    u16  number of action heads, then u32 per head size
    u16  number of networks
    per network: u16 number of dims, then u32 per dim
    float64 parameters, network by network, each layer as W (row-major,
    fan_in x fan_out) then b
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .dqn import DqnAgent, DqnConfig
from .nn import Mlp
from .ppo import PpoAgent, PpoConfig

MAGIC = b"PRBCKPT\0"
VERSION = 1
KINDS = {"ppo": 1, "dqn": 2}
MODES = {"factorised": 0, "joint": 1, "shared": 2}


class CheckpointError(ValueError):
    pass


class CheckpointFormatError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointKindError(CheckpointError):
    pass


def _nets(agent) -> list[Mlp]:
    return [agent.actor, agent.critic] if agent.kind == "ppo" else [agent.qnet]


def dumps(agent) -> bytes:
    mode = "factorised" if agent.kind == "ppo" else agent.config.action_mode
    out = [MAGIC, struct.pack("<HBB", VERSION, KINDS[agent.kind], MODES[mode])]
    out.append(struct.pack(f"<H{len(agent.head_sizes)}I", len(agent.head_sizes), *agent.head_sizes))
    nets = _nets(agent)
    out.append(struct.pack("<H", len(nets)))
    for net in nets:
        out.append(struct.pack(f"<H{len(net.dims)}I", len(net.dims), *net.dims))
    for net in nets:
        for p in net.params:
            out.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
    return b"".join(out)


def save_policy(agent, path) -> None:
    Path(path).write_bytes(dumps(agent))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise CheckpointTruncatedError(f"checkpoint ends at byte {len(self.data)}, needed {self.pos + size}")
        vals = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return vals

    def array(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        (raw,) = self.take(f"<{8 * n}s")
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)


def loads(data: bytes, kind: str | None = None):
    if len(data) < len(MAGIC):
        raise CheckpointTruncatedError("checkpoint shorter than its header")
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointFormatError("not a policy checkpoint (bad magic bytes)")
    r = _Reader(data)
    r.pos = len(MAGIC)
    version, kind_code, mode_code = r.take("<HBB")
    if version != VERSION:
        raise CheckpointVersionError(f"checkpoint format version {version}, expected {VERSION}")
    names = {v: k for k, v in KINDS.items()}
    modes = {v: k for k, v in MODES.items()}
    if kind_code not in names or mode_code not in modes:
        raise CheckpointFormatError(f"unknown agent kind {kind_code} or action mode {mode_code}")
    (n_heads,) = r.take("<H")
    heads = list(r.take(f"<{n_heads}I"))
    (n_nets,) = r.take("<H")
    dims = []
    for _ in range(n_nets):
        (n_dims,) = r.take("<H")
        dims.append(list(r.take(f"<{n_dims}I")))
    nets = []
    for d in dims:
        net = Mlp(d)
        net.params = []
        for a, b in zip(d[:-1], d[1:]):
            net.params += [r.array((a, b)), r.array((b,))]
        nets.append(net)
    if r.pos != len(data):
        raise CheckpointFormatError(f"{len(data) - r.pos} trailing bytes after parameters")

    found = names[kind_code]
    if kind is not None and kind != found:
        raise CheckpointKindError(f"checkpoint holds a {found} policy, not {kind}")
    return _build(found, modes[mode_code], heads, nets)


def _build(kind: str, mode: str, heads: list[int], nets: list[Mlp]):
    if kind == "ppo":
        if len(nets) != 2 or nets[0].dims[-1] != sum(heads) or nets[1].dims[-1] != 1:
            raise CheckpointKindError("PPO checkpoint needs an actor with one logit per head entry and a scalar critic")
        agent = PpoAgent(nets[0].dims[0], heads, PpoConfig(hidden=tuple(nets[0].dims[1:-1])), seed=None)
        agent.actor, agent.critic = nets
        agent.optimizer.params = agent.actor.params + agent.critic.params
        agent.optimizer.__post_init__()
        return agent
    cfg = DqnConfig(action_mode=mode, hidden=tuple(nets[0].dims[1:-1]))
    agent = DqnAgent(nets[0].dims[0], heads, cfg, seed=None)
    if len(nets) != 1 or nets[0].dims[-1] != agent.n_actions:
        raise CheckpointKindError(f"DQN checkpoint needs {agent.n_actions} Q outputs")
    agent.qnet = nets[0]
    agent.target = nets[0].copy()
    agent.optimizer.params = agent.qnet.params
    agent.optimizer.__post_init__()
    return agent


def load_policy(path, kind: str | None = None):
    return loads(Path(path).read_bytes(), kind)
