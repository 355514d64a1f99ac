"""Baseline schedulers and the per-cell proportional PRB split.

Every strategy ends in an :class:`AllocationPlan` that has been passed
through :func:`apply_interference`; only the uncoordinated scheduler can
produce a non-zero loss, the others confine each cell to its own share of
every overlap region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .radio import DEFAULT_RADIO, RadioConfig, scaling_factor
from .spectrum import (
    AllocationPlan,
    SpectrumTopology,
    apply_interference,
    largest_remainder,
    make_plan,
)
from .traffic import SERVICE_CLASSES


class InfeasibleFloorError(ValueError):
    def __init__(self, budget: int, n_users: int, floor: int):
        super().__init__(f"budget of {budget} PRBs cannot give {n_users} users {floor} PRBs each")
        self.budget = budget
        self.n_users = n_users
        self.floor = floor
        self.shortfall = floor * n_users - budget


@dataclass(frozen=True)
class DemandView:
    user_id: int
    cell_id: int
    service: str
    prb_need: int
    rate: float
    pathloss: float


@dataclass(frozen=True)
class SliceConfig:
    service: str
    n_min: int = 5
    n_max: int | None = None  # None: cell budget minus the other slices' n_min

    def __post_init__(self):
        if self.n_min < 5:
            raise ValueError(f"slice {self.service}: n_min must be at least 5")
        if self.n_max is not None and self.n_max < self.n_min:
            raise ValueError(f"slice {self.service}: n_max below n_min")


DEFAULT_SLICES = tuple(SliceConfig(s) for s in SERVICE_CLASSES)


@dataclass
class PfState:
    """Exponentially averaged served rate per user, owned by the caller."""

    beta: float = 0.1
    warmup: float = 1.0
    avg_rate: dict[int, float] = field(default_factory=dict)

    def get(self, user_id: int) -> float:
        return self.avg_rate.get(user_id, self.warmup)

    def update(self, served: dict[int, float]) -> None:
        for u, r in served.items():
            self.avg_rate[u] = max((1.0 - self.beta) * self.get(u) + self.beta * r, self.warmup)


def proportional_distribute(budget: int, needs: Sequence[int], floor: int = 5,
                            strict: bool = True) -> list[int]:
    """Floors first, then the remainder in proportion to need above the floor.

    Nobody is pushed past their need; PRBs left once every need is met
    stay unassigned. If the budget cannot cover the floors, ``strict``
    raises, otherwise floors go out in user order until the budget runs
    dry and the rest get nothing.
    """
    n = len(needs)
    if budget < floor * n:
        if strict:
            raise InfeasibleFloorError(budget, n, floor)
        k = budget // floor if floor > 0 else n
        return [floor if i < k else 0 for i in range(n)]
    extra = [max(need - floor, 0) for need in needs]
    rest = budget - floor * n
    if sum(extra) <= rest:
        return [floor + e for e in extra]
    return [floor + s for s in largest_remainder(rest, extra)]


def _by_cell(views: Sequence[DemandView], topology: SpectrumTopology) -> dict[int, list[DemandView]]:
    out: dict[int, list[DemandView]] = {cid: [] for cid in topology.cell_ids}
    for v in sorted(views, key=lambda v: v.user_id):
        out[v.cell_id].append(v)
    return out


def nsa_pf(views: Sequence[DemandView], topology: SpectrumTopology, floor: int = 5) -> AllocationPlan:
    """Every cell schedules on its full carrier without looking at neighbours."""
    grants = {}
    for cid, cell_views in _by_cell(views, topology).items():
        if not cell_views:
            continue
        needs = [max(v.prb_need, floor) for v in cell_views]
        total = min(sum(needs), topology.cell(cid).prb_count)
        for v, g in zip(cell_views, proportional_distribute(total, needs, floor, strict=False)):
            grants[v.user_id] = g
    plan = make_plan(grants, {v.user_id: v.cell_id for v in views}, topology)
    plan.hi_shares = {r.region_id: plan.shared_used.get((r.region_id, r.cell_hi), 0)
                      for r in topology.regions}
    return apply_interference(plan, topology)


@dataclass(frozen=True)
class Partition:
    shares: dict[tuple[int, int], int]  # (region_id, cell_id) -> PRBs
    budgets: dict[int, int]

    def caps(self, cell_id: int) -> dict[int, int]:
        return {rid: n for (rid, cid), n in self.shares.items() if cid == cell_id}

    def hi_shares(self, topology: SpectrumTopology) -> dict[int, int]:
        return {r.region_id: self.shares[(r.region_id, r.cell_hi)] for r in topology.regions}


def partition_from_hi_shares(topology: SpectrumTopology, hi_shares: dict[int, int]) -> Partition:
    """Give ``hi_shares[region]`` PRBs to the higher-priority member, the rest to the other."""
    shares = {}
    for r in topology.regions:
        a = hi_shares[r.region_id]
        if not 0 <= a <= r.size_prbs:
            raise ValueError(f"region {r.region_id}: share {a} outside [0, {r.size_prbs}]")
        shares[(r.region_id, r.cell_hi)] = a
        shares[(r.region_id, r.cell_lo)] = r.size_prbs - a
    budgets = {
        cid: topology.private_size(cid) + sum(n for (_, c), n in shares.items() if c == cid)
        for cid in topology.cell_ids
    }
    return Partition(shares, budgets)


def static_partition(topology: SpectrumTopology, hi_fraction: float = 0.5) -> Partition:
    return partition_from_hi_shares(
        topology,
        {r.region_id: int(math.floor(r.size_prbs * hi_fraction + 0.5)) for r in topology.regions},
    )


def _coordinated_plan(grants: dict[int, int], views: Sequence[DemandView], partition: Partition,
                      topology: SpectrumTopology) -> AllocationPlan:
    caps = {cid: partition.caps(cid) for cid in topology.cell_ids}
    plan = make_plan(grants, {v.user_id: v.cell_id for v in views}, topology, caps,
                     partition.hi_shares(topology))
    return apply_interference(plan, topology)


def sa_ca_pf(views: Sequence[DemandView], partition: Partition, topology: SpectrumTopology,
             floor: int = 5) -> AllocationPlan:
    """Slice shares follow network-wide slice demand; users in a slice split evenly."""
    aggregate = {s: 0.0 for s in SERVICE_CLASSES}
    for v in views:
        aggregate[v.service] += v.rate
    grants = {}
    for cid, cell_views in _by_cell(views, topology).items():
        if not cell_views:
            continue
        budget = partition.budgets[cid]
        if budget < floor * len(cell_views):
            raise InfeasibleFloorError(budget, len(cell_views), floor)
        slices = [s for s in SERVICE_CLASSES if any(v.service == s for v in cell_views)]
        members = {s: [v for v in cell_views if v.service == s] for s in slices}
        floors = [floor * len(members[s]) for s in slices]
        extra = largest_remainder(budget - sum(floors), [aggregate[s] for s in slices])
        for s, f, e in zip(slices, floors, extra):
            if aggregate[s] <= 0:
                e = 0
            users = members[s]
            even = largest_remainder(f + e, [1.0] * len(users))
            for v, g in zip(users, even):
                grants[v.user_id] = g
    return _coordinated_plan(grants, views, partition, topology)


def sa_va_pf(views: Sequence[DemandView], partition: Partition, topology: SpectrumTopology,
             pf_state: PfState, slices: Sequence[SliceConfig] = DEFAULT_SLICES,
             radio: RadioConfig = DEFAULT_RADIO, floor: int = 5) -> AllocationPlan:
    """PRB-by-PRB proportional fair fill inside slice guardrails.

    ``pf_state`` is read here; the caller updates it once the step's
    served rates are known.
    """
    cfg = {s.service: s for s in slices}
    grants = {}
    for cid, cell_views in _by_cell(views, topology).items():
        if not cell_views:
            continue
        budget = partition.budgets[cid]
        if budget < floor * len(cell_views):
            raise InfeasibleFloorError(budget, len(cell_views), floor)
        active = sorted({v.service for v in cell_views}, key=SERVICE_CLASSES.index)
        n_min = {s: cfg[s].n_min for s in active}
        n_max = {}
        for s in active:
            derived = budget - sum(n_min[o] for o in active if o != s)
            n_max[s] = derived if cfg[s].n_max is None else min(cfg[s].n_max, derived)

        inst = {v.user_id: radio.bytes_per_prb * scaling_factor(v.pathloss, radio) for v in cell_views}
        g = {v.user_id: floor for v in cell_views}
        used = {s: floor * sum(v.service == s for v in cell_views) for s in active}
        left = budget - sum(g.values())

        def metric(v):
            # average as it would stand if the step ended with the current grant,
            # so PRBs already handed out this step count against the user
            u = v.user_id
            provisional = (1.0 - pf_state.beta) * pf_state.get(u) + pf_state.beta * inst[u] * g[u]
            return inst[u] / provisional

        def pick(candidates):
            return max(candidates, key=lambda v: (metric(v), -v.user_id))

        # lift any slice still under its guaranteed minimum
        for s in active:
            members = [v for v in cell_views if v.service == s]
            while used[s] < n_min[s] and left > 0:
                v = pick(members)
                g[v.user_id] += 1
                used[s] += 1
                left -= 1
        while left > 0:
            cands = [v for v in cell_views if g[v.user_id] < v.prb_need and used[v.service] < n_max[v.service]]
            if not cands:
                break
            v = pick(cands)
            g[v.user_id] += 1
            used[v.service] += 1
            left -= 1
        grants.update(g)
    return _coordinated_plan(grants, views, partition, topology)


def proportional_plan(views: Sequence[DemandView], partition: Partition, topology: SpectrumTopology,
                      floor: int = 5) -> AllocationPlan:
    """Split each cell's partitioned budget over its users by demand."""
    grants = {}
    for cid, cell_views in _by_cell(views, topology).items():
        if not cell_views:
            continue
        needs = [v.prb_need for v in cell_views]
        for v, g in zip(cell_views, proportional_distribute(partition.budgets[cid], needs, floor)):
            grants[v.user_id] = g
    return _coordinated_plan(grants, views, partition, topology)
