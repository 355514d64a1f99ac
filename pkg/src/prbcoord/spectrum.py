"""Frequency-domain PRB layout, overlap regions and interference loss.

Cells sit on a single frequency axis in the order they are declared. Two
neighbouring cells may share a block of PRBs (an overlap region); any PRB
index used by both members in the same interval is lost for both.

Each cell fills its own private PRBs first, then its overlap regions in
ascending frequency order. Inside a region a cell fills outward from its
private block, so the two members approach each other from opposite ends
and collide only once their combined usage exceeds the region size.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

MAX_CELL_PRBS = 52


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class CellSpectrum:
    cell_id: int
    prb_start: int
    prb_count: int
    priority: int

    @property
    def prb_stop(self) -> int:
        return self.prb_start + self.prb_count


@dataclass(frozen=True)
class OverlapRegion:
    region_id: int
    cell_hi: int
    cell_lo: int
    size_prbs: int
    prb_start: int

    @property
    def prb_stop(self) -> int:
        return self.prb_start + self.size_prbs

    @property
    def prb_indices(self) -> range:
        return range(self.prb_start, self.prb_stop)

    @property
    def members(self) -> tuple[int, int]:
        return (self.cell_hi, self.cell_lo)


@dataclass(frozen=True)
class SpectrumTopology:
    cells: tuple[CellSpectrum, ...]
    regions: tuple[OverlapRegion, ...]

    @property
    def total_prbs(self) -> int:
        return sum(c.prb_count for c in self.cells)

    @property
    def unique_prbs(self) -> int:
        return self.total_prbs - sum(r.size_prbs for r in self.regions)

    @property
    def cell_ids(self) -> list[int]:
        return [c.cell_id for c in self.cells]

    def cell(self, cell_id: int) -> CellSpectrum:
        for c in self.cells:
            if c.cell_id == cell_id:
                return c
        raise KeyError(f"unknown cell {cell_id}")

    def regions_of(self, cell_id: int) -> list[OverlapRegion]:
        """Regions a cell belongs to, in ascending frequency order."""
        return sorted(
            (r for r in self.regions if cell_id in r.members),
            key=lambda r: r.prb_start,
        )

    def private_size(self, cell_id: int) -> int:
        return self.cell(cell_id).prb_count - sum(r.size_prbs for r in self.regions_of(cell_id))

    def private_range(self, cell_id: int) -> range:
        c = self.cell(cell_id)
        lo, hi = c.prb_start, c.prb_stop
        for r in self.regions_of(cell_id):
            if r.prb_start == c.prb_start:
                lo = r.prb_stop
            if r.prb_stop == c.prb_stop:
                hi = r.prb_start
        return range(lo, hi)

    @property
    def top_cell(self) -> int:
        return min(self.cells, key=lambda c: c.priority).cell_id


def build_topology(
    cell_specs: Sequence[tuple[int, int, int]],
    overlap_spec: Iterable[tuple[tuple[int, int], int]] = (),
) -> SpectrumTopology:
    """Lay cells out along the frequency axis.

    ``cell_specs`` holds ``(cell_id, prb_count, priority)`` in ascending
    frequency order; ``overlap_spec`` holds ``((cell_a, cell_b), size)``
    for cells that are neighbours in that order.
    """
    if not cell_specs:
        raise TopologyError("at least one cell is required")
    ids = [cid for cid, _, _ in cell_specs]
    if len(set(ids)) != len(ids):
        raise TopologyError(f"duplicate cell ids in {ids}")
    for cid, count, _ in cell_specs:
        if count <= 0:
            raise TopologyError(f"cell {cid}: prb_count must be positive, got {count}")
    priorities = [p for _, _, p in cell_specs]
    if priorities.count(min(priorities)) != 1:
        raise TopologyError("exactly one cell must hold the highest priority")

    position = {cid: i for i, cid in enumerate(ids)}
    # overlap keyed by the lower-frequency neighbour's position
    gaps: dict[int, int] = {}
    for (a, b), size in overlap_spec:
        if a == b:
            raise TopologyError(f"cell {a} cannot overlap itself")
        if a not in position or b not in position:
            raise TopologyError(f"overlap ({a}, {b}) references an unknown cell")
        if size <= 0:
            raise TopologyError(f"overlap ({a}, {b}): size must be positive, got {size}")
        i, j = sorted((position[a], position[b]))
        if j != i + 1:
            raise TopologyError(f"overlap ({a}, {b}): cells are not frequency neighbours")
        if i in gaps:
            raise TopologyError(f"overlap ({a}, {b}) declared twice")
        gaps[i] = size

    counts = [count for _, count, _ in cell_specs]
    for i, size in gaps.items():
        if size > min(counts[i], counts[i + 1]):
            raise TopologyError(f"overlap of {size} PRBs exceeds a member cell's budget")
    for i in range(len(ids)):
        if gaps.get(i - 1, 0) + gaps.get(i, 0) > counts[i]:
            raise TopologyError(f"cell {ids[i]}: overlap regions collide in absolute indices")

    cells = []
    start = 0
    for i, (cid, count, prio) in enumerate(cell_specs):
        if i > 0:
            start = cells[-1].prb_stop - gaps.get(i - 1, 0)
        cells.append(CellSpectrum(cid, start, count, prio))

    regions = []
    for rid, i in enumerate(sorted(gaps)):
        a, b = cells[i], cells[i + 1]
        hi, lo = (a, b) if a.priority < b.priority else (b, a)
        if a.priority == b.priority:
            raise TopologyError(f"cells {a.cell_id} and {b.cell_id} share a region but have equal priority")
        regions.append(OverlapRegion(rid, hi.cell_id, lo.cell_id, gaps[i], b.prb_start))
    return SpectrumTopology(tuple(cells), tuple(regions))


def default_topology(cell_prbs: int = 52, region_prbs: int = 20) -> SpectrumTopology:
    """gNB2 (low), gNB1 (middle, top priority), gNB3 (high)."""
    return build_topology(
        [(2, cell_prbs, 2), (1, cell_prbs, 1), (3, cell_prbs, 3)],
        [((1, 2), region_prbs), ((1, 3), region_prbs)],
    )


def split_private_shared(
    cell_id: int,
    total_alloc: int,
    topology: SpectrumTopology,
    caps: dict[int, int] | None = None,
) -> tuple[int, dict[int, int]]:
    """Private PRBs first, then each region in ascending frequency.

    ``caps`` limits the usable part of a region (region_id -> PRBs), as
    set by a coordinated split; by default the whole region is usable.
    """
    private = min(total_alloc, topology.private_size(cell_id))
    left = total_alloc - private
    shared = {}
    for r in topology.regions_of(cell_id):
        cap = r.size_prbs if caps is None else caps.get(r.region_id, r.size_prbs)
        take = min(left, cap)
        shared[r.region_id] = take
        left -= take
    return private, shared


def prb_loss(shared_hi: int, shared_lo: int, region_size: int) -> int:
    return max(0, shared_hi + shared_lo - region_size)


def occupied_indices(cell_id: int, private_used: int, shared_used: dict[int, int],
                     topology: SpectrumTopology) -> set[int]:
    """Absolute PRB indices a cell occupies under the outward fill rule."""
    priv = topology.private_range(cell_id)
    used = set(priv[:private_used])
    for r in topology.regions_of(cell_id):
        n = shared_used.get(r.region_id, 0)
        if r.prb_stop <= priv.start:
            # region below the private block: fill downward
            used.update(range(r.prb_stop - n, r.prb_stop))
        else:
            used.update(range(r.prb_start, r.prb_start + n))
    return used


def largest_remainder(total: int, weights: Sequence[float]) -> list[int]:
    """Split ``total`` integer units proportionally to ``weights``.

    Ties in the fractional part go to the lowest index. All-zero weights
    give all zeros.
    """
    s = float(sum(weights))
    if total <= 0 or s <= 0:
        return [0] * len(weights)
    exact = [total * w / s for w in weights]
    out = [int(e) for e in exact]
    short = total - sum(out)
    order = sorted(range(len(weights)), key=lambda i: (-(exact[i] - out[i]), i))
    for i in order[:short]:
        out[i] += 1
    return out


@dataclass
class AllocationPlan:
    """PRB usage of every cell and user for one scheduling interval.

    ``hi_shares`` records, per region, how many shared PRBs were set aside
    for the higher-priority member (the utilisation reward reads it).
    """

    cell_totals: dict[int, int]
    private_used: dict[int, int]
    shared_used: dict[tuple[int, int], int]
    user_grants: dict[int, int]
    user_cell: dict[int, int]
    hi_shares: dict[int, int] = field(default_factory=dict)
    region_loss: dict[int, int] = field(default_factory=dict)
    cell_effective: dict[int, int] = field(default_factory=dict)
    user_effective: dict[int, int] = field(default_factory=dict)

    @property
    def system_loss(self) -> int:
        """Lost PRBs counted once per affected cell."""
        return 2 * sum(self.region_loss.values())

    def cell_users(self, cell_id: int) -> list[int]:
        return sorted(u for u, c in self.user_cell.items() if c == cell_id)


def make_plan(
    grants: dict[int, int],
    user_cell: dict[int, int],
    topology: SpectrumTopology,
    caps: dict[int, dict[int, int]] | None = None,
    hi_shares: dict[int, int] | None = None,
) -> AllocationPlan:
    """Build a plan from per-user grants; ``caps`` is per cell, per region."""
    totals, private, shared = {}, {}, {}
    for cid in topology.cell_ids:
        tot = sum(g for u, g in grants.items() if user_cell[u] == cid)
        if tot > topology.cell(cid).prb_count:
            raise ValueError(f"cell {cid}: {tot} PRBs granted, budget {topology.cell(cid).prb_count}")
        p, s = split_private_shared(cid, tot, topology, None if caps is None else caps.get(cid))
        if p + sum(s.values()) != tot:
            raise ValueError(f"cell {cid}: {tot} PRBs do not fit the usable spectrum")
        totals[cid], private[cid] = tot, p
        for rid, n in s.items():
            shared[(rid, cid)] = n
    return AllocationPlan(totals, private, shared, dict(grants), dict(user_cell),
                          hi_shares=dict(hi_shares or {}))


def apply_interference(plan: AllocationPlan, topology: SpectrumTopology) -> AllocationPlan:
    region_loss = {}
    cell_loss = {cid: 0 for cid in topology.cell_ids}
    for r in topology.regions:
        lost = prb_loss(plan.shared_used.get((r.region_id, r.cell_hi), 0),
                        plan.shared_used.get((r.region_id, r.cell_lo), 0), r.size_prbs)
        region_loss[r.region_id] = lost
        cell_loss[r.cell_hi] += lost
        cell_loss[r.cell_lo] += lost

    cell_eff = {cid: max(0, plan.cell_totals[cid] - cell_loss[cid]) for cid in topology.cell_ids}
    user_eff = dict(plan.user_grants)
    for cid in topology.cell_ids:
        if cell_loss[cid] == 0:
            continue
        users = plan.cell_users(cid)
        grants = [plan.user_grants[u] for u in users]
        n_shared = sum(plan.shared_used.get((r.region_id, cid), 0) for r in topology.regions_of(cid))
        user_shared = largest_remainder(n_shared, grants)
        user_lost = largest_remainder(cell_loss[cid], user_shared)
        for u, lost in zip(users, user_lost):
            user_eff[u] = max(0, user_eff[u] - lost)
    return replace(plan, region_loss=region_loss, cell_effective=cell_eff, user_effective=user_eff)
