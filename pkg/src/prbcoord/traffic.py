"""Service profiles, per-step demand sampling, demand to PRB need."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .radio import DEFAULT_RADIO, RadioConfig, calibrate_throughput, raw_capacity, scaling_factor

EMBB = "eMBB"
MMTC = "mMTC"
SERVICE_CLASSES = (EMBB, MMTC)


@dataclass(frozen=True)
class ServiceProfile:
    name: str
    service: str
    demand_lo: float  # bytes per burst
    demand_hi: float
    frequency: float  # bursts per second
    prb_lo: int
    prb_hi: int

    def __post_init__(self):
        if self.service not in SERVICE_CLASSES:
            raise ValueError(f"profile {self.name}: unknown service class {self.service!r}")
        if not 0 <= self.demand_lo <= self.demand_hi:
            raise ValueError(f"profile {self.name}: need 0 <= demand_lo <= demand_hi")
        if self.frequency <= 0:
            raise ValueError(f"profile {self.name}: frequency must be positive")

    @property
    def rate_range(self) -> tuple[float, float]:
        return self.demand_lo * self.frequency, self.demand_hi * self.frequency


@dataclass(frozen=True)
class UserSpec:
    user_id: int
    profile: ServiceProfile
    cell_id: int


@dataclass(frozen=True)
class DemandSample:
    burst_bytes: float
    rate: float  # bytes/s, the requested throughput for the step


SDR_EMBB = ServiceProfile("SDR eMBB", EMBB, 1.5e6, 3.5e6, 1.0, 20, 49)
VIR_EMBB = ServiceProfile("VIR eMBB", EMBB, 907e3, 3.1e6, 1.0, 12, 44)
VIR_MMTC = ServiceProfile("VIR mMTC", MMTC, 37.5e3, 62.5e3, 4.0, 5, 5)


def default_profiles() -> list[ServiceProfile]:
    """Profiles of UE0..UE4 in user order."""
    return [SDR_EMBB, VIR_EMBB, VIR_MMTC, VIR_EMBB, VIR_MMTC]


def default_users() -> list[UserSpec]:
    # gNB1 carries only an eMBB slice; gNB2 and gNB3 carry eMBB + mMTC
    cells = [1, 2, 2, 3, 3]
    return [UserSpec(i, p, c) for i, (p, c) in enumerate(zip(default_profiles(), cells))]


def sample_demand(profile: ServiceProfile, rng: np.random.Generator) -> DemandSample:
    burst = profile.demand_lo + (profile.demand_hi - profile.demand_lo) * rng.random()
    return DemandSample(burst, burst * profile.frequency)


def demand_to_prbs(rate: float, pl_ue: float, radio: RadioConfig = DEFAULT_RADIO,
                   max_prbs: int = 52) -> int:
    """Fewest PRBs whose calibrated capacity covers ``rate``, within [floor, max]."""
    if rate < 0:
        raise ValueError(f"rate must be non-negative, got {rate}")
    per_prb = radio.bytes_per_prb * scaling_factor(pl_ue, radio)
    n = math.ceil(rate / per_prb)
    # guard against float rounding leaving the capacity a hair short
    while calibrate_throughput(raw_capacity(n, radio), pl_ue, radio) < rate:
        n += 1
    while n > 0 and calibrate_throughput(raw_capacity(n - 1, radio), pl_ue, radio) >= rate:
        n -= 1
    return min(max(n, radio.min_prbs), max_prbs)
