"""Positions, mobility, pathloss and the calibrated throughput model.

The simulator has no air interface. A user's deliverable rate is its
effective PRB count times the per-PRB rate at maximum MCS, scaled down by
the pathloss calibration curve and capped by what the user asked for.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RadioConfig:
    pl_ref_db: float = 83.3
    kappa: float = 5.5e-2
    g_min: float = 0.5
    rate_per_prb_bps: float = 550_000.0
    carrier_mhz: float = 1842.5
    pathloss_exponent: float = 2.0
    radius_m: float = 200.0
    speed_mps: float = 10.0
    min_prbs: int = 5

    @property
    def bytes_per_prb(self) -> float:
        return self.rate_per_prb_bps / 8.0


DEFAULT_RADIO = RadioConfig()


@dataclass(frozen=True)
class MobilityState:
    x: float
    y: float
    bearing: float
    speed: float = 10.0

    @property
    def distance(self) -> float:
        return math.hypot(self.x, self.y)


def pathloss_from_distance(d_m: float, radio: RadioConfig = DEFAULT_RADIO) -> float:
    """Free-space loss at the downlink carrier, distance clamped to >= 1 m."""
    d_km = max(d_m, 1.0) / 1000.0
    return (32.45 + 20.0 * math.log10(radio.carrier_mhz)
            + 10.0 * radio.pathloss_exponent * math.log10(d_km))


def pathloss_from_position(x: float, y: float, radio: RadioConfig = DEFAULT_RADIO) -> float:
    return pathloss_from_distance(math.hypot(x, y), radio)


def scaling_factor(pl_ue: float, radio: RadioConfig = DEFAULT_RADIO) -> float:
    return max(radio.g_min, min(1.0, math.exp(-radio.kappa * (pl_ue - radio.pl_ref_db))))


def calibrate_throughput(lambda_ach: float, pl_ue: float, radio: RadioConfig = DEFAULT_RADIO) -> float:
    return lambda_ach * scaling_factor(pl_ue, radio)


def raw_capacity(effective_prbs: int, radio: RadioConfig = DEFAULT_RADIO) -> float:
    """Bytes/s a link could carry on ``effective_prbs`` before pathloss."""
    return effective_prbs * radio.bytes_per_prb


def achieved_throughput(effective_prbs: int, demand_rate: float, pl_ue: float,
                        radio: RadioConfig = DEFAULT_RADIO) -> float:
    """Calibrated bytes/s delivered to a user in one step.

    Below the connectivity floor the user is detached and gets nothing.
    """
    if effective_prbs < radio.min_prbs:
        return 0.0
    return min(demand_rate, calibrate_throughput(raw_capacity(effective_prbs, radio), pl_ue, radio))


def sample_position(rng: np.random.Generator, radio: RadioConfig = DEFAULT_RADIO) -> tuple[float, float]:
    # uniform over the disc area
    r = radio.radius_m * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    return r * math.cos(theta), r * math.sin(theta)


def step_mobility(state: MobilityState, dt: float, radius: float = DEFAULT_RADIO.radius_m) -> MobilityState:
    """Straight-line walk with specular reflection at the coverage edge."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x, y = state.x, state.y
    dx, dy = math.cos(state.bearing), math.sin(state.bearing)
    left = state.speed * dt
    for _ in range(64):
        # distance along (dx, dy) to the circle boundary
        b = x * dx + y * dy
        c = x * x + y * y - radius * radius
        to_edge = -b + math.sqrt(max(b * b - c, 0.0))
        if left <= to_edge:
            x, y = x + dx * left, y + dy * left
            break
        x, y = x + dx * to_edge, y + dy * to_edge
        left -= to_edge
        nx, ny = x / radius, y / radius
        dot = dx * nx + dy * ny
        dx, dy = dx - 2.0 * dot * nx, dy - 2.0 * dot * ny
        # pull back onto the boundary to avoid drift past it
        r = math.hypot(x, y)
        if r > radius:
            x, y = x * radius / r, y * radius / r
    bearing = math.atan2(dy, dx) % (2.0 * math.pi)
    return MobilityState(x, y, bearing, state.speed)
