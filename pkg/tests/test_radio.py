import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from prbcoord.radio import (
    DEFAULT_RADIO,
    MobilityState,
    achieved_throughput,
    calibrate_throughput,
    pathloss_from_distance,
    sample_position,
    scaling_factor,
    step_mobility,
)

R = DEFAULT_RADIO


def test_pathloss_at_189m_is_reference():
    assert pathloss_from_distance(189.0) == pytest.approx(83.3, abs=0.1)


def test_pathloss_at_1km():
    assert pathloss_from_distance(1000.0) == pytest.approx(97.76, abs=0.005)
    assert pathloss_from_distance(1000.0) == pytest.approx(oracles.free_space_db(1000.0), abs=1e-9)


@given(st.floats(1.0, 5000.0))
def test_pathloss_doubling_adds_6db(d):
    delta = pathloss_from_distance(2 * d) - pathloss_from_distance(d)
    assert delta == pytest.approx(20 * math.log10(2), abs=1e-9)


def test_pathloss_clamps_distance_below_one_metre():
    assert pathloss_from_distance(0.0) == pathloss_from_distance(1.0)


@pytest.mark.parametrize("pl, g", [(83.3, 1.0), (93.3, math.exp(-0.55)), (113.3, 0.5), (60.0, 1.0)])
def test_scaling_factor_values(pl, g):
    assert scaling_factor(pl) == pytest.approx(g, abs=1e-9)


def test_clamp_boundary():
    edge = 83.3 + math.log(2) / 0.055
    assert edge - 83.3 == pytest.approx(12.6, abs=0.01)
    assert scaling_factor(edge) == pytest.approx(0.5, abs=1e-9)
    assert scaling_factor(edge - 0.5) > 0.5
    assert scaling_factor(edge + 0.5) == 0.5


@given(st.floats(40.0, 150.0), st.floats(40.0, 150.0))
def test_scaling_bounded_and_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert 0.5 <= scaling_factor(hi) <= scaling_factor(lo) <= 1.0


def test_calibrate_examples():
    assert calibrate_throughput(1e6, 83.3) == 1e6
    assert calibrate_throughput(1e6, 93.3) == pytest.approx(576_950, abs=1)
    assert calibrate_throughput(0.0, 101.0) == 0.0


@given(st.floats(0, 1e7), st.floats(83.3, 150))
def test_calibrate_never_increases_above_reference(x, pl):
    assert calibrate_throughput(x, pl) <= x


def test_achieved_examples():
    assert achieved_throughput(10, 1e9, 83.3) == pytest.approx(687_500, abs=1e-9)
    assert achieved_throughput(4, 1e9, 83.3) == 0.0
    assert achieved_throughput(52, 100_000, 83.3) == 100_000


@given(st.integers(0, 52), st.floats(0, 1e7), st.floats(40, 120))
def test_achieved_bounded(n, demand, pl):
    assert achieved_throughput(n, demand, pl) <= min(demand, 52 * 550e3 / 8) + 1e-6


def test_straight_line_motion():
    s = step_mobility(MobilityState(0.0, 0.0, 0.0, 10.0), 1.0)
    assert (s.x, s.y) == pytest.approx((10.0, 0.0), abs=1e-12)
    s = step_mobility(MobilityState(0.0, 0.0, 0.0, 10.0), 0.5)
    assert math.hypot(s.x, s.y) == pytest.approx(5.0, abs=1e-12)


def test_reflection_at_edge():
    # heading straight out from 5 m inside the edge, 15 m of travel
    s = step_mobility(MobilityState(195.0, 0.0, 0.0, 10.0), 1.5, radius=200.0)
    assert (s.x, s.y) == pytest.approx((190.0, 0.0), abs=1e-9)
    assert math.cos(s.bearing) == pytest.approx(-1.0, abs=1e-12)
    assert s.speed == 10.0


def test_mobility_rejects_non_positive_dt():
    with pytest.raises(ValueError):
        step_mobility(MobilityState(0, 0, 0, 10), 0.0)


@given(st.floats(0, 199.0), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi), st.floats(0.1, 60.0))
def test_mobility_stays_in_disc_and_keeps_speed(r, theta, bearing, dt):
    s = MobilityState(r * math.cos(theta), r * math.sin(theta), bearing, 10.0)
    out = step_mobility(s, dt, 200.0)
    assert math.hypot(out.x, out.y) <= 200.0 + 1e-6
    assert out.speed == s.speed


def test_sample_position_uniform_over_area():
    rng = np.random.default_rng(3)
    d = np.array([math.hypot(*sample_position(rng)) for _ in range(20000)])
    assert d.max() <= 200.0
    # uniform over the disc: P(r < R/2) = 1/4
    assert np.mean(d < 100.0) == pytest.approx(0.25, abs=0.015)
