import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from prbcoord.radio import achieved_throughput
from prbcoord.traffic import (
    SDR_EMBB,
    VIR_MMTC,
    ServiceProfile,
    default_profiles,
    default_users,
    demand_to_prbs,
    sample_demand,
)


def test_mmtc_rate_range():
    assert VIR_MMTC.rate_range == pytest.approx((150_000, 250_000))


def test_sdr_max():
    assert SDR_EMBB.rate_range[1] == 3.5e6


def test_constant_profile():
    p = ServiceProfile("c", "eMBB", 1e6, 1e6, 1.0, 10, 10)
    rng = np.random.default_rng(0)
    assert {sample_demand(p, rng).rate for _ in range(5)} == {1e6}


def test_invalid_profile():
    with pytest.raises(ValueError):
        ServiceProfile("x", "eMBB", 2e6, 1e6, 1.0, 5, 5)
    with pytest.raises(ValueError):
        ServiceProfile("x", "URLLC", 1e6, 2e6, 1.0, 5, 5)


def test_same_seed_same_samples():
    a = [sample_demand(SDR_EMBB, np.random.default_rng(7)).rate for _ in range(3)]
    b = [sample_demand(SDR_EMBB, np.random.default_rng(7)).rate for _ in range(3)]
    assert a == b


def test_sdr_mean_burst():
    rng = np.random.default_rng(11)
    m = np.mean([sample_demand(SDR_EMBB, rng).burst_bytes for _ in range(100_000)])
    assert m == pytest.approx(2.5e6, rel=0.02)


def test_default_users():
    users = default_users()
    assert [u.cell_id for u in users] == [1, 2, 2, 3, 3]
    assert [u.profile.service for u in users] == ["eMBB", "eMBB", "mMTC", "eMBB", "mMTC"]
    assert len(default_profiles()) == 5


@pytest.mark.parametrize("rate, n", [(250_000, 5), (3.5e6, 51), (0.0, 5)])
def test_demand_to_prbs_examples(rate, n):
    assert demand_to_prbs(rate, 83.3) == n


def test_demand_to_prbs_rejects_negative():
    with pytest.raises(ValueError):
        demand_to_prbs(-1.0, 83.3)


@given(st.floats(0, 3.5e6), st.floats(60, 84))
def test_need_is_smallest_sufficient(rate, pl):
    n = demand_to_prbs(rate, pl)
    assert 5 <= n <= 52
    if n < 52:
        assert achieved_throughput(n, rate, pl) == rate
    if n > 5:
        assert achieved_throughput(n - 1, rate, pl) < rate
    assert n <= max(5, math.ceil(rate / 68_750 / 0.5) + 1)
