import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from prbcoord.env import (
    EnvConfig,
    EpisodeOver,
    InterferenceEnv,
    decode_observation,
    generate_episode,
    satisfaction_reward,
    total_reward,
    utilization_reward,
)


@pytest.fixture
def env():
    return InterferenceEnv(EnvConfig())


def test_satisfaction_examples():
    assert satisfaction_reward(1e6, 1e6) == pytest.approx(1.0, abs=1e-12)
    assert satisfaction_reward(0.0, 1e6) == 0.0
    assert satisfaction_reward(2e6, 1e6) == 1.0


@pytest.mark.parametrize("args, out", [((5, 0.05, 20, 20), 0.25), ((5, 0.05, 0, 20), 0.0), ((5, 0.05, 10, 20), 0.125)])
def test_utilization_examples(args, out):
    assert utilization_reward(*args) == pytest.approx(out, abs=1e-12)


def test_total_reward_examples():
    assert total_reward([1.0] * 5, [0.25, 0.25]) == pytest.approx(5.5, abs=1e-12)
    assert total_reward([0.0] * 5, [0.0, 0.0]) == 0.0
    assert total_reward([1, 1, 1, 0, 0], [0.125, 0.0]) == pytest.approx(3.125, abs=1e-12)


def test_same_seed_same_observation():
    a = InterferenceEnv().reset(seed=[4, 0, 0])
    b = InterferenceEnv().reset(seed=[4, 0, 0])
    assert np.array_equal(a, b)
    assert a.shape == (20,)


def test_episode_length_and_done(env):
    env.reset(seed=1)
    for i in range(100):
        out = env.step([10, 10])
        assert out.done == (i == 99)
    with pytest.raises(EpisodeOver):
        env.step([10, 10])


def test_action_range_validated(env):
    env.reset(seed=1)
    with pytest.raises(ValueError):
        env.step([21, 0])
    with pytest.raises(ValueError):
        env.step([5])


@pytest.mark.parametrize("action, budgets", [((20, 20), (52, 32, 32)), ((0, 0), (12, 52, 52))])
def test_action_sets_budgets(env, action, budgets):
    env.reset(seed=2)
    plan = env.apply_action(action)
    for cid, b in zip((1, 2, 3), budgets):
        assert plan.cell_totals[cid] <= b


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 20), st.integers(0, 20), st.integers(0, 1000))
def test_step_invariants(a0, a1, seed):
    env = InterferenceEnv()
    env.reset(seed=seed)
    out = env.step([a0, a1])
    n = env.n_users
    assert out.lost_prbs == 0
    assert all(0.0 <= r <= 1.0 for r in out.satisfaction.values())
    assert all(0.0 <= r <= n * 0.05 for r in out.utilization.values())
    assert out.reward == pytest.approx(total_reward(out.satisfaction.values(), out.utilization.values()), abs=1e-12)
    assert out.utilization == pytest.approx({0: n * 0.05 * a0 / 20, 1: n * 0.05 * a1 / 20})
    for u in out.violations:
        assert out.violations[u] == (out.achieved[u] < out.requested[u])


def test_observation_round_trip(env):
    cfg = env.config
    obs = env.reset(seed=9)
    services, rates, pl = decode_observation(cfg, obs)
    tr = env._trace
    assert services == [u.profile.service for u in cfg.users]
    np.testing.assert_allclose(rates, tr.rates[0], rtol=1e-9)
    np.testing.assert_allclose(pl, tr.pathloss[0], rtol=1e-9)
    feats = obs.reshape(5, 4)
    assert np.all((feats[:, 3] >= 0) & (feats[:, 3] <= 1))


def test_trace_reproducible_and_in_range():
    cfg = EnvConfig()
    a, b = generate_episode(cfg, [1, 2, 3]), generate_episode(cfg, [1, 2, 3])
    for f in dataclasses.fields(a):
        assert np.array_equal(getattr(a, f.name), getattr(b, f.name))
    assert a.rates.shape == (101, 5)
    assert np.all(np.hypot(a.positions[..., 0], a.positions[..., 1]) <= 200.0 + 1e-6)
    for i, u in enumerate(cfg.users):
        lo, hi = u.profile.rate_range
        assert np.all((a.rates[:, i] >= lo) & (a.rates[:, i] <= hi))
    step = np.hypot(*(a.positions[1:] - a.positions[:-1]).transpose(2, 0, 1))
    assert np.all(step <= 150.0 + 1e-6)


def test_trajectory_independent_of_actions():
    e1, e2 = InterferenceEnv(), InterferenceEnv()
    e1.reset(seed=5)
    e2.reset(seed=5)
    for _ in range(10):
        o1 = e1.step([0, 0])
        o2 = e2.step([20, 20])
        assert o1.requested == o2.requested
        assert np.array_equal(o1.observation, o2.observation)


def test_config_rejects_unknown_cell():
    from prbcoord.traffic import SDR_EMBB, UserSpec
    with pytest.raises(ValueError):
        EnvConfig(users=(UserSpec(0, SDR_EMBB, 9),))
