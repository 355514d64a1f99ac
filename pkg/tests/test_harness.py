import numpy as np
import pytest

import oracles
from prbcoord.env import EnvConfig, InterferenceEnv
from prbcoord.harness import (
    RECORD_COLUMNS,
    RecordsCsvError,
    evaluate,
    make_script,
    ordered_strategies,
    read_records_csv,
    relative_change,
    summarize,
    train,
    write_records_csv,
    write_summary_csv,
)

BASE = ["sa-va-pf", "sa-ca-pf", "nsa-pf"]


@pytest.fixture(scope="module")
def baseline_records():
    records, errors = evaluate(BASE, EnvConfig(), episodes=2, steps=10, seed=3)
    assert errors == {}
    return records


def test_record_count(baseline_records):
    assert len(baseline_records) == 3 * 2 * 10


def test_scripts_are_shared_across_strategies(baseline_records):
    by = {}
    for r in baseline_records:
        by.setdefault(r.strategy, []).append(r.requested)
    assert by["sa-va-pf"] == by["sa-ca-pf"] == by["nsa-pf"]


def test_coordinated_baselines_lose_nothing(baseline_records):
    for r in baseline_records:
        if r.strategy != "nsa-pf":
            assert r.lost_prbs == 0


def test_missing_policy_is_reported_and_others_run():
    records, errors = evaluate(["ppo", "sa-ca-pf"], EnvConfig(), episodes=1, steps=3, seed=0)
    assert set(errors) == {"ppo"}
    assert {r.strategy for r in records} == {"sa-ca-pf"}


def test_make_script_reproducible():
    a, b = make_script(EnvConfig(), 7, 2, 5), make_script(EnvConfig(), 7, 2, 5)
    assert all(np.array_equal(x.rates, y.rates) for x, y in zip(a.traces, b.traces))
    c = make_script(EnvConfig(), 8, 2, 5)
    assert not np.array_equal(a.traces[0].rates, c.traces[0].rates)


def test_relative_change():
    assert relative_change(92.4, 100) == pytest.approx(-7.6, abs=1e-9)
    assert relative_change(5, 0) is None


def test_summary_statistics_match_two_oracles(baseline_records):
    summary = {s.strategy: s for s in summarize(baseline_records)}
    for name in BASE:
        recs = [r for r in baseline_records if r.strategy == name]
        mbps = [r.aggregate * 8 / 1e6 for r in recs]
        lost = [r.lost_prbs for r in recs]
        for mean, std in (oracles.welford(mbps), oracles.two_pass(mbps)):
            assert summary[name].throughput_mean_mbps == pytest.approx(mean, abs=1e-9)
            assert summary[name].throughput_std_mbps == pytest.approx(std, abs=1e-9)
        assert summary[name].lost_prbs_mean == pytest.approx(oracles.two_pass(lost)[0], abs=1e-9)
        assert summary[name].qos_violations == sum(r.n_violations for r in recs)
    best = min(summary[n].qos_violations for n in BASE)
    for name in BASE:
        assert summary[name].qos_change_pct == pytest.approx(relative_change(summary[name].qos_violations, best))


def test_summarize_empty():
    assert summarize([]) == []


def test_ordered_strategies():
    assert ordered_strategies(["nsa-pf", "x", "ppo", "sa-ca-pf"]) == ["ppo", "sa-ca-pf", "nsa-pf", "x"]


def test_csv_round_trip(tmp_path, baseline_records):
    path = tmp_path / "records.csv"
    write_records_csv(baseline_records, path)
    assert path.read_text().splitlines()[0] == ",".join(RECORD_COLUMNS)
    totals = read_records_csv(path)
    for s in summarize(baseline_records):
        assert totals[s.strategy].qos_violations == s.qos_violations
        assert totals[s.strategy].lost_prbs == s.lost_prbs_total
        assert np.mean(totals[s.strategy].aggregate_mbps) == pytest.approx(s.throughput_mean_mbps, abs=1e-6)
    write_summary_csv(summarize(baseline_records), tmp_path / "summary.csv")
    assert len((tmp_path / "summary.csv").read_text().splitlines()) == 4


def test_bad_records_csv_names_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(",".join(RECORD_COLUMNS) + "\nppo,0,0,0,1,eMBB,1,1,5,5,zero,0,1\n")
    with pytest.raises(RecordsCsvError, match="row 2"):
        read_records_csv(path)
    path.write_text("nope\n")
    with pytest.raises(RecordsCsvError, match="row 1"):
        read_records_csv(path)


def test_train_curve_length_and_determinism():
    cfg = EnvConfig(episode_len=10)
    a = train("ppo", cfg, 6, seed=2)
    b = train("ppo", cfg, 6, seed=2)
    assert len(a.curve) == 6 and a.curve == b.curve
    d1, d2 = train("dqn", cfg, 3, seed=2), train("dqn", cfg, 3, seed=2)
    assert d1.curve == d2.curve


def test_train_rejects_unknown_kind():
    with pytest.raises(ValueError):
        train("a2c", EnvConfig(episode_len=2), 1, 0)


def _random_policy_mean(seed, episodes=20):
    env = InterferenceEnv()
    rng = np.random.default_rng(seed)
    totals = []
    for ep in range(episodes):
        env.reset(seed=[seed, 9, ep])
        total = 0.0
        while not env.done:
            total += env.step(rng.integers(0, 21, size=2)).reward
        totals.append(total)
    return float(np.mean(totals))


@pytest.mark.slow
def test_trained_ppo_beats_random_policy(trained_ppo):
    env = InterferenceEnv()
    totals = []
    for ep in range(20):
        obs = env.reset(seed=[0, 9, ep])
        total = 0.0
        while not env.done:
            out = env.step(trained_ppo.agent.greedy(obs))
            total += out.reward
            obs = out.observation
        totals.append(total)
    assert np.mean(totals) > _random_policy_mean(0)
