import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpdm.dm import OracleActor
from gpdm.gp import SnapshotError
from gpdm.harness import (CSV_COLUMNS, DEFAULT_HYPER, ConfigError, Environment, ExperimentConfig,
                          dialogue_rng, evaluate, evaluate_actor, load_learner, mean_ci,
                          moving_average, read_csv, run_seed, save_learner, thread_cap, train,
                          write_csv)
from gpdm.kernel import Point

from oracles import random_point


def _cfg(**kw):
    base = dict(domains=("SFR",), strategy="INDOM", train_dialogues=4, eval_dialogues=3,
                seeds=(0,), checkpoints=(0,))
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("kw, match", [
    (dict(strategy="BEST"), "strategy"),
    (dict(domains=()), "domain"),
    (dict(seeds=()), "seeds"),
    (dict(train_dialogues=0), "positive"),
    (dict(hyper={"lengthscale": 1}), "hyper"),
    (dict(domains=("XX",)), "unknown domain"),
    (dict(extend_domains=("L11",), extend_dialogues=5), "committee"),
    (dict(strategy="SCALE", extend_domains=("L11",)), "extend_dialogues"),
    (dict(checkpoints=(-1,)), "non-negative"),
    (dict(eval_domains=("L6",)), "evaluate"),
])
def test_config_validation(kw, match):
    with pytest.raises(ConfigError, match=match):
        _cfg(**kw)


def test_config_error_rate_validated():
    with pytest.raises(ValueError):
        _cfg(error_rate=2.0)


def test_config_json_round_trip(tmp_path):
    c = _cfg(strategy="SCALE", domains=("SFR", "SFH"), hyper={"sigma2": 3.0},
             extend_domains=("L11",), extend_dialogues=2)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(c.to_dict()))
    assert ExperimentConfig.from_json(p) == c
    with pytest.raises(ConfigError, match="keys"):
        ExperimentConfig.from_dict({**c.to_dict(), "colour": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"domains": ["SFR"]})


def test_schedule_and_hyper_defaults():
    assert _cfg(checkpoints=(0, 2, 9)).schedule() == (0, 2, 4)
    assert _cfg(checkpoints=None, train_dialogues=600).schedule() == (250, 500, 600)
    assert _cfg(hyper={"gamma": 0.5}).hyperparameters == {**DEFAULT_HYPER, "gamma": 0.5}


@pytest.mark.parametrize("rewards, window, expected", [
    ((0, 10, 20), 2, (0, 5, 15)),
    ((1, 2, 3, 4), 1, (1, 2, 3, 4)),
    ((4, 0, 2), 100, (4, 2, 2)),
])
def test_moving_average(rewards, window, expected):
    np.testing.assert_allclose(moving_average(rewards, window), expected)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-30, 30), min_size=1, max_size=50), st.integers(1, 10))
def test_moving_average_matches_loop(rewards, window):
    want = [np.mean(rewards[max(0, t - window + 1):t + 1]) for t in range(len(rewards))]
    np.testing.assert_allclose(moving_average(rewards, window), want, atol=1e-9)


def test_moving_average_rejects_bad_window():
    with pytest.raises(ValueError):
        moving_average([1.0], 0)


def test_mean_ci():
    m, h = mean_ci([1.0, 3.0])
    assert m == 2.0 and h == pytest.approx(1.96 * np.sqrt(2) / np.sqrt(2))
    assert mean_ci([5.0]) == (5.0, 0.0)
    with pytest.raises(ValueError):
        mean_ci([])


def test_ci_shrinks_like_inverse_sqrt_n():
    rng = np.random.default_rng(0)
    h1 = mean_ci(rng.normal(size=1_000))[1]
    h2 = mean_ci(rng.normal(size=16_000))[1]
    assert h1 / h2 == pytest.approx(4.0, rel=0.05)


def test_dialogue_streams_are_independent_of_order():
    a = dialogue_rng(3, "SFR", 1, 7).random()
    dialogue_rng(3, "SFH", 1, 7).random()
    assert a == dialogue_rng(3, "SFR", 1, 7).random()
    assert a != dialogue_rng(3, "SFR", 0, 7).random()


def test_evaluate_oracle_is_perfect():
    env = Environment(_cfg())
    st_ = evaluate_actor(env, OracleActor(), "SFR", 20, 0)
    assert st_.successes.all() and (st_.turns <= 30).all()
    rep = evaluate(OracleActor(), "SFR", 10, (0, 1), env, "ORACLE")
    assert rep.domains["SFR"]["success"] == 1.0 and len(rep.rows) == 2
    with pytest.raises(ValueError):
        evaluate_actor(env, OracleActor(), "SFR", 0, 0)


def test_gold_gets_n_times_the_data():
    r = run_seed(_cfg(strategy="GOLD", domains=("SFR", "SFH"), train_dialogues=3), 0)
    assert len(r.learning_curve["SFR"]) == len(r.learning_curve["SFH"]) == 6
    r = run_seed(_cfg(strategy="INDOM", domains=("SFR", "SFH"), train_dialogues=3), 0)
    assert len(r.learning_curve["SFR"]) == 3


def test_round_robin_counts_per_domain():
    r = run_seed(_cfg(strategy="GEN", domains=("SFR", "SFH"), checkpoints=(0, 2)), 0)
    assert [(x["domain"], x["train_dialogues"]) for x in r.rows] == [
        ("SFR", 0), ("SFH", 0), ("SFR", 2), ("SFH", 2), ("SFR", 4), ("SFH", 4)]
    (pol,) = r.learner.policies().values()
    assert pol.n_episodes == 8


def test_extension_adds_member_and_labels_rows():
    c = _cfg(strategy="SCALE", domains=("SFR", "SFH"), eval_domains=("SFR", "L11"),
             train_dialogues=2, checkpoints=(), extend_domains=("L11",), extend_dialogues=2)
    r = run_seed(c, 0)
    assert [m.home for m in r.learner.committee.members] == ["SFR", "SFH", "L11"]
    assert {(x["strategy"], x["train_dialogues"]) for x in r.rows} == {
        ("SCALE", 2), ("SCALE>L11", 0), ("SCALE>L11", 2)}
    assert r.attribution and len(r.learning_curve["L11"]) == 2


def test_csv_rows_and_round_trip(tmp_path):
    res = train(_cfg(seeds=(0, 1)), tmp_path)
    rows = read_csv(tmp_path / "results.csv")
    assert len(rows) == 2 * 2  # two seeds, checkpoints 0 and 4
    assert tuple(rows[0]) == CSV_COLUMNS
    for got, want in zip(rows, res.rows):
        assert all(got[k] == want[k] for k in CSV_COLUMNS)
    fh = io.StringIO()
    write_csv(res.rows, fh)
    assert fh.getvalue() == (tmp_path / "results.csv").read_text()
    assert (tmp_path / "config.json").exists()
    assert (tmp_path / "snapshots" / "seed1" / "INDOM_4" / "manifest.json").exists()


@pytest.mark.parametrize("strategy, domains", [("INDOM", ("SFR",)), ("GEN", ("SFR", "SFH")),
                                               ("MBCM", ("SFR", "SFH"))])
def test_save_load_round_trip(tmp_path, strategy, domains):
    c = _cfg(strategy=strategy, domains=domains, train_dialogues=3)
    r = run_seed(c, 0)
    save_learner(r.learner, tmp_path, c)
    back, cfg = load_learner(tmp_path)
    assert cfg == c
    rng = np.random.default_rng(0)
    for name, pol in r.learner.policies().items():
        other = back.policies()[name]
        for _ in range(5):
            p = random_point(pol.space.home, rng)
            a, b = pol.q_posterior(p), other.q_posterior(p)
            assert abs(a.mean - b.mean) <= 1e-12 and abs(a.variance - b.variance) <= 1e-12
        assert pol.q_posterior(Point.terminal(pol.space.home.domain_id)).mean == 0.0
    env = Environment(c)
    for d in domains:
        x = evaluate_actor(env, r.learner.actor(d), d, 5, 9)
        y = evaluate_actor(env, back.actor(d), d, 5, 9)
        np.testing.assert_array_equal(x.rewards, y.rewards)


def test_snapshot_errors(tmp_path):
    with pytest.raises(SnapshotError):
        load_learner(tmp_path)
    (tmp_path / "manifest.json").write_text('{"version": "other"}')
    with pytest.raises(SnapshotError, match="version"):
        load_learner(tmp_path)
    (tmp_path / "manifest.json").write_text("{")
    with pytest.raises(SnapshotError):
        load_learner(tmp_path)


@pytest.mark.parametrize("raw, expected", [("3", 3), ("0", 1), ("-2", 1)])
def test_thread_cap(monkeypatch, raw, expected):
    monkeypatch.setenv("GPDM_THREADS", raw)
    assert thread_cap() == expected


def test_thread_cap_rejects_garbage(monkeypatch):
    monkeypatch.setenv("GPDM_THREADS", "many")
    with pytest.raises(ConfigError):
        thread_cap()
    monkeypatch.delenv("GPDM_THREADS")
    assert thread_cap() >= 1


def test_parallel_and_serial_runs_agree(monkeypatch):
    c = _cfg(seeds=(0, 1), train_dialogues=2)
    monkeypatch.setenv("GPDM_THREADS", "2")
    par = train(c, keep_learners=False)
    monkeypatch.setenv("GPDM_THREADS", "1")
    ser = train(c, keep_learners=False)
    assert par.rows == ser.rows
