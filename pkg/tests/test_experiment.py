import numpy as np
import pytest

import src.experiment
from src.actor import ActorConfig
from src.errors import ConfigError, CriticError, ExperimentError
from src.experiment import ExperimentConfig, monte_carlo_experiment, substreams
from src.optim import OptimOptions
from src.simenv import RolloutSpec
from src.statistics import ExperimentStatistics, ResultsTable

TINY_ROLLOUT = RolloutSpec(horizon=400, burn_in=40)


def tiny_experiment(**overrides):
    values = dict(scenario="S1", replications=2, sweep_values=(0.4,), n=10, T=10,
                  actor=ActorConfig(optim=OptimOptions(n_restarts=1, max_iterations=20)),
                  rollout=TINY_ROLLOUT, oracle_rollout=TINY_ROLLOUT, include_oracle=False)
    values.update(overrides)
    return ExperimentConfig(**values)


def test_unknown_scenario_lists_valid_ones():
    with pytest.raises(ConfigError, match="S1, S2, S3, S4"):
        ExperimentConfig("S9")
    with pytest.raises(ConfigError):
        ExperimentConfig("S1", scale="huge")


def test_scale_defaults():
    exp = ExperimentConfig("S1")
    assert exp.replications == 20
    assert exp.sweep_values == (0.2, 0.4, 0.6)
    assert ExperimentConfig("S2", "full").replications == 100


def test_zero_replications_give_empty_table():
    table = monte_carlo_experiment(ExperimentConfig("S1", replications=0))
    assert len(table) == 0
    assert table.summary() == []


def test_scenario_environments_and_policy_columns():
    s1 = ExperimentConfig("S1")
    assert s1.sim_config(0.6).tau == 0.6
    assert s1.policy_feature_map(0.6).q == 4

    s2 = ExperimentConfig("S2")
    assert s2.sim_config(6).p1 == 6
    assert s2.sim_config(6).tau == 0.4
    assert s2.policy_columns(6) == (0, 1, 2)

    assert ExperimentConfig("S3").policy_feature_map(6).q == 7

    s4 = ExperimentConfig("S4", "full")
    assert s4.policy_columns(0) == (0, 1, 2)
    assert s4.policy_columns(1) == (1, 2)
    assert s4.policy_columns(3) == (0, 1)
    assert s4.policy_feature_map(3).names == ("s1", "s2")


def test_substreams_are_deterministic_and_distinct():
    first = substreams(7, 1, 3)
    second = substreams(7, 1, 3)
    other = substreams(7, 1, 4)
    for name in first:
        assert first[name].generate_state(2).tolist() == second[name].generate_state(2).tolist()
        assert first[name].generate_state(2).tolist() != other[name].generate_state(2).tolist()
    assert first["data"].generate_state(2).tolist() != first["rollout"].generate_state(2).tolist()


def test_small_run_is_reproducible():
    exp = tiny_experiment()
    stats = ExperimentStatistics()
    first = monte_carlo_experiment(exp, stats)
    second = monte_carlo_experiment(exp)
    assert len(first) == 4
    assert [row.policy_kind for row in first] == ["learned", "const", "learned", "const"]
    assert [row.eta for row in first] == [row.eta for row in second]
    assert stats.replications_done == 2


def test_failures_are_recorded(monkeypatch):
    def flaky(exp, sweep_index, replication, oracle=None):
        if replication == 0:
            raise CriticError("sistema singular")
        return {"learned": 10.5, "const": 10.0}

    monkeypatch.setattr(src.experiment, "run_replication", flaky)
    stats = ExperimentStatistics()
    table = monte_carlo_experiment(tiny_experiment(replications=10), stats)
    assert len(table) == 18
    assert stats.replications_failed == 1
    assert stats.failure_reasons == {"CriticError": 1}


def test_unexpected_errors_are_recorded_by_class(monkeypatch):
    def singular(exp, sweep_index, replication, oracle=None):
        if replication == 1:
            raise np.linalg.LinAlgError("Singular matrix")
        return {"learned": 10.5, "const": 10.0}

    monkeypatch.setattr(src.experiment, "run_replication", singular)
    stats = ExperimentStatistics()
    table = monte_carlo_experiment(tiny_experiment(replications=10), stats)
    assert len(table) == 18
    assert stats.failure_reasons == {"LinAlgError": 1}


def test_too_many_failures_raise(monkeypatch):
    def broken(exp, sweep_index, replication, oracle=None):
        if replication < 3:
            raise CriticError("sistema singular")
        return {"learned": 10.5, "const": 10.0}

    monkeypatch.setattr(src.experiment, "run_replication", broken)
    with pytest.raises(ExperimentError) as info:
        monte_carlo_experiment(tiny_experiment(replications=10))
    assert len(info.value.table) == 14


def test_summary_statistics():
    table = ResultsTable("S1", "tau")
    for replication, eta in enumerate([1.0, 2.0, 3.0, 4.0]):
        table.add(0.2, replication, "learned", eta)
    table.add(0.2, 0, "const", 0.5)
    learned, const = table.summary()
    assert learned.mean == 2.5
    assert learned.se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
    assert learned.p5 == pytest.approx(1.15)
    assert learned.p95 == pytest.approx(3.85)
    assert const.count == 1
    assert np.isnan(const.se)
    with pytest.raises(ValueError):
        table.add(0.2, 1, "random", 0.0)


@pytest.mark.slow
def test_s1_learned_policy_tracks_oracle():
    table = monte_carlo_experiment(ExperimentConfig("S1", "desk", jobs=4))
    for tau in (0.2, 0.4, 0.6):
        learned = table.values(tau, "learned").mean()
        assert learned >= table.values(tau, "oracle").mean() - 0.5
        if tau >= 0.4:
            assert learned >= table.values(tau, "const").mean()


@pytest.mark.slow
def test_s2_noise_variables_do_not_hurt():
    table = monte_carlo_experiment(ExperimentConfig("S2", "desk", sweep_values=(3, 10), include_oracle=False, jobs=4))
    low, high = table.values(3, "learned"), table.values(10, "learned")
    se = np.hypot(low.std(ddof=1) / np.sqrt(low.size), high.std(ddof=1) / np.sqrt(high.size))
    assert abs(high.mean() - low.mean()) <= 2 * se
