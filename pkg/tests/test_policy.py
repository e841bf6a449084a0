import numpy as np
import pytest
from scipy.special import logit

from src.errors import ConfigError, PolicyError
from src.policy import (PolicyFeatureMap, PolicyParams, action_probabilities, action_probability,
                        importance_weight, importance_weights, sample_action, sample_actions,
                        stochasticity_fraction)
from src.simenv import constant_policy
from src.trajectory import Dataset, Step

# Intercepto, deltacontrol e burden
TABLE_THETA = (0.45, -0.42, 0.63)


@pytest.fixture
def table_policy():
    pf = PolicyFeatureMap((0, 1), names=("deltacontrol", "burden"))
    return PolicyParams(np.array(TABLE_THETA), pf)


def test_table_probabilities(table_policy):
    assert action_probability(table_policy, [0.0, 1.0], True, 1) == pytest.approx(0.746, abs=1e-3)
    assert action_probability(table_policy, [1.0, 0.0], True, 1) == pytest.approx(0.507, abs=1e-3)


def test_zero_theta_is_uniform(table_policy):
    uniform = table_policy.with_theta(np.zeros(3))
    np.testing.assert_allclose(action_probabilities(uniform, np.random.default_rng(0).normal(size=(5, 2))), 0.5)


def test_gated_policy_forces_no_treatment(table_policy):
    gated = PolicyParams(table_policy.theta, table_policy.feature_map, gated_by_availability=True)
    assert action_probability(gated, [0.0, 1.0], False, 0) == 1.0
    assert action_probability(gated, [0.0, 1.0], False, 1) == 0.0
    assert action_probability(gated, [0.0, 1.0], True, 1) == pytest.approx(0.746, abs=1e-3)


def test_probabilities_sum_to_one_and_sign_flip_swaps(table_policy):
    states = np.random.default_rng(1).normal(scale=3.0, size=(200, 2))
    probs = action_probabilities(table_policy, states)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    flipped = action_probabilities(table_policy.with_theta(-table_policy.theta), states)
    np.testing.assert_allclose(flipped[:, ::-1], probs, atol=1e-12)


def test_softmax_with_three_actions():
    pf = PolicyFeatureMap((0,), n_actions=3)
    assert pf.q == 4
    policy = PolicyParams(np.array([0.2, 1.0, -0.3, 0.5]), pf)
    probs = action_probabilities(policy, [[0.7], [-1.2]])
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    s = 0.7
    scores = np.array([0.0, 0.2 + 1.0 * s, -0.3 + 0.5 * s])
    np.testing.assert_allclose(probs[0], np.exp(scores) / np.exp(scores).sum())
    np.testing.assert_array_equal(pf.phi_sa([[s]], 0), np.zeros(4))
    np.testing.assert_allclose(pf.phi_sa([[s]], 2), [0.0, 0.0, 1.0, s])


def test_sampling_frequency_matches_probability(table_policy):
    states = np.tile([0.0, 1.0], (200_000, 1))
    actions = sample_actions(table_policy, states, np.ones(200_000, dtype=bool), np.random.default_rng(5))
    assert actions.mean() == pytest.approx(0.746, abs=0.005)


def test_single_sample_respects_gating(table_policy):
    gated = PolicyParams(table_policy.theta, table_policy.feature_map, gated_by_availability=True)
    rng = np.random.default_rng(11)
    assert {sample_action(gated, [0.0, 1.0], False, rng) for _ in range(50)} == {0}
    assert {sample_action(table_policy, [0.0, 1.0], True, rng) for _ in range(200)} == {0, 1}


def test_importance_weight(table_policy):
    step = Step(np.array([0.0, 1.0]), True, 1, 0.0, 0.6)
    expected = action_probability(table_policy, [0.0, 1.0], True, 1) / 0.6
    assert importance_weight(table_policy, step) == pytest.approx(expected)
    assert importance_weight(table_policy, step) == pytest.approx(1.2433, abs=2e-3)


def test_weights_are_one_when_policy_matches_behavior(intercept_policy, two_state_data):
    _, d = two_state_data(n=20, T=5, mu1=0.5)
    np.testing.assert_allclose(importance_weights(intercept_policy, d), 1.0)


def test_weighted_behavior_probabilities_sum_to_one(table_policy):
    # Σ_a μ(a|s)·π(a|s)/μ(a|s) = 1 em cada estado
    mu = np.array([0.4, 0.6])
    for state in ([0.0, 1.0], [2.0, -1.0]):
        total = sum(mu[a] * importance_weight(table_policy, Step(np.array(state), True, a, 0.0, mu[a]))
                    for a in (0, 1))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_unavailable_steps_have_unit_weight_under_gated_policy():
    pf = PolicyFeatureMap((), intercept=True)
    gated = PolicyParams.zeros(pf, gated_by_availability=True)
    d = Dataset.from_arrays(np.zeros((1, 2, 1)), np.zeros((1, 2)), np.zeros((1, 2)), np.full((1, 2), 0.4),
                            availability=[[False, True]])
    np.testing.assert_allclose(importance_weights(gated, d), [[1.0, 1.25]])
    assert importance_weight(gated, d.trajectories[0].steps[0]) == 1.0
    # Sem o condicionamento, o peso no ponto indisponível é π(0|s)
    np.testing.assert_allclose(importance_weights(PolicyParams.zeros(pf), d), [[0.5, 1.25]])


def four_point_dataset():
    # π(1|s) = s com θ = 1 e sem intercepto quando o estado é logit(p)
    states = logit(np.array([0.02, 0.5, 0.9, 0.97])).reshape(2, 2, 1)
    return Dataset.from_arrays(states, np.zeros((2, 2)), np.zeros((2, 2)), np.full((2, 2), 0.5))


def test_stochasticity_fraction_by_hand():
    policy = PolicyParams(np.array([1.0]), PolicyFeatureMap((0,), intercept=False))
    assert stochasticity_fraction(policy, four_point_dataset(), 0.05) == 0.5


def test_stochasticity_fraction_extremes(intercept_policy, s1_dataset):
    assert stochasticity_fraction(intercept_policy, s1_dataset, 0.05) == 1.0
    assert stochasticity_fraction(constant_policy(), s1_dataset, 0.05) == 0.0
    certain = intercept_policy.with_theta([4.0])
    assert stochasticity_fraction(certain, s1_dataset, 0.05) == 0.0


def test_stochasticity_fraction_gated_counts_available_points():
    states = np.zeros((1, 4, 1))
    availability = np.array([[True, True, False, False]])
    d = Dataset.from_arrays(states, np.zeros((1, 4)), np.zeros((1, 4)), np.full((1, 4), 0.5), availability)
    gated = PolicyParams.zeros(PolicyFeatureMap((), intercept=True), gated_by_availability=True)
    assert stochasticity_fraction(gated, d, 0.05) == 1.0
    assert stochasticity_fraction(PolicyParams.zeros(gated.feature_map), d, 0.05) == 1.0


def test_invalid_p0(intercept_policy, s1_dataset):
    with pytest.raises(ConfigError):
        stochasticity_fraction(intercept_policy, s1_dataset, 0.5)


def test_theta_shape_and_finiteness():
    pf = PolicyFeatureMap((0, 1))
    with pytest.raises(ConfigError):
        PolicyParams(np.zeros(2), pf)
    with pytest.raises(PolicyError):
        PolicyParams(np.array([0.0, np.nan, 1.0]), pf)


def test_constant_policy_always_treats(s1_dataset):
    const = constant_policy()
    assert action_probability(const, np.zeros(3), True, 1) == 1.0
    actions = sample_actions(const, s1_dataset.decision_states, s1_dataset.availability.reshape(-1),
                             np.random.default_rng(0))
    assert np.all(actions == 1)


def test_json_round_trip(table_policy, tmp_path):
    path = str(tmp_path / "policy.json")
    table_policy.save(path)
    loaded = PolicyParams.load(path)
    np.testing.assert_array_equal(loaded.theta, table_policy.theta)
    assert loaded.feature_map == table_policy.feature_map
    assert loaded.coefficients() == {"Intercept": 0.45, "deltacontrol": -0.42, "burden": 0.63}
