import numpy as np
import pytest

import src.features
from src.critic import (CriticOptions, CriticProblem, CriticSystem, assemble_system, critic, cross_validate_lambda,
                        fit_policy, solve_penalized)
from src.errors import CriticError, DataError
from src.features import build_feature_map, fit_centering
from src.policy import PolicyFeatureMap, PolicyParams
from src.trajectory import Dataset
from tests.conftest import tabular_feature_map


def test_assemble_by_hand(intercept_policy):
    # Sem estado terminal a soma vai só até t = T - 1 = 0
    d = Dataset.from_arrays([[0.0, 1.0]], [[1, 0]], [[2.0, 5.0]], [[0.5, 0.5]])
    system = assemble_system(d, intercept_policy, tabular_feature_map(d))
    np.testing.assert_allclose(system.A_hat, [[1.0, -1.0], [-0.5, 0.5]])
    np.testing.assert_allclose(system.b_hat, [2.0, -1.0])


def test_duplicated_individuals_give_same_system(intercept_policy, s1_dataset):
    fm = build_feature_map(s1_dataset)
    single = s1_dataset.select([0])
    double = s1_dataset.select([0, 0])
    a = assemble_system(single, intercept_policy, fm)
    b = assemble_system(double, intercept_policy, fm)
    np.testing.assert_allclose(a.A_hat, b.A_hat)
    np.testing.assert_allclose(a.b_hat, b.b_hat)


def test_constant_reward_gives_eta_ten(intercept_policy, constant_reward_dataset):
    fm = build_feature_map(constant_reward_dataset)
    fit = CriticProblem(constant_reward_dataset, fm).solve(intercept_policy, 0.1)
    assert fit.eta_hat == pytest.approx(10.0, abs=1e-6)
    assert np.linalg.norm(fit.v_hat) <= 1e-6


def test_two_state_on_policy(two_state_data, intercept_policy):
    mdp, d = two_state_data(n=2000, T=50, mu1=0.5)
    fit = CriticProblem(d, tabular_feature_map(d)).solve(intercept_policy, 1e-8)
    assert mdp.exact_average_reward(intercept_policy) == pytest.approx(0.5)
    assert fit.eta_hat == pytest.approx(0.5, abs=0.02)
    assert fit.residual_ok


def test_two_state_off_policy(two_state_data, intercept_policy):
    mdp, d = two_state_data(n=2000, T=50, mu1=0.6, seed=4)
    target = intercept_policy.with_theta([1.0])
    fit = CriticProblem(d, tabular_feature_map(d)).solve(target, 1e-8)
    assert fit.eta_hat == pytest.approx(mdp.exact_average_reward(target), abs=0.03)


def test_large_penalty_freezes_v(intercept_policy, s1_dataset):
    fm = build_feature_map(s1_dataset)
    system = assemble_system(s1_dataset, intercept_policy, fm)
    fit = solve_penalized(system, 1e12)
    assert np.linalg.norm(fit.v_hat) <= 1e-6
    a0 = system.A_hat[:, 0]
    assert fit.eta_hat == pytest.approx(a0 @ system.b_hat / (a0 @ a0), rel=1e-6)


def test_monotone_shrinkage(intercept_policy, s1_dataset):
    system = assemble_system(s1_dataset, intercept_policy, build_feature_map(s1_dataset))
    norms = [np.linalg.norm(solve_penalized(system, lam).v_hat) for lam in (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)]
    assert all(later <= earlier * (1 + 1e-9) for earlier, later in zip(norms, norms[1:]))


def test_normal_equation_residual(intercept_policy, s1_dataset):
    system = assemble_system(s1_dataset, intercept_policy, build_feature_map(s1_dataset))
    for lam in (1e-1, 1.0, 10.0):
        assert solve_penalized(system, lam).residual_ok


def test_eta_invariant_to_raw_feature_shift(intercept_policy, s1_dataset, monkeypatch):
    fm = build_feature_map(s1_dataset)
    baseline = CriticProblem(s1_dataset, fm).solve(intercept_policy, 0.1)

    unshifted = src.features.raw_features
    monkeypatch.setattr(src.features, "raw_features", lambda feature_map, states: unshifted(feature_map, states) + 7.3)
    # A centragem é refeita sobre as features deslocadas
    moved_fm = fit_centering(fm.knot_grid, fm.basis, s1_dataset)
    np.testing.assert_allclose(moved_fm.centering_means, fm.centering_means + 7.3)
    moved = CriticProblem(s1_dataset, moved_fm).solve(intercept_policy, 0.1)
    assert moved.eta_hat == pytest.approx(baseline.eta_hat, abs=1e-8)


def test_dual_matches_primal(s1_dataset):
    fm = build_feature_map(s1_dataset)
    policy = PolicyParams(np.array([0.2, 0.1, -0.3, 0.4]), PolicyFeatureMap((0, 1, 2)))
    primal = CriticProblem(s1_dataset, fm, solver="primal").solve(policy, 1.0)
    dual = CriticProblem(s1_dataset, fm, solver="dual").solve(policy, 1.0)
    assert dual.eta_hat == pytest.approx(primal.eta_hat, rel=1e-6)
    np.testing.assert_allclose(dual.v_hat, primal.v_hat, atol=1e-6)


def test_singular_system_without_penalty():
    system = CriticSystem([[1.0, 0.0], [0.0, 0.0]], [1.0, 0.0])
    with pytest.raises(CriticError, match="λ_c > 0"):
        solve_penalized(system, 0.0)
    fit = solve_penalized(system, 0.1)
    assert fit.eta_hat == pytest.approx(1.0)
    np.testing.assert_allclose(fit.v_hat, [0.0])


def test_inconsistent_system_dimensions():
    with pytest.raises(CriticError):
        CriticSystem(np.eye(3), np.ones(2))


def test_cross_validation_singleton_grid(intercept_policy, s1_dataset):
    fm = build_feature_map(s1_dataset)
    chosen, table = cross_validate_lambda(s1_dataset, intercept_policy, fm, [0.37], 2)
    assert chosen == 0.37
    assert len(table) == 1


def test_cross_validation_tie_prefers_largest(intercept_policy, constant_reward_dataset):
    fm = build_feature_map(constant_reward_dataset)
    grid = [1e-3, 1e-1, 10.0]
    chosen, table = cross_validate_lambda(constant_reward_dataset, intercept_policy, fm, grid, 2)
    assert chosen == 10.0
    assert all(score == pytest.approx(0.0, abs=1e-12) for _, score in table)


def test_cross_validation_needs_enough_individuals(intercept_policy, s1_dataset):
    small = s1_dataset.select([0, 1])
    with pytest.raises(DataError, match="menor que k"):
        cross_validate_lambda(small, intercept_policy, build_feature_map(small), [0.1], 3)


def test_critic_is_deterministic(intercept_policy, s1_dataset):
    fm = build_feature_map(s1_dataset)
    first = critic(intercept_policy, s1_dataset, fm)
    second = critic(intercept_policy, s1_dataset, fm)
    assert first.eta_hat == second.eta_hat
    assert first.lambda_c == second.lambda_c
    assert first.cv_table == second.cv_table
    np.testing.assert_array_equal(first.v_hat, second.v_hat)


def test_constant_reward_J_for_any_policy(constant_reward_dataset):
    fm = build_feature_map(constant_reward_dataset)
    problem = CriticProblem(constant_reward_dataset, fm)
    pf = PolicyFeatureMap((0, 1, 2))
    for theta in ([0.0, 0.0, 0.0, 0.0], [0.5, -1.0, 0.3, 0.2]):
        fit = fit_policy(problem, PolicyParams(np.array(theta), pf))
        assert fit.J == pytest.approx(10.0, abs=1e-6)


def test_empirical_objective_variant(intercept_policy, constant_reward_dataset):
    fm = build_feature_map(constant_reward_dataset)
    problem = CriticProblem(constant_reward_dataset, fm)
    fit = fit_policy(problem, intercept_policy, CriticOptions(objective="empirical"), lambda_c=0.1)
    # ρ ∈ {5/6, 5/4}: a média dos pesos não é 1
    assert fit.eta_hat == pytest.approx(10.0, abs=1e-6)
    expected = 10.0 * problem.weights(intercept_policy).mean()
    assert fit.J == pytest.approx(expected, rel=1e-6)
