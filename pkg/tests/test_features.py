import numpy as np
import pytest

from src.errors import ConfigError, DataError
from src.features import (BasisFunction, FeatureMap, HingeAtom, KnotGrid, build_feature_map, candidate_count,
                          compute_deciles, evaluate_features, feature_matrix, fit_centering, raw_features)
from src.trajectory import Dataset


def dataset_from_values(values, state_dim=1):
    values = np.asarray(values, dtype=float).reshape(10, -1, state_dim)
    n, length = values.shape[:2]
    return Dataset.from_arrays(values, np.zeros((n, length)), np.zeros((n, length)), np.full((n, length), 0.5))


def test_deciles_use_linear_interpolation():
    d = dataset_from_values(np.arange(1, 101))
    expected = [10.9, 20.8, 30.7, 40.6, 50.5, 60.4, 70.3, 80.2, 90.1, 100.0]
    np.testing.assert_allclose(compute_deciles(d, 0), expected)


def test_deciles_of_constant_component_are_all_equal():
    d = dataset_from_values(np.full(50, 3.25))
    assert np.all(compute_deciles(d, 0) == 3.25)


def test_candidate_count_before_pruning():
    # 60 átomos para p1 = 3: 60 singletons + C(60, 2) produtos
    assert candidate_count(3) == 1830
    assert candidate_count(1) == 20 + 190


def test_hinge_values_and_products():
    grid = KnotGrid([[0.0, 1.0], [2.0, 2.5]])
    up = HingeAtom(0, 1, "+")
    down = HingeAtom(1, 0, "-")
    basis = [BasisFunction("singleton", (up,)), BasisFunction("singleton", (down,)), BasisFunction.product(up, down)]
    fm = FeatureMap(grid, basis, np.zeros(3))
    values = raw_features(fm, [[3.0, 0.5], [0.5, 4.0]])
    np.testing.assert_allclose(values, [[2.0, 1.5, 3.0], [0.0, 0.0, 0.0]])


def test_opposite_hinges_on_same_knot_multiply_to_zero(s1_dataset):
    grid = KnotGrid(np.tile(np.linspace(-2, 2, 10), (3, 1)))
    basis = [BasisFunction.product(HingeAtom(0, 4, "+"), HingeAtom(0, 4, "-"))]
    fm = FeatureMap(grid, basis, np.zeros(1))
    assert np.all(raw_features(fm, s1_dataset.decision_states) == 0.0)


def test_built_features_are_centered(s1_dataset):
    fm = build_feature_map(s1_dataset)
    f = feature_matrix(fm, s1_dataset.decision_states)
    assert f.shape[1] == fm.dimension
    np.testing.assert_allclose(f.mean(axis=0), 0.0, atol=1e-10)


def test_pruning_drops_max_knot_upper_hinge(s1_dataset):
    fm = build_feature_map(s1_dataset)
    singletons = {b.terms[0] for b in fm.basis if b.kind == "singleton"}
    # (s - c10)+ é nula em todo o treino; (c10 - s)+ só zera no máximo
    assert HingeAtom(0, 9, "+") not in singletons
    assert HingeAtom(0, 9, "-") in singletons


def test_pruning_keeps_functions_exactly_at_threshold():
    # Decis de 0..9: c2 = 1.8, c8 = 7.2, c9 = 8.1
    d = Dataset.from_arrays(np.arange(10.0).reshape(5, 2, 1), np.zeros((5, 2)), np.zeros((5, 2)),
                            np.full((5, 2), 0.5))
    singletons = {b.terms[0] for b in build_feature_map(d, 0.8).basis if b.kind == "singleton"}
    assert HingeAtom(0, 7, "+") in singletons  # nula em 8 de 10
    assert HingeAtom(0, 1, "-") in singletons  # nula em 8 de 10
    assert HingeAtom(0, 8, "+") not in singletons  # nula em 9 de 10


def test_pruning_is_monotone_in_threshold(s1_dataset):
    sizes = [build_feature_map(s1_dataset, threshold).dimension for threshold in (0.3, 0.5, 0.8, 0.95)]
    assert sizes == sorted(sizes)
    assert sizes[-1] <= candidate_count(3)


def test_no_duplicate_columns(s1_dataset):
    fm = build_feature_map(s1_dataset)
    columns = feature_matrix(fm, s1_dataset.decision_states)
    assert np.unique(columns.T, axis=0).shape[0] == fm.dimension


def test_invalid_prune_threshold(s1_dataset):
    with pytest.raises(ConfigError):
        build_feature_map(s1_dataset, 1.5)


def test_state_dimension_mismatch(s1_dataset):
    fm = build_feature_map(s1_dataset)
    with pytest.raises(DataError, match="dimensão do estado"):
        evaluate_features(fm, np.zeros(4))


def test_fit_centering_for_explicit_basis(two_state_data):
    _, d = two_state_data(n=50, T=10)
    fm = fit_centering(KnotGrid([[0.0]]), [BasisFunction.singleton(0, 0, "+")], d)
    mean = d.decision_states.mean()
    np.testing.assert_allclose(evaluate_features(fm, [1.0]), [1.0 - mean])
    np.testing.assert_allclose(evaluate_features(fm, [0.0]), [-mean])


def test_json_round_trip(s1_dataset, tmp_path):
    fm = build_feature_map(s1_dataset)
    path = str(tmp_path / "features.json")
    fm.save(path)
    loaded = FeatureMap.load(path)
    assert loaded.basis == fm.basis
    np.testing.assert_array_equal(feature_matrix(loaded, s1_dataset.decision_states),
                                  feature_matrix(fm, s1_dataset.decision_states))


def test_decreasing_knots_rejected():
    with pytest.raises(ConfigError):
        KnotGrid([[1.0, 0.0]])
