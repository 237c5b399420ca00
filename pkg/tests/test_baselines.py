import numpy as np
import pytest
import scipy.linalg

from koopman_eigenflows.analysis.oracles import OracleSuite
from koopman_eigenflows.baselines import (GeneratorEDMDModel, MonomialDictionary, RBFDictionary, dict_eval,
                                          dict_grad, dictionary_from_dict, fit_generator_edmd, make_dictionary,
                                          predict_edmd, predict_edmd_batch)
from koopman_eigenflows.dynamics import DomainBox, boundary_starts, generate_dataset, make_system
from koopman_eigenflows.exceptions import ConfigurationError, DegenerateDataError


@pytest.fixture
def coupled_linear():
    return make_system('linear', a11=-1.0, a12=0.5, a21=0.0, a22=-2.0)


@pytest.fixture
def coupled_dataset(coupled_linear):
    box = DomainBox.symmetric(1.0, 2)
    return generate_dataset(coupled_linear, boundary_starts(box, 8, seed=2), 0.05, 39, box=box)


class TestMonomialDictionary:

    def test_degree_one_ordering(self):
        np.testing.assert_array_equal(dict_eval(MonomialDictionary(2, 1), np.array([2.0, 3.0])), [1.0, 2.0, 3.0])

    def test_sizes(self):
        assert MonomialDictionary(2, 2, 'total').size == 6
        assert MonomialDictionary(2, 5, 'per_coordinate').size == 36

    def test_degree_two_values(self):
        values = dict_eval(MonomialDictionary(2, 2), np.array([2.0, 3.0]))
        np.testing.assert_array_equal(values, [1.0, 2.0, 3.0, 4.0, 6.0, 9.0])

    def test_gradient_at_origin(self):
        G = dict_grad(MonomialDictionary(2, 2), np.zeros(2))
        assert G.shape == (6, 2)
        np.testing.assert_array_equal(G[1], [1.0, 0.0])
        np.testing.assert_array_equal(G[2], [0.0, 1.0])
        assert not np.any(G[3:])

    def test_bad_arguments(self):
        with pytest.raises(ConfigurationError):
            MonomialDictionary(2, -1)
        with pytest.raises(ConfigurationError):
            MonomialDictionary(2, 2, 'chebyshev')


class TestRBFDictionary:

    def test_center_count(self, rng):
        dictionary = RBFDictionary.from_data(rng.normal(size=(100, 2)), 36, seed=0)
        assert dictionary.centers.shape == (33, 2)
        assert dictionary.size == 36

    def test_value_at_center(self, rng):
        dictionary = RBFDictionary.from_data(rng.normal(size=(50, 2)), 8, seed=0)
        values = dictionary.evaluate(dictionary.centers[:1])[0]
        assert values[0] == 1.0
        np.testing.assert_array_equal(values[1:3], dictionary.centers[0])
        assert values[3] == 1.0

    def test_seeded_centers(self, rng):
        states = rng.normal(size=(50, 2))
        a = RBFDictionary.from_data(states, 10, seed=4)
        b = RBFDictionary.from_data(states, 10, seed=4)
        assert np.array_equal(a.centers, b.centers) and a.gamma == b.gamma

    def test_too_small(self, rng):
        with pytest.raises(ConfigurationError):
            RBFDictionary.from_data(rng.normal(size=(10, 2)), 3)
        with pytest.raises(DegenerateDataError):
            RBFDictionary.from_data(rng.normal(size=(3, 2)), 10)

    def test_needs_states(self):
        with pytest.raises(ConfigurationError):
            make_dictionary('rbf', 2)


class TestDictionaryGradients:

    def test_finite_differences(self):
        check = OracleSuite(seed=0).dictionary_gradients()
        assert check.passed, check.to_dict()

    def test_round_trip(self, rng):
        states = rng.normal(size=(40, 2))
        X = rng.normal(size=(5, 2))
        for dictionary in (MonomialDictionary(2, 3), RBFDictionary.from_data(states, 12, 1)):
            rebuilt = dictionary_from_dict(dictionary.to_dict())
            np.testing.assert_array_equal(rebuilt.evaluate(X), dictionary.evaluate(X))


class TestGeneratorEDMD:

    def test_recovers_linear_generator(self, coupled_linear, coupled_dataset):
        model = fit_generator_edmd(coupled_dataset, MonomialDictionary(2, 1))
        A = np.array([[-1.0, 0.5], [0.0, -2.0]])
        np.testing.assert_allclose(model.L[1:, 1:], A, atol=1e-6)
        np.testing.assert_allclose(model.L[0], 0.0, atol=1e-6)
        assert model.train_rmse <= 1e-6

    def test_prediction_matches_matrix_exponential(self, coupled_dataset):
        model = fit_generator_edmd(coupled_dataset, MonomialDictionary(2, 1))
        A = np.array([[-1.0, 0.5], [0.0, -2.0]])
        x0 = np.array([0.4, -0.6])
        pred = predict_edmd(model, x0, 0.05, 20)
        expected = np.stack([scipy.linalg.expm(A * 0.05 * k) @ x0 for k in range(21)])
        np.testing.assert_allclose(pred, expected, atol=1e-6)

    def test_spectral_abscissa(self, coupled_dataset):
        model = fit_generator_edmd(coupled_dataset, MonomialDictionary(2, 2))
        # eigenvalues of L on quadratics are sums of pairs of eigenvalues of A, plus 0 for the constant
        assert model.spectral_abscissa == pytest.approx(0.0, abs=1e-6)

    def test_tuple_input(self, coupled_dataset):
        a = fit_generator_edmd(coupled_dataset, MonomialDictionary(2, 1))
        b = fit_generator_edmd((coupled_dataset.states, coupled_dataset.derivs), MonomialDictionary(2, 1))
        np.testing.assert_array_equal(a.L, b.L)

    def test_empty(self):
        with pytest.raises(DegenerateDataError):
            fit_generator_edmd((np.empty((0, 2)), np.empty((0, 2))), MonomialDictionary(2, 1))

    def test_save_load(self, coupled_dataset, tmp_path):
        model = fit_generator_edmd(coupled_dataset, RBFDictionary.from_data(coupled_dataset.states, 10, 0))
        loaded = GeneratorEDMDModel.load(model.save(tmp_path / 'edmd_rbf.json'))
        X0 = coupled_dataset.states[:3]
        np.testing.assert_array_equal(predict_edmd_batch(loaded, X0, 0.05, 5), predict_edmd_batch(model, X0, 0.05, 5))

    def test_negative_horizon(self, coupled_dataset):
        model = fit_generator_edmd(coupled_dataset, MonomialDictionary(2, 1))
        with pytest.raises(ValueError):
            predict_edmd(model, np.zeros(2), 0.05, -1)
