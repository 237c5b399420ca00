import logging

import numpy as np
import pytest

from koopman_eigenflows.dynamics import (DomainBox, boundary_starts, generate_dataset, grid_starts, integrate_batch,
                                         jacobian_linearization)
from koopman_eigenflows.eigen import build_eigenfunction_library
from koopman_eigenflows.exceptions import DegenerateDataError
from koopman_eigenflows.flows import FlowModel, IdentityMap
from koopman_eigenflows.prediction import (LiftedLTIModel, discretize, fit_kefmd, fit_reconstruction,
                                           predict_batch, predict_derivative, predict_trajectory)


@pytest.fixture
def linear_model(linear, linear_dataset):
    library = build_eigenfunction_library(IdentityMap(2), jacobian_linearization(linear), linear_dataset, (1, 1))
    return fit_kefmd(linear_dataset, library)


class TestDiscretize:

    def test_vector(self):
        np.testing.assert_allclose(discretize(np.array([0.0, -1.0]), 0.5), [1.0, np.exp(-0.5)])

    def test_matrix(self):
        np.testing.assert_allclose(discretize(np.diag([-2.0, -1.0]), 0.1), np.diag(np.exp([-0.2, -0.1])))

    def test_positive_step(self):
        with pytest.raises(ValueError):
            discretize(np.array([-1.0]), 0.0)


class TestLinearSystem:

    def test_reconstruction_is_exact(self, linear_model):
        assert linear_model.train_rmse <= 1e-8
        assert linear_model.rank >= 2

    def test_prediction_matches_exponential_decay(self, linear_model):
        x0 = np.array([0.3, -0.8])
        pred = predict_trajectory(linear_model, x0, 30)
        expected = np.exp(-0.1 * np.arange(31))[:, None] * x0
        np.testing.assert_allclose(pred, expected, atol=1e-8)

    def test_derivative_estimate(self, linear_model, rng):
        X = rng.uniform(-1, 1, size=(5, 2))
        np.testing.assert_allclose(predict_derivative(linear_model, X), -X, atol=1e-8)

    def test_batch_matches_single(self, linear_model, rng):
        X0 = rng.uniform(-1, 1, size=(4, 2))
        batch = predict_batch(linear_model, X0, 10)
        assert batch.shape == (4, 11, 2)
        np.testing.assert_allclose(batch[2], predict_trajectory(linear_model, X0[2], 10), atol=1e-14)

    def test_zero_horizon(self, linear_model):
        pred = predict_trajectory(linear_model, np.array([0.5, 0.5]), 0)
        assert pred.shape == (1, 2)

    def test_negative_horizon(self, linear_model):
        with pytest.raises(ValueError):
            linear_model.evolve(np.ones(4), -1)

    def test_operators(self, linear_model):
        assert linear_model.D == 4
        np.testing.assert_allclose(np.diag(linear_model.Lambda), [0.0, -1.0, -1.0, -2.0])
        np.testing.assert_allclose(np.diag(linear_model.Lambda_d), np.exp(0.1 * np.array([0.0, -1.0, -1.0, -2.0])))
        assert linear_model.spectral_abscissa == pytest.approx(-1.0)

    def test_save_load(self, linear_model, tmp_path, rng):
        linear_model.library.save(tmp_path / 'library.json')
        path = linear_model.save(tmp_path / 'kefmd_model.json', 'library.json')
        loaded = LiftedLTIModel.load(path)
        x0 = rng.uniform(-1, 1, size=2)
        np.testing.assert_array_equal(predict_trajectory(loaded, x0, 5), predict_trajectory(linear_model, x0, 5))
        assert loaded.rank == linear_model.rank


class TestEx1:

    def test_exact_lift_reconstructs_training_data(self, ex1, ex1_dataset, exact_ex1):
        library = build_eigenfunction_library(exact_ex1, jacobian_linearization(ex1), ex1_dataset, (5, 5))
        model = fit_kefmd(ex1_dataset, library)
        assert model.D == 36
        assert model.train_rmse <= 1e-6

    def test_exact_lift_predicts_trajectories(self, ex1, ex1_dataset, exact_ex1, ex1_box):
        library = build_eigenfunction_library(exact_ex1, jacobian_linearization(ex1), ex1_dataset, (2, 2))
        model = fit_kefmd(ex1_dataset, library)
        X0 = grid_starts(ex1_box, 4)
        truth = integrate_batch(ex1, X0, 0.065, 100)
        assert np.max(np.abs(predict_batch(model, X0, 100) - truth)) <= 1e-5

    @pytest.fixture
    def exact_model(self, ex1, ex1_dataset, exact_ex1):
        library = build_eigenfunction_library(exact_ex1, jacobian_linearization(ex1), ex1_dataset, (2, 2))
        return fit_kefmd(ex1_dataset, library)

    def test_exact_lift_derivative(self, exact_model):
        np.testing.assert_allclose(predict_derivative(exact_model, np.array([2.0, 1.0])), [-1.4, 0.9],
                                   rtol=0, atol=1e-6)

    def test_first_step_slope_approaches_the_derivative(self, ex1, ex1_dataset, exact_ex1):
        library = build_eigenfunction_library(exact_ex1, jacobian_linearization(ex1), ex1_dataset, (2, 2))
        x0 = np.array([2.0, 1.0])
        errors = []
        for dt in (0.02, 0.01):
            model = fit_kefmd(ex1_dataset, library, dt=dt)
            slope = (predict_trajectory(model, x0, 1)[1] - x0) / dt
            errors.append(np.linalg.norm(slope - predict_derivative(model, x0)))
        # forward difference error is first order in dt
        assert errors[1] <= 0.6 * errors[0]
        assert errors[1] <= 2.0 * 0.01

    @pytest.mark.parametrize('untrained', ['identity', 'flow'])
    def test_predictions_decay(self, ex1, ex1_dataset, ex1_box, untrained):
        diffeo = IdentityMap(2) if untrained == 'identity' else FlowModel.create(2, 7, (8,), seed=0)
        library = build_eigenfunction_library(diffeo, jacobian_linearization(ex1), ex1_dataset, (5, 5))
        model = fit_kefmd(ex1_dataset, library)
        assert np.max(np.abs(model.constant_mode)) <= 1e-6
        for x0 in grid_starts(ex1_box, 10):
            pred = predict_trajectory(model, x0, 500)
            norms = np.linalg.norm(pred, axis=1)
            assert norms[-1] <= 1e-2
            assert np.max(norms) <= 10.0 * norms[0]


class TestReconstruction:

    def test_rank_warning(self, linear_dataset, caplog):
        with caplog.at_level(logging.WARNING, logger='koopman_eigenflows.prediction.kefmd'):
            V = fit_reconstruction(linear_dataset, lambda X: np.ones((X.shape[0], 1)))
        assert V.shape == (2, 1)
        assert 'rank' in caplog.text

    def test_empty(self):
        with pytest.raises(DegenerateDataError):
            fit_reconstruction(np.empty((0, 2)), lambda X: np.ones((X.shape[0], 1)))

    def test_bare_array_needs_step(self, linear_model, linear_dataset):
        with pytest.raises(ValueError):
            fit_kefmd(linear_dataset.states, linear_model.library)


class TestLiftedEvolution:

    def test_discrete_eigenvalues_are_scalar_exponentials(self, linear_model):
        for lam, lam_d in zip(linear_model.lambdas, linear_model.lambdas_d):
            assert abs(lam_d - np.exp(lam * linear_model.dt)) <= 1e-15

    def test_matches_continuous_time_solution(self, linear_model, rng):
        z0 = rng.normal(size=linear_model.D)
        Z = linear_model.evolve(z0, 40)
        t = linear_model.dt * np.arange(41)
        np.testing.assert_allclose(Z, np.exp(np.outer(t, linear_model.lambdas)) * z0, rtol=0, atol=1e-12)

    def test_semigroup(self, linear_model, rng):
        z0 = rng.normal(size=linear_model.D)
        direct = linear_model.evolve(z0, 12)[-1]
        composed = linear_model.evolve(linear_model.evolve(z0, 5)[-1], 7)[-1]
        np.testing.assert_allclose(composed, direct, rtol=0, atol=1e-13)

    def test_eigenvalues_do_not_depend_on_the_flow(self, ex1, ex1_dataset, exact_ex1):
        A = jacobian_linearization(ex1)
        with_exact = build_eigenfunction_library(exact_ex1, A, ex1_dataset, (5, 5))
        with_identity = build_eigenfunction_library(IdentityMap(2), A, ex1_dataset, (5, 5))
        assert np.array_equal(with_exact.lambdas, with_identity.lambdas)

    def test_ex3_untrained_predictions_decay(self, ex3):
        box = DomainBox.symmetric(5.5, 2)
        dataset = generate_dataset(ex3, boundary_starts(box, 56, seed=0), 0.015, 199, box=box)
        library = build_eigenfunction_library(IdentityMap(2), jacobian_linearization(ex3), dataset, (13, 13))
        model = fit_kefmd(dataset, library)
        assert model.D == 196
        preds = predict_batch(model, grid_starts(box, 10), 500)
        norms = np.linalg.norm(preds, axis=2)
        assert np.all(norms[:, -1] <= 1e-2)
        assert np.all(np.max(norms, axis=1) <= 10.0 * norms[:, 0])
