import numpy as np
import pytest

from koopman_eigenflows.analysis.oracles import perturb_output_layers, random_flow
from koopman_eigenflows.exceptions import NumericalFailureError
from koopman_eigenflows.flows import (CouplingLayer, FlowModel, IdentityMap, alternating_masks, flow_forward,
                                      flow_inverse, layer_forward, layer_inverse)
from koopman_eigenflows.nets import DenseNet
from koopman_eigenflows.utils.numdiff import central_jacobian, relative_error


class TestMasks:

    def test_alternating(self):
        masks = alternating_masks(2, 4)
        assert [m.tolist() for m in masks] == [[True, False], [False, True], [True, False], [False, True]]

    def test_bad_mask(self, rng):
        net = DenseNet.create([1, 4, 1], rng)
        with pytest.raises(ValueError):
            CouplingLayer([True, True], net, net)
        with pytest.raises(ValueError):
            CouplingLayer([False, False], net, net)

    def test_net_shapes_must_match_mask(self, rng):
        wrong = DenseNet.create([2, 4, 1], rng)
        right = DenseNet.create([1, 4, 1], rng)
        with pytest.raises(ValueError):
            CouplingLayer([True, False], wrong, right)


class TestFlowModel:

    def test_created_flow_is_identity(self, rng):
        flow = FlowModel.create(2, 7, (16, 16), seed=0)
        X = rng.uniform(-5, 5, size=(20, 2))
        assert np.array_equal(flow.forward(X), X)
        np.testing.assert_array_equal(flow.jacobian(X), np.broadcast_to(np.eye(2), (20, 2, 2)))

    def test_needs_two_layers(self):
        with pytest.raises(ValueError):
            FlowModel.create(2, 1, (8,))

    def test_round_trip(self, rng):
        flow = random_flow(n_layers=7, seed=3, scale=0.05)
        X = rng.uniform(-5, 5, size=(500, 2))
        assert np.max(np.abs(flow.inverse(flow.forward(X)) - X)) <= 1e-10
        assert np.max(np.abs(flow.forward(flow.inverse(X)) - X)) <= 1e-10

    def test_jacobian_matches_finite_differences(self, rng):
        flow = random_flow(seed=5)
        for x in rng.uniform(-2, 2, size=(5, 2)):
            assert relative_error(flow.jacobian(x), central_jacobian(flow.forward, x)) <= 1e-6

    def test_jacobian_is_invertible(self, rng):
        flow = random_flow(seed=2, scale=0.5)
        dets = np.linalg.det(flow.jacobian(rng.uniform(-5, 5, size=(200, 2))))
        assert np.all(dets > 0)

    def test_tangents_match_jacobian_products(self, rng):
        flow = random_flow(seed=8)
        X = rng.normal(size=(6, 2))
        V = rng.normal(size=(6, 2))
        _, T, _ = flow.forward_tangent(X, V[:, :, None])
        np.testing.assert_allclose(T[:, :, 0], np.einsum('bij,bj->bi', flow.jacobian(X), V), atol=1e-12)

    def test_save_load(self, tmp_path, rng):
        flow = random_flow(seed=4)
        path = flow.save(tmp_path / 'flow.json')
        loaded = FlowModel.load(path)
        X = rng.normal(size=(10, 2))
        assert np.array_equal(loaded.forward(X), flow.forward(X))
        assert loaded.n_params == flow.n_params
        assert loaded.s_clamp == flow.s_clamp

    def test_parameter_count(self):
        flow = FlowModel.create(2, 3, (4,))
        # each of the six nets is 1 -> 4 -> 1
        assert flow.n_params == 6 * (4 + 4 + 4 + 1)
        assert len(flow.parameter_labels()) == len(flow.parameters())

    def test_scale_clamp_bounds_the_log_scale(self, rng):
        flow = FlowModel.create(2, 2, (4,), s_clamp=1.0)
        flow.layers[0].s_net.biases[-1][...] = 1e6
        X = rng.normal(size=(5, 2))
        Y = flow.forward(X)
        assert np.all(np.abs(Y[:, 1]) <= np.e * np.abs(X[:, 1]) + 1e-12)

    def test_overflow_reports_layer(self, rng):
        flow = FlowModel.create(2, 3, (4,), s_clamp=None)
        flow.layers[1].s_net.biases[-1][...] = 1e6
        with pytest.raises(NumericalFailureError) as info:
            flow.forward(rng.normal(size=(3, 2)))
        assert info.value.layer_index == 1

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            FlowModel.create(2, 2, (4,)).forward(np.zeros((3, 3)))

    def test_perturbation_leaves_identity(self, rng):
        flow = perturb_output_layers(FlowModel.create(2, 2, (4,)), seed=0)
        X = rng.normal(size=(4, 2))
        assert not np.allclose(flow.forward(X), X)


class TestIdentityMap:

    def test_interface(self, rng):
        identity = IdentityMap(2)
        X = rng.normal(size=(3, 2))
        assert np.array_equal(identity.forward(X), X)
        assert np.array_equal(identity.inverse(X), X)
        assert identity.jacobian(X).shape == (3, 2, 2)


class TestFunctionalInterface:

    def test_single_layer_round_trip(self, rng):
        layer = random_flow(n_layers=2, seed=6, scale=0.3).layers[0]
        x = rng.normal(size=2)
        y = layer_forward(layer, x)
        assert y.shape == (2,)
        assert y[0] == x[0]
        np.testing.assert_allclose(layer_inverse(layer, y), x, atol=1e-12)

    def test_flow_functions_match_methods(self, rng):
        flow = random_flow(seed=9)
        X = rng.normal(size=(4, 2))
        np.testing.assert_array_equal(flow_forward(flow, X), flow.forward(X))
        np.testing.assert_allclose(flow_inverse(flow, flow_forward(flow, X)), X, atol=1e-12)
