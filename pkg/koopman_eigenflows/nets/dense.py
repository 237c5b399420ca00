"""
Dense feed-forward networks with exact input Jacobians and parameter
gradients of losses that read those Jacobians.

Inputs are propagated together with K tangent directions (forward mode in
the input). Reverse accumulation is then run over the primal *and* tangent
computation, which gives parameter gradients of any scalar function of the
outputs and their directional derivatives.

Shapes: batch X (B, n), tangents Xdot (B, n, K).
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

ACTIVATION = 'elu'


def elu(a: np.ndarray) -> np.ndarray:
    # alpha = 1
    return np.where(a > 0, a, np.expm1(np.minimum(a, 0.0)))


def elu_prime(a: np.ndarray) -> np.ndarray:
    return np.where(a > 0, 1.0, np.exp(np.minimum(a, 0.0)))


def elu_second(a: np.ndarray) -> np.ndarray:
    return np.where(a > 0, 0.0, np.exp(np.minimum(a, 0.0)))


class DenseNet:
    """ELU on hidden layers, identity on the output layer."""

    def __init__(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise ValueError("DenseNet needs one bias per weight matrix and at least one layer")
        self.weights: List[np.ndarray] = [np.array(W, dtype=np.float64) for W in weights]
        self.biases: List[np.ndarray] = [np.array(b, dtype=np.float64) for b in biases]
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape[0] != b.shape[0]:
                raise ValueError(f"Layer {l}: weight {W.shape} and bias {b.shape} disagree")
            if l > 0 and W.shape[1] != self.weights[l - 1].shape[0]:
                raise ValueError(f"Layer {l} expects {W.shape[1]} inputs, previous layer gives {self.weights[l - 1].shape[0]}")

    @classmethod
    def create(cls, layer_dims: Sequence[int], rng: np.random.Generator, zero_output: bool = True) -> 'DenseNet':
        """
        He-scaled random hidden layers; the output layer is zero when zero_output is set.

        Args:
            layer_dims (Sequence[int]): [n_in, hidden..., n_out]
            rng (np.random.Generator): source of the initial weights
            zero_output (bool): initialize the last layer to exactly zero
        """
        if len(layer_dims) < 2:
            raise ValueError(f"layer_dims needs at least input and output sizes, got {list(layer_dims)}")
        weights, biases = [], []
        n_layers = len(layer_dims) - 1
        for l in range(n_layers):
            fan_in, fan_out = layer_dims[l], layer_dims[l + 1]
            if l == n_layers - 1 and zero_output:
                W = np.zeros((fan_out, fan_in))
            else:
                W = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
            weights.append(W)
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @property
    def layer_dims(self) -> List[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def n_in(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_out(self) -> int:
        return self.weights[-1].shape[0]

    def parameters(self) -> List[np.ndarray]:
        params = []
        for W, b in zip(self.weights, self.biases):
            params.extend([W, b])
        return params

    def parameter_labels(self) -> List[Tuple[int, str]]:
        labels = []
        for l in range(len(self.weights)):
            labels.extend([(l, 'weight'), (l, 'bias')])
        return labels

    def forward(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        h = np.atleast_2d(X)
        last = len(self.weights) - 1
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            a = h @ W.T + b
            h = elu(a) if l < last else a
        return h[0] if single else h

    def forward_tangent(self, X: np.ndarray, Xdot: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Tuple]:
        """
        Propagate values and tangents.

        Args:
            X (np.ndarray): (B, n) inputs
            Xdot (np.ndarray): (B, n, K) tangent directions

        Returns:
            Tuple: outputs (B, m), output tangents (B, m, K) and a cache for backward
        """
        h, hdot = X, Xdot
        inputs, input_dots, pre, pre_dots = [], [], [], []
        last = len(self.weights) - 1
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            input_dots.append(hdot)
            a = h @ W.T + b
            adot = np.einsum('ij,bjk->bik', W, hdot)
            if l < last:
                pre.append(a)
                pre_dots.append(adot)
                h = elu(a)
                hdot = elu_prime(a)[:, :, None] * adot
            else:
                h, hdot = a, adot
        return h, hdot, (inputs, input_dots, pre, pre_dots)

    def backward(self, cache: Tuple, Ybar: np.ndarray,
                 Ydotbar: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray, np.ndarray]:
        """
        Reverse accumulation through forward_tangent.

        Args:
            cache (Tuple): cache returned by forward_tangent
            Ybar (np.ndarray): (B, m) adjoint of the outputs
            Ydotbar (np.ndarray): (B, m, K) adjoint of the output tangents

        Returns:
            Tuple: parameter gradients in parameters() order, input adjoint (B, n),
            input tangent adjoint (B, n, K)
        """
        inputs, input_dots, pre, pre_dots = cache
        n_layers = len(self.weights)
        grads: List[Optional[np.ndarray]] = [None] * (2 * n_layers)
        abar, adotbar = Ybar, Ydotbar
        hbar = hdotbar = None
        for l in reversed(range(n_layers)):
            W = self.weights[l]
            h, hdot = inputs[l], input_dots[l]
            grads[2 * l] = abar.T @ h + np.einsum('bik,bjk->ij', adotbar, hdot)
            grads[2 * l + 1] = abar.sum(axis=0)
            hbar = abar @ W
            hdotbar = np.einsum('ij,bik->bjk', W, adotbar)
            if l > 0:
                a, adot = pre[l - 1], pre_dots[l - 1]
                d1 = elu_prime(a)
                adotbar = d1[:, :, None] * hdotbar
                abar = d1 * hbar + np.sum(elu_second(a)[:, :, None] * adot * hdotbar, axis=2)
        return grads, hbar, hdotbar

    def input_jacobian(self, X: np.ndarray) -> np.ndarray:
        """Exact Jacobian (B, m, n) of forward at each row of X."""
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        seeds = np.broadcast_to(np.eye(self.n_in), (X2.shape[0], self.n_in, self.n_in)).copy()
        _, J, _ = self.forward_tangent(X2, seeds)
        return J[0] if single else J

    def to_dict(self) -> Dict:
        return {
            'layer_dims': self.layer_dims,
            'activation': ACTIVATION,
            'weights': [W.tolist() for W in self.weights],
            'biases': [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, document: Dict) -> 'DenseNet':
        if document.get('activation', ACTIVATION) != ACTIVATION:
            raise ValueError(f"Unsupported activation '{document['activation']}'")
        net = cls([np.array(W, dtype=np.float64) for W in document['weights']],
                  [np.array(b, dtype=np.float64) for b in document['biases']])
        if net.layer_dims != list(document['layer_dims']):
            raise ValueError(f"layer_dims {document['layer_dims']} do not match weights {net.layer_dims}")
        return net


def net_forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    return net.forward(x)


def net_input_jacobian(net: DenseNet, x: np.ndarray) -> np.ndarray:
    return net.input_jacobian(x)
