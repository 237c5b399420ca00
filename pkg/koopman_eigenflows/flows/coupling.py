"""
Affine coupling layers and their composition into an invertible map.

A layer copies the pass-through block x_a and transforms the complement
x_b -> x_b * exp(s(x_a)) + t(x_a). Each layer carries values and tangents
forward and supports reverse accumulation through both, so the flow Jacobian
can appear inside a training loss.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import NumericalFailureError
from ..nets.dense import DenseNet
from ..utils.io import PathLike, read_json, write_json

logger = logging.getLogger(__name__)

DEFAULT_S_CLAMP = 5.0


class CouplingLayer:
    def __init__(self, mask: Sequence[bool], s_net: DenseNet, t_net: DenseNet,
                 s_clamp: Optional[float] = DEFAULT_S_CLAMP, index: int = 0):
        self.mask = np.asarray(mask, dtype=bool)
        if self.mask.ndim != 1 or self.mask.all() or not self.mask.any():
            raise ValueError(f"Mask needs both a pass-through and a transformed block, got {self.mask.tolist()}")
        self.pass_idx = np.flatnonzero(self.mask)
        self.trans_idx = np.flatnonzero(~self.mask)
        for name, net in (('s_net', s_net), ('t_net', t_net)):
            if net.n_in != self.pass_idx.size or net.n_out != self.trans_idx.size:
                raise ValueError(f"{name} maps {net.n_in} -> {net.n_out}, layer needs "
                                 f"{self.pass_idx.size} -> {self.trans_idx.size}")
        self.s_net = s_net
        self.t_net = t_net
        self.s_clamp = s_clamp
        self.index = index

    @property
    def dim(self) -> int:
        return self.mask.size

    def parameters(self) -> List[np.ndarray]:
        return self.s_net.parameters() + self.t_net.parameters()

    def _scale(self, s_raw: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        # soft clamp s = S tanh(s_raw / S); returns s, ds/ds_raw, tanh
        if not self.s_clamp:
            return s_raw, np.ones_like(s_raw), np.zeros_like(s_raw)
        th = np.tanh(s_raw / self.s_clamp)
        return self.s_clamp * th, 1.0 - th ** 2, th

    def _exp(self, s: np.ndarray) -> np.ndarray:
        with np.errstate(over='ignore'):
            e = np.exp(s)
        if not np.all(np.isfinite(e)):
            raise NumericalFailureError(f"Overflow in exp(s) of coupling layer {self.index}", layer_index=self.index)
        return e

    def forward(self, X: np.ndarray) -> np.ndarray:
        xa, xb = X[:, self.pass_idx], X[:, self.trans_idx]
        s, _, _ = self._scale(self.s_net.forward(xa))
        Y = X.copy()
        Y[:, self.trans_idx] = xb * self._exp(s) + self.t_net.forward(xa)
        return Y

    def inverse(self, Y: np.ndarray) -> np.ndarray:
        ya, yb = Y[:, self.pass_idx], Y[:, self.trans_idx]
        s, _, _ = self._scale(self.s_net.forward(ya))
        X = Y.copy()
        X[:, self.trans_idx] = (yb - self.t_net.forward(ya)) * self._exp(-s)
        return X

    def forward_tangent(self, X: np.ndarray, Xdot: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Tuple]:
        pa, pb = self.pass_idx, self.trans_idx
        xa, xb = X[:, pa], X[:, pb]
        xadot, xbdot = Xdot[:, pa, :], Xdot[:, pb, :]
        s_raw, s_raw_dot, s_cache = self.s_net.forward_tangent(xa, xadot)
        t, tdot, t_cache = self.t_net.forward_tangent(xa, xadot)
        s, ds, th = self._scale(s_raw)
        sdot = ds[:, :, None] * s_raw_dot
        e = self._exp(s)

        Y = X.copy()
        Y[:, pb] = xb * e + t
        Ydot = Xdot.copy()
        Ydot[:, pb] = xbdot * e[:, :, None] + (xb * e)[:, :, None] * sdot + tdot
        cache = (xb, xbdot, s_raw_dot, ds, th, sdot, e, s_cache, t_cache)
        return Y, Ydot, cache

    def backward(self, cache: Tuple, Ybar: np.ndarray,
                 Ydotbar: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray, np.ndarray]:
        xb, xbdot, s_raw_dot, ds, th, sdot, e, s_cache, t_cache = cache
        pa, pb = self.pass_idx, self.trans_idx
        ya_bar, yb_bar = Ybar[:, pa], Ybar[:, pb]
        ya_dbar, yb_dbar = Ydotbar[:, pa, :], Ydotbar[:, pb, :]

        # tangent output
        xbdot_bar = yb_dbar * e[:, :, None]
        e_bar = np.sum(yb_dbar * (xbdot + xb[:, :, None] * sdot), axis=2)
        xb_bar = np.sum(yb_dbar * e[:, :, None] * sdot, axis=2)
        sdot_bar = yb_dbar * (xb * e)[:, :, None]
        tdot_bar = yb_dbar
        # value output
        xb_bar = xb_bar + yb_bar * e
        e_bar = e_bar + yb_bar * xb
        t_bar = yb_bar
        s_bar = e_bar * e

        s_raw_dot_bar = ds[:, :, None] * sdot_bar
        s_raw_bar = ds * s_bar
        if self.s_clamp:
            s_raw_bar = s_raw_bar + np.sum(sdot_bar * s_raw_dot, axis=2) * (-2.0 * th * ds / self.s_clamp)

        gs, xa_bar_s, xadot_bar_s = self.s_net.backward(s_cache, s_raw_bar, s_raw_dot_bar)
        gt, xa_bar_t, xadot_bar_t = self.t_net.backward(t_cache, t_bar, tdot_bar)

        Xbar = np.empty_like(Ybar)
        Xbar[:, pa] = ya_bar + xa_bar_s + xa_bar_t
        Xbar[:, pb] = xb_bar
        Xdotbar = np.empty_like(Ydotbar)
        Xdotbar[:, pa, :] = ya_dbar + xadot_bar_s + xadot_bar_t
        Xdotbar[:, pb, :] = xbdot_bar
        return gs + gt, Xbar, Xdotbar

    def to_dict(self) -> Dict:
        return {'mask': self.mask.tolist(), 's_net': self.s_net.to_dict(), 't_net': self.t_net.to_dict()}


def alternating_masks(dim: int, n_layers: int) -> List[np.ndarray]:
    """Even layers pass the first half of the coordinates through, odd layers the second half."""
    if dim < 2:
        raise ValueError(f"Coupling flows need dim >= 2, got {dim}")
    half = dim // 2
    masks = []
    for i in range(n_layers):
        mask = np.zeros(dim, dtype=bool)
        if i % 2 == 0:
            mask[:half] = True
        else:
            mask[half:] = True
        masks.append(mask)
    return masks


class FlowModel:
    """Composition d(x) = d_k o ... o d_1(x) of affine coupling layers."""

    def __init__(self, layers: Sequence[CouplingLayer]):
        if not layers:
            raise ValueError("FlowModel needs at least one coupling layer")
        dims = {layer.dim for layer in layers}
        if len(dims) != 1:
            raise ValueError(f"Coupling layers disagree on dimension: {sorted(dims)}")
        self.layers: List[CouplingLayer] = list(layers)
        for i, layer in enumerate(self.layers):
            layer.index = i
        self.dim = dims.pop()
        self.logger = logging.getLogger(__name__)

    @classmethod
    def create(cls, dim: int = 2, n_layers: int = 7, hidden: Sequence[int] = (120, 120, 120),
               seed: int = 0, s_clamp: Optional[float] = DEFAULT_S_CLAMP) -> 'FlowModel':
        """
        Build a flow that is exactly the identity map: every s and t net ends in a zero layer.

        Args:
            dim (int): state dimension
            n_layers (int): number of coupling layers, >= 2 so every coordinate gets transformed
            hidden (Sequence[int]): hidden widths of every s and t net
            seed (int): seed for the hidden-layer weights
            s_clamp (float, optional): bound of the scaled tanh on s; None disables it
        """
        if n_layers < 2:
            raise ValueError(f"n_layers must be >= 2 so no coordinate passes through every layer, got {n_layers}")
        rng = np.random.default_rng(seed)
        layers = []
        for i, mask in enumerate(alternating_masks(dim, n_layers)):
            n_in, n_out = int(mask.sum()), int((~mask).sum())
            dims = [n_in] + list(hidden) + [n_out]
            s_net = DenseNet.create(dims, rng, zero_output=True)
            t_net = DenseNet.create(dims, rng, zero_output=True)
            layers.append(CouplingLayer(mask, s_net, t_net, s_clamp=s_clamp, index=i))
        return cls(layers)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def s_clamp(self) -> Optional[float]:
        return self.layers[0].s_clamp

    def parameters(self) -> List[np.ndarray]:
        params = []
        for layer in self.layers:
            params.extend(layer.parameters())
        return params

    def parameter_labels(self) -> List[Tuple]:
        labels = []
        for i, layer in enumerate(self.layers):
            for net_offset, net in enumerate((layer.s_net, layer.t_net)):
                labels.extend((2 * i + net_offset,) + label for label in net.parameter_labels())
        return labels

    @property
    def n_params(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def _batch(self, X: np.ndarray) -> Tuple[np.ndarray, bool]:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise ValueError(f"Flow expects dimension {self.dim}, got {X.shape[-1]}")
        return np.atleast_2d(X), X.ndim == 1

    def forward(self, X: np.ndarray) -> np.ndarray:
        Y, single = self._batch(X)
        for layer in self.layers:
            Y = layer.forward(Y)
        return Y[0] if single else Y

    def inverse(self, Y: np.ndarray) -> np.ndarray:
        X, single = self._batch(Y)
        for layer in reversed(self.layers):
            X = layer.inverse(X)
        return X[0] if single else X

    def forward_tangent(self, X: np.ndarray, Xdot: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[Tuple]]:
        caches = []
        for layer in self.layers:
            X, Xdot, cache = layer.forward_tangent(X, Xdot)
            caches.append(cache)
        return X, Xdot, caches

    def backward(self, caches: List[Tuple], Ybar: np.ndarray,
                 Ydotbar: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray, np.ndarray]:
        grads_per_layer: List[List[np.ndarray]] = [None] * self.n_layers
        for i in reversed(range(self.n_layers)):
            grads_per_layer[i], Ybar, Ydotbar = self.layers[i].backward(caches[i], Ybar, Ydotbar)
        grads = [g for layer_grads in grads_per_layer for g in layer_grads]
        return grads, Ybar, Ydotbar

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        """Chain-rule Jacobian (B, d, d), or (d, d) for a single state."""
        X2, single = self._batch(X)
        seeds = np.broadcast_to(np.eye(self.dim), (X2.shape[0], self.dim, self.dim)).copy()
        _, J, _ = self.forward_tangent(X2, seeds)
        return J[0] if single else J

    def to_dict(self) -> Dict:
        return {'dim': self.dim, 's_clamp': self.s_clamp, 'layers': [layer.to_dict() for layer in self.layers]}

    @classmethod
    def from_dict(cls, document: Dict) -> 'FlowModel':
        s_clamp = document.get('s_clamp', DEFAULT_S_CLAMP)
        layers = [CouplingLayer(record['mask'], DenseNet.from_dict(record['s_net']),
                                DenseNet.from_dict(record['t_net']), s_clamp=s_clamp, index=i)
                  for i, record in enumerate(document['layers'])]
        return cls(layers)

    def save(self, path: PathLike) -> Path:
        path = write_json(path, self.to_dict())
        self.logger.info(f"Saved flow with {self.n_layers} layers to {path}")
        return path

    @classmethod
    def load(cls, path: PathLike) -> 'FlowModel':
        return cls.from_dict(read_json(path))


def layer_forward(layer: CouplingLayer, x: np.ndarray) -> np.ndarray:
    return layer.forward(np.atleast_2d(x))[0] if np.ndim(x) == 1 else layer.forward(x)


def layer_inverse(layer: CouplingLayer, y: np.ndarray) -> np.ndarray:
    return layer.inverse(np.atleast_2d(y))[0] if np.ndim(y) == 1 else layer.inverse(y)


def flow_forward(flow: FlowModel, x: np.ndarray) -> np.ndarray:
    return flow.forward(x)


def flow_inverse(flow: FlowModel, y: np.ndarray) -> np.ndarray:
    return flow.inverse(y)


def flow_jacobian(flow: FlowModel, x: np.ndarray) -> np.ndarray:
    return flow.jacobian(x)
