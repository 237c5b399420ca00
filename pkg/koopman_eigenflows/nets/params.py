"""
Flat parameter vectors over one or more dense nets, and the gradient of a
batch loss that may read input-Jacobian entries.
"""
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from ..exceptions import NumericalFailureError

# loss(values (B, m), tangents (B, m, K)) -> (per-sample loss (B,), d/dvalues, d/dtangents)
LossFunction = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class ParamSlot:
    label: Tuple
    shape: Tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1


@dataclass
class ParamVector:
    """Concatenated parameters with an index map back to (net, layer, slot)."""
    values: np.ndarray
    index: List[ParamSlot]

    def __len__(self) -> int:
        return self.values.size

    def copy(self) -> 'ParamVector':
        return ParamVector(self.values.copy(), list(self.index))

    def like(self, values: np.ndarray) -> 'ParamVector':
        return ParamVector(np.asarray(values, dtype=np.float64), list(self.index))

    def unflatten(self) -> List[np.ndarray]:
        return [self.values[s.offset:s.offset + s.size].reshape(s.shape).copy() for s in self.index]

    def block(self, label: Tuple) -> np.ndarray:
        for s in self.index:
            if s.label == label:
                return self.values[s.offset:s.offset + s.size].reshape(s.shape)
        raise KeyError(label)


def _build_index(model) -> List[ParamSlot]:
    index, offset = [], 0
    for label, array in zip(model.parameter_labels(), model.parameters()):
        index.append(ParamSlot(label=tuple(label), shape=tuple(array.shape), offset=offset))
        offset += array.size
    return index


def flatten_arrays(model, arrays: List[np.ndarray]) -> ParamVector:
    index = _build_index(model)
    values = np.concatenate([np.ravel(a) for a in arrays]) if arrays else np.empty(0)
    return ParamVector(values.astype(np.float64), index)


def flatten_params(model) -> ParamVector:
    """Copy every parameter of a DenseNet or FlowModel into one flat vector."""
    return flatten_arrays(model, model.parameters())


def assign_params(model, params: ParamVector) -> None:
    """Write a flat vector back into the model's arrays in place."""
    arrays = model.parameters()
    if len(arrays) != len(params.index):
        raise ValueError(f"Model has {len(arrays)} parameter arrays, vector indexes {len(params.index)}")
    for array, slot, block in zip(arrays, params.index, params.unflatten()):
        if array.shape != slot.shape:
            raise ValueError(f"Shape mismatch at {slot.label}: {array.shape} vs {slot.shape}")
        array[...] = block


def loss_gradient(model, loss: LossFunction, X: np.ndarray, seeds: np.ndarray) -> Tuple[float, ParamVector]:
    """
    Value and parameter gradient of sum_b loss_b(model(X), J_model(X) @ seeds).

    Args:
        model: DenseNet or FlowModel
        loss (LossFunction): batch loss on values and tangents
        X (np.ndarray): (B, n) inputs
        seeds (np.ndarray): (B, n, K) tangent directions

    Returns:
        Tuple[float, ParamVector]: total loss and its gradient

    Raises:
        NumericalFailureError: a loss term or gradient is non-finite
    """
    Y, Ydot, cache = model.forward_tangent(X, seeds)
    per_sample, Ybar, Ydotbar = loss(Y, Ydot)
    bad = ~np.isfinite(per_sample)
    bad |= ~np.all(np.isfinite(Ybar.reshape(Ybar.shape[0], -1)), axis=1)
    bad |= ~np.all(np.isfinite(Ydotbar.reshape(Ydotbar.shape[0], -1)), axis=1)
    if np.any(bad):
        index = int(np.argmax(bad))
        raise NumericalFailureError(f"Non-finite loss at batch index {index}", batch_index=index)
    grads, Xbar, Xdotbar = model.backward(cache, Ybar, Ydotbar)
    flat = flatten_arrays(model, grads)
    if not np.all(np.isfinite(flat.values)):
        rows = ~np.all(np.isfinite(Xbar), axis=1)
        index = int(np.argmax(rows)) if np.any(rows) else None
        raise NumericalFailureError(f"Non-finite gradient (batch index {index})", batch_index=index)
    return float(np.sum(per_sample)), flat
