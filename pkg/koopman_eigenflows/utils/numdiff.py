"""
Central finite differences used by the oracle suite and the tests.
"""
from typing import Callable

import numpy as np


def central_jacobian(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """(m, n) Jacobian of fn: R^n -> R^m at a single point x."""
    x = np.asarray(x, dtype=np.float64)
    columns = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        columns.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2.0 * h))
    return np.stack(columns, axis=-1)


def central_gradient(fn: Callable[[np.ndarray], float], theta: np.ndarray, h: float = 1e-6,
                     indices=None) -> np.ndarray:
    """Gradient of a scalar fn at theta; entries outside indices are left at zero."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    for i in (range(theta.size) if indices is None else indices):
        step = np.zeros_like(theta)
        step[i] = h
        grad[i] = (fn(theta + step) - fn(theta - step)) / (2.0 * h)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-12) -> float:
    """max |a - b| relative to max(|b|), with a floor for near-zero references."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), floor))
