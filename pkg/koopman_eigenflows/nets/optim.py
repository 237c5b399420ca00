from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> 'AdamState':
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(params: np.ndarray, grads: np.ndarray, state: Optional[AdamState] = None,
              lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> Tuple[np.ndarray, AdamState]:
    """
    One bias-corrected Adam update.

    Args:
        params (np.ndarray): flat parameters
        grads (np.ndarray): flat gradient
        state (AdamState, optional): moments; zero moments when omitted

    Returns:
        Tuple[np.ndarray, AdamState]: updated parameters and a new state
    """
    if state is None:
        state = AdamState.zeros(params.size)
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grads
    v = beta2 * state.v + (1.0 - beta2) * grads ** 2
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_params, AdamState(m, v, t)
