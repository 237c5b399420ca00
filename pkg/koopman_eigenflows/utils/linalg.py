"""
SVD based least squares shared by the KEFMD reconstruction fit and the
generator-EDMD baselines.
"""
import logging
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)

RELATIVE_CUTOFF = 1e-10


def svd_lstsq(X: np.ndarray, Y: np.ndarray, rcond: float = RELATIVE_CUTOFF,
              ridge: float = 0.0) -> Tuple[np.ndarray, int]:
    """
    Solve min_B ||Y - X B||_F^2 (+ ridge ||B||_F^2) through a truncated SVD of X.

    Singular values below rcond * s_max are discarded. With ridge > 0 the
    kept values are filtered Tikhonov-style, s / (s^2 + ridge).

    Args:
        X (np.ndarray): (N, p) regressor matrix
        Y (np.ndarray): (N, q) targets
        rcond (float): relative singular value cutoff
        ridge (float): Tikhonov weight

    Returns:
        Tuple[np.ndarray, int]: the (p, q) solution and the effective rank of X
    """
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((X.shape[1], Y.shape[1])), 0
    keep = s > rcond * s[0]
    rank = int(np.count_nonzero(keep))
    inv = np.zeros_like(s)
    if ridge > 0.0:
        inv[keep] = s[keep] / (s[keep] ** 2 + ridge)
    else:
        inv[keep] = 1.0 / s[keep]
    B = Vt.T @ (inv[:, None] * (U.T @ Y))
    return B, rank
