"""
Closed-form conjugacy of the ex1 system to its linearization, used as an
oracle for the learned flow.
"""
import numpy as np

from ..exceptions import ResonanceError


def _quadratic_gain(mu: float, lam: float) -> float:
    if lam == 2.0 * mu:
        raise ResonanceError(f"Resonant parameters lam == 2*mu ({lam} == 2*{mu}); no polynomial conjugacy")
    return lam / (lam - 2.0 * mu)


def exact_diffeo_ex1(x: np.ndarray, mu: float, lam: float) -> np.ndarray:
    """d(x) = [x1, x2 - lam / (lam - 2 mu) * x1^2] for a state (2,) or batch (..., 2)."""
    k = _quadratic_gain(mu, lam)
    x = np.asarray(x, dtype=np.float64)
    return np.stack([x[..., 0], x[..., 1] - k * x[..., 0] ** 2], axis=-1)


class ExactEx1Diffeomorphism:
    """The ex1 conjugacy with the same batch interface as a FlowModel."""

    def __init__(self, mu: float = -0.7, lam: float = -0.3):
        self.mu = float(mu)
        self.lam = float(lam)
        self.gain = _quadratic_gain(self.mu, self.lam)
        self.dim = 2

    def forward(self, X: np.ndarray) -> np.ndarray:
        return exact_diffeo_ex1(X, self.mu, self.lam)

    def inverse(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.float64)
        return np.stack([Y[..., 0], Y[..., 1] + self.gain * Y[..., 0] ** 2], axis=-1)

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        J = np.zeros(X.shape[:-1] + (2, 2))
        J[..., 0, 0] = 1.0
        J[..., 1, 1] = 1.0
        J[..., 1, 0] = -2.0 * self.gain * X[..., 0]
        return J
