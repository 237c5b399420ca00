import numpy as np


class IdentityMap:
    """d(x) = x with the FlowModel batch interface; the untrained-flow baseline."""

    def __init__(self, dim: int = 2):
        self.dim = int(dim)

    def forward(self, X: np.ndarray) -> np.ndarray:
        return np.array(X, dtype=np.float64)

    def inverse(self, Y: np.ndarray) -> np.ndarray:
        return np.array(Y, dtype=np.float64)

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.broadcast_to(np.eye(self.dim), X.shape[:-1] + (self.dim, self.dim)).copy()
