"""
Dictionaries of observables with analytic gradients for generator EDMD.

Shapes: evaluate (B, d) -> (B, D), gradient (B, d) -> (B, D, d).
"""
import enum
import itertools
import logging
from typing import Dict, Optional

import numpy as np
from scipy.spatial.distance import pdist

from ..exceptions import ConfigurationError, DegenerateDataError

logger = logging.getLogger(__name__)


class DictionaryKind(enum.Enum):
    MONOMIAL = "monomial"
    RBF = "rbf"


class MonomialDictionary:
    """
    Monomials x^m, ordered by total degree and then with x_1 powers first.

    mode 'total' keeps |m| <= degree; mode 'per_coordinate' keeps every
    m with 0 <= m_j <= degree.
    """
    kind = DictionaryKind.MONOMIAL

    def __init__(self, dim: int, degree: int, mode: str = 'total'):
        if degree < 0:
            raise ConfigurationError(f"Monomial degree must be >= 0, got {degree}")
        if mode not in ('total', 'per_coordinate'):
            raise ConfigurationError(f"Unknown monomial mode '{mode}', expected 'total' or 'per_coordinate'")
        self.dim = int(dim)
        self.degree = int(degree)
        self.mode = mode
        exps = itertools.product(range(self.degree + 1), repeat=self.dim)
        if mode == 'total':
            exps = (m for m in exps if sum(m) <= self.degree)
        self.exponents = np.array(sorted(exps, key=lambda m: (sum(m), tuple(-v for v in m))), dtype=np.int64)

    @property
    def size(self) -> int:
        return self.exponents.shape[0]

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.prod(X[:, None, :] ** self.exponents[None], axis=2)

    def gradient(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        G = np.zeros((X.shape[0], self.size, self.dim))
        for j in range(self.dim):
            lowered = self.exponents.copy()
            lowered[:, j] = np.maximum(lowered[:, j] - 1, 0)
            G[:, :, j] = self.exponents[:, j] * np.prod(X[:, None, :] ** lowered[None], axis=2)
        return G

    def to_dict(self) -> Dict:
        return {'kind': self.kind.value, 'dim': self.dim, 'degree': self.degree, 'mode': self.mode}


class RBFDictionary:
    """Constant, linear coordinates and Gaussians exp(-gamma ||x - c_i||^2)."""
    kind = DictionaryKind.RBF

    def __init__(self, centers: np.ndarray, gamma: float):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        if gamma <= 0:
            raise ConfigurationError(f"RBF width gamma must be positive, got {gamma}")
        self.gamma = float(gamma)
        self.dim = self.centers.shape[1]

    @classmethod
    def from_data(cls, states: np.ndarray, size: int, seed: int = 0) -> 'RBFDictionary':
        """
        Draw size - 1 - d centers from the states without replacement; gamma = 1 / (2 sigma^2)
        with sigma the median pairwise distance between centers.
        """
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        n, d = states.shape
        n_centers = int(size) - 1 - d
        if n_centers < 1:
            raise ConfigurationError(f"RBF dictionary of size {size} leaves no room for centers in dimension {d}")
        if n < n_centers:
            raise DegenerateDataError(f"Need at least {n_centers} states to draw RBF centers, got {n}")
        rng = np.random.default_rng(seed)
        centers = states[np.sort(rng.choice(n, size=n_centers, replace=False))]
        sigma = float(np.median(pdist(centers))) if n_centers > 1 else 1.0
        if sigma <= 0.0:
            raise DegenerateDataError("RBF centers coincide; median distance is zero")
        logger.debug(f"RBF dictionary: {n_centers} centers, sigma={sigma:.4g}")
        return cls(centers, 1.0 / (2.0 * sigma ** 2))

    @property
    def size(self) -> int:
        return 1 + self.dim + self.centers.shape[0]

    def _gaussians(self, X: np.ndarray) -> np.ndarray:
        diff = X[:, None, :] - self.centers[None]
        return np.exp(-self.gamma * np.sum(diff ** 2, axis=2)), diff

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        phi, _ = self._gaussians(X)
        return np.concatenate([np.ones((X.shape[0], 1)), X, phi], axis=1)

    def gradient(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        B = X.shape[0]
        phi, diff = self._gaussians(X)
        G = np.zeros((B, self.size, self.dim))
        G[:, 1:1 + self.dim, :] = np.eye(self.dim)
        G[:, 1 + self.dim:, :] = -2.0 * self.gamma * diff * phi[:, :, None]
        return G

    def to_dict(self) -> Dict:
        return {'kind': self.kind.value, 'centers': self.centers.tolist(), 'gamma': self.gamma}


def dictionary_from_dict(document: Dict):
    kind = DictionaryKind(document['kind'])
    if kind == DictionaryKind.MONOMIAL:
        return MonomialDictionary(document['dim'], document['degree'], document.get('mode', 'total'))
    return RBFDictionary(document['centers'], document['gamma'])


def make_dictionary(kind: str, dim: int, states: Optional[np.ndarray] = None, degree: int = 5,
                    mode: str = 'per_coordinate', size: int = 36, seed: int = 0):
    kind = DictionaryKind(kind)
    if kind == DictionaryKind.MONOMIAL:
        return MonomialDictionary(dim, degree, mode)
    if states is None:
        raise ConfigurationError("An RBF dictionary needs training states to place its centers")
    return RBFDictionary.from_data(states, size, seed)


def dict_eval(dictionary, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = dictionary.evaluate(x)
    return out[0] if x.ndim == 1 else out


def dict_grad(dictionary, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = dictionary.gradient(x)
    return out[0] if x.ndim == 1 else out
