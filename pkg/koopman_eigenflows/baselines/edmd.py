"""
Generator EDMD: least-squares fit of a finite generator matrix L on a
dictionary psi from (x, xdot) pairs, psi_dot = grad psi(x) xdot ~ L psi(x).
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import scipy.linalg

from ..dynamics.types import TrajectoryDataset
from ..exceptions import DegenerateDataError
from ..utils.io import PathLike, read_json, write_json
from ..utils.linalg import RELATIVE_CUTOFF, svd_lstsq
from .dictionary import dictionary_from_dict

logger = logging.getLogger(__name__)

DEFAULT_RIDGE = 1e-8


@dataclass
class GeneratorEDMDModel:
    L: np.ndarray
    C: np.ndarray
    dictionary: object
    rank: int = 0
    train_rmse: float = float('nan')

    @property
    def D(self) -> int:
        return self.L.shape[0]

    @property
    def spectral_abscissa(self) -> float:
        """Largest real part in the spectrum of L; may be positive, unlike the KEFMD spectrum."""
        return float(np.max(scipy.linalg.eigvals(self.L).real))

    def propagator(self, dt: float) -> np.ndarray:
        return scipy.linalg.expm(self.L * dt)

    def to_dict(self) -> dict:
        return {'L': self.L.tolist(), 'C': self.C.tolist(), 'dictionary': self.dictionary.to_dict(),
                'rank': self.rank, 'train_rmse': self.train_rmse}

    def save(self, path: PathLike) -> Path:
        path = write_json(path, self.to_dict())
        logger.info(f"Saved generator EDMD model ({self.dictionary.kind.value}, D={self.D}) to {path}")
        return path

    @classmethod
    def load(cls, path: PathLike) -> 'GeneratorEDMDModel':
        document = read_json(path)
        return cls(L=np.asarray(document['L'], dtype=np.float64), C=np.asarray(document['C'], dtype=np.float64),
                   dictionary=dictionary_from_dict(document['dictionary']), rank=int(document.get('rank', 0)),
                   train_rmse=float(document.get('train_rmse', float('nan'))))


def fit_generator_edmd(data: Union[TrajectoryDataset, tuple], dictionary, ridge: float = DEFAULT_RIDGE,
                       rcond: float = RELATIVE_CUTOFF) -> GeneratorEDMDModel:
    """
    Fit L^T = argmin ||dPsi - Psi L^T||^2 and C^T = argmin ||X - Psi C^T||^2.

    Args:
        data: dataset, or a tuple (states, derivs)
        dictionary: MonomialDictionary or RBFDictionary
        ridge (float): Tikhonov weight
        rcond (float): relative singular value cutoff

    Raises:
        DegenerateDataError: the dataset is empty
    """
    if isinstance(data, TrajectoryDataset):
        X, Xdot = data.states, data.derivs
    else:
        X, Xdot = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in data)
    if X.shape[0] == 0:
        raise DegenerateDataError("Cannot fit generator EDMD on an empty dataset")

    Psi = dictionary.evaluate(X)
    dPsi = np.einsum('bDj,bj->bD', dictionary.gradient(X), Xdot)
    LT, rank = svd_lstsq(Psi, dPsi, rcond=rcond, ridge=ridge)
    CT, _ = svd_lstsq(Psi, X, rcond=rcond, ridge=ridge)
    if rank < Psi.shape[1]:
        logger.warning(f"Dictionary matrix has effective rank {rank} < {Psi.shape[1]} ({dictionary.kind.value}); "
                       f"generator fit is underdetermined")
    train_rmse = float(np.sqrt(np.mean((X - Psi @ CT) ** 2)))
    model = GeneratorEDMDModel(L=LT.T, C=CT.T, dictionary=dictionary, rank=rank, train_rmse=train_rmse)
    logger.info(f"Generator EDMD fit ({dictionary.kind.value}, D={model.D}): rank={rank}, "
                f"spectral abscissa={model.spectral_abscissa:.4g}")
    return model


def predict_edmd(model: GeneratorEDMDModel, x0: np.ndarray, dt: float, k_steps: int) -> np.ndarray:
    """x_k = C expm(L dt)^k psi(x0) for k = 0..k_steps, shape (k_steps + 1, d)."""
    return predict_edmd_batch(model, np.asarray(x0, dtype=np.float64)[None, :], dt, k_steps)[0]


def predict_edmd_batch(model: GeneratorEDMDModel, X0: np.ndarray, dt: float, k_steps: int) -> np.ndarray:
    if k_steps < 0:
        raise ValueError(f"k_steps must be >= 0, got {k_steps}")
    K = model.propagator(dt)
    psi = model.dictionary.evaluate(np.atleast_2d(X0))
    out = np.empty((psi.shape[0], k_steps + 1, model.C.shape[0]))
    out[:, 0] = psi @ model.C.T
    for k in range(1, k_steps + 1):
        psi = psi @ K.T
        out[:, k] = psi @ model.C.T
    return out
