"""
Lifted LTI predictor in eigenfunction coordinates:

    z0 = lift(x0),  z_{k+1} = Lambda_d z_k,  x_k = V z_k

with Lambda = diag(lambda) taken from the eigenfunction library and V
fitted by least squares.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np

from ..dynamics.types import TrajectoryDataset
from ..eigen.lift import EigenfunctionLibrary
from ..exceptions import DegenerateDataError
from ..utils.io import PathLike, read_json, write_json
from ..utils.linalg import RELATIVE_CUTOFF, svd_lstsq

logger = logging.getLogger(__name__)

LiftFunction = Callable[[np.ndarray], np.ndarray]


def _fit_reconstruction(X: np.ndarray, lift: LiftFunction, rcond: float = RELATIVE_CUTOFF,
                        ridge: float = 0.0) -> Tuple[np.ndarray, int]:
    if X.shape[0] == 0:
        raise DegenerateDataError("Cannot fit a reconstruction matrix on an empty dataset")
    Z = np.atleast_2d(lift(X))
    B, rank = svd_lstsq(Z, X, rcond=rcond, ridge=ridge)
    if rank < X.shape[1]:
        logger.warning(f"Lifted data has effective rank {rank} < state dimension {X.shape[1]}; "
                       f"reconstruction is underdetermined")
    return B.T, rank


def fit_reconstruction(data: Union[TrajectoryDataset, np.ndarray], lift: LiftFunction,
                       rcond: float = RELATIVE_CUTOFF, ridge: float = 0.0) -> np.ndarray:
    """
    V = argmin sum_i ||x_i - V lift(x_i)||^2 by truncated SVD.

    Args:
        data: dataset or (N, d) states
        lift: callable mapping (N, d) states to (N, D) lifted coordinates
        rcond (float): relative singular value cutoff
        ridge (float): optional Tikhonov weight

    Returns:
        np.ndarray: (d, D) reconstruction matrix
    """
    X = data.states if isinstance(data, TrajectoryDataset) else np.atleast_2d(np.asarray(data, dtype=np.float64))
    V, _ = _fit_reconstruction(X, lift, rcond, ridge)
    return V


def discretize(Lambda: np.ndarray, dt: float) -> np.ndarray:
    """exp(Lambda dt) for a vector of eigenvalues or a diagonal matrix."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    Lambda = np.asarray(Lambda, dtype=np.float64)
    if Lambda.ndim == 2:
        return np.diag(np.exp(np.diag(Lambda) * dt))
    return np.exp(Lambda * dt)


@dataclass
class LiftedLTIModel:
    lambdas: np.ndarray
    dt: float
    V: np.ndarray
    library: EigenfunctionLibrary
    rank: int = 0
    train_rmse: float = float('nan')

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=np.float64)
        self.lambdas_d = discretize(self.lambdas, self.dt)

    @property
    def D(self) -> int:
        return self.lambdas.size

    @property
    def Lambda(self) -> np.ndarray:
        return np.diag(self.lambdas)

    @property
    def Lambda_d(self) -> np.ndarray:
        return np.diag(self.lambdas_d)

    @property
    def constant_mode(self) -> np.ndarray:
        """Fitted column of V on the constant eigenfunction; close to zero for an attractor at the origin."""
        return self.V[:, self.library.library.constant_position]

    @property
    def spectral_abscissa(self) -> float:
        nonconstant = np.delete(self.lambdas, self.library.library.constant_position)
        return float(np.max(nonconstant)) if nonconstant.size else 0.0

    def lift(self, X: np.ndarray) -> np.ndarray:
        return self.library.lift(X)

    def evolve(self, z0: np.ndarray, k_steps: int) -> np.ndarray:
        """Lifted states (..., k_steps + 1, D) under repeated multiplication by Lambda_d."""
        if k_steps < 0:
            raise ValueError(f"k_steps must be >= 0, got {k_steps}")
        z0 = np.asarray(z0, dtype=np.float64)
        Z = np.empty(z0.shape[:-1] + (k_steps + 1, self.D))
        z = z0
        Z[..., 0, :] = z
        for k in range(1, k_steps + 1):
            z = self.lambdas_d * z
            Z[..., k, :] = z
        return Z

    def to_dict(self, library_path: Optional[PathLike] = None) -> dict:
        return {
            'lambdas': self.lambdas.tolist(),
            'dt': self.dt,
            'V': self.V.tolist(),
            'rank': self.rank,
            'train_rmse': self.train_rmse,
            'library': str(library_path) if library_path is not None else None,
        }

    def save(self, path: PathLike, library_path: PathLike) -> Path:
        path = write_json(path, self.to_dict(library_path))
        logger.info(f"Saved lifted LTI model (D={self.D}, dt={self.dt}) to {path}")
        return path

    @classmethod
    def load(cls, path: PathLike, library: Optional[EigenfunctionLibrary] = None) -> 'LiftedLTIModel':
        path = Path(path)
        document = read_json(path)
        if library is None:
            library_path = Path(document['library'])
            if not library_path.is_absolute():
                library_path = path.parent / library_path
            library = EigenfunctionLibrary.load(library_path)
        return cls(lambdas=np.asarray(document['lambdas']), dt=float(document['dt']),
                   V=np.asarray(document['V'], dtype=np.float64), library=library,
                   rank=int(document.get('rank', 0)), train_rmse=float(document.get('train_rmse', float('nan'))))


def fit_kefmd(data: Union[TrajectoryDataset, np.ndarray], library: EigenfunctionLibrary, dt: Optional[float] = None,
              rcond: float = RELATIVE_CUTOFF, ridge: float = 0.0) -> LiftedLTIModel:
    """Assemble the lifted LTI model: Lambda from the library, V fitted on the data."""
    if isinstance(data, TrajectoryDataset):
        X = data.states
        dt = data.dt if dt is None else dt
    else:
        X = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if dt is None:
        raise ValueError("dt is required when fitting on a bare state array")
    V, rank = _fit_reconstruction(X, library.lift, rcond, ridge)
    residual = X - library.lift(X) @ V.T
    train_rmse = float(np.sqrt(np.mean(residual ** 2)))
    logger.info(f"KEFMD fit: D={library.D}, rank={rank}, training reconstruction RMSE={train_rmse:.3e}")
    return LiftedLTIModel(lambdas=library.lambdas.copy(), dt=float(dt), V=V, library=library,
                          rank=rank, train_rmse=train_rmse)


def predict_trajectory(model: LiftedLTIModel, x0: np.ndarray, k_steps: int) -> np.ndarray:
    """
    Predicted states x_0..x_K, (k_steps + 1, d). The lift is applied once at x0.
    """
    z0 = model.lift(np.asarray(x0, dtype=np.float64))
    return model.evolve(z0, k_steps) @ model.V.T


def predict_batch(model: LiftedLTIModel, X0: np.ndarray, k_steps: int) -> np.ndarray:
    """(S, k_steps + 1, d) predictions for S initial conditions."""
    Z0 = model.lift(np.atleast_2d(np.asarray(X0, dtype=np.float64)))
    return model.evolve(Z0, k_steps) @ model.V.T


def predict_derivative(model: LiftedLTIModel, x: np.ndarray) -> np.ndarray:
    """V Lambda lift(x), the model's estimate of f(x)."""
    return (model.lift(np.asarray(x, dtype=np.float64)) * model.lambdas) @ model.V.T
