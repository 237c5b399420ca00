"""
Unit-box scaling and the composed eigenfunctions phi_m(g(d(x))).
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np

from ..dynamics.exact import ExactEx1Diffeomorphism
from ..dynamics.types import TrajectoryDataset
from ..exceptions import ConfigurationError, DegenerateDataError
from ..flows.coupling import FlowModel
from ..flows.identity import IdentityMap
from ..utils.io import PathLike, read_json, write_json
from .principal import MultiIndexLibrary, PrincipalEigenpairs, enumerate_library, principal_eigenpairs

logger = logging.getLogger(__name__)

BOX_MARGIN = 1.05
# |g(d(x))_j| above this is reported as extrapolation
EXTRAPOLATION_LIMIT = 1.5


@dataclass(frozen=True)
class BoxScaling:
    radius: np.ndarray

    def __post_init__(self):
        radius = np.asarray(self.radius, dtype=np.float64)
        if np.any(~np.isfinite(radius)) or np.any(radius <= 0.0):
            raise DegenerateDataError(f"Box scaling radius must be positive in every dimension, got {radius.tolist()}")
        object.__setattr__(self, 'radius', radius)

    def apply(self, Y: np.ndarray) -> np.ndarray:
        return np.asarray(Y, dtype=np.float64) / self.radius


def _states(data: Union[TrajectoryDataset, np.ndarray]) -> np.ndarray:
    if isinstance(data, TrajectoryDataset):
        return data.states
    return np.atleast_2d(np.asarray(data, dtype=np.float64))


def fit_box_scaling(diffeo, data: Union[TrajectoryDataset, np.ndarray], margin: float = BOX_MARGIN) -> BoxScaling:
    """
    r_j = margin * max_i |d(x_i)_j| over the training states.

    Raises:
        DegenerateDataError: no states, or a zero radius in some dimension
    """
    X = _states(data)
    if X.shape[0] == 0:
        raise DegenerateDataError("Cannot fit box scaling on an empty dataset")
    Y = np.atleast_2d(diffeo.forward(X))
    radius = margin * np.max(np.abs(Y), axis=0)
    if np.any(radius <= 0.0):
        raise DegenerateDataError(f"Zero scaling radius in dimension(s) {np.flatnonzero(radius <= 0.0).tolist()}")
    return BoxScaling(radius)


def diffeo_reference(diffeo, flow_path: Optional[PathLike] = None) -> Dict:
    if isinstance(diffeo, ExactEx1Diffeomorphism):
        return {'kind': 'exact_ex1', 'mu': diffeo.mu, 'lam': diffeo.lam}
    if isinstance(diffeo, IdentityMap):
        return {'kind': 'identity', 'dim': diffeo.dim}
    if isinstance(diffeo, FlowModel):
        if flow_path is None:
            raise ConfigurationError("A flow checkpoint path is needed to reference a trained flow")
        return {'kind': 'flow', 'path': str(flow_path)}
    raise ConfigurationError(f"Cannot serialize a reference to {type(diffeo).__name__}")


def resolve_diffeo(reference: Dict, base_dir: Optional[Path] = None):
    kind = reference.get('kind')
    if kind == 'exact_ex1':
        return ExactEx1Diffeomorphism(reference['mu'], reference['lam'])
    if kind == 'identity':
        return IdentityMap(reference['dim'])
    if kind == 'flow':
        path = Path(reference["path"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return FlowModel.load(path)
    raise ConfigurationError(f"Unknown diffeomorphism reference {reference}")


class EigenfunctionLibrary:
    """
    D eigenpairs (lambda_m, phi_m o g o d) of the nonlinear system.

    Calling the library lifts states: z_m(x) = prod_j c_j(x)^{m_j} with
    c(x) = W^T g(d(x)).
    """

    def __init__(self, A: np.ndarray, principal: PrincipalEigenpairs, library: MultiIndexLibrary,
                 scaling: BoxScaling, diffeo, flow_path: Optional[PathLike] = None):
        self.A = np.asarray(A, dtype=np.float64)
        self.principal = principal
        self.library = library
        self.scaling = scaling
        self.diffeo = diffeo
        self.flow_path = flow_path
        self.logger = logging.getLogger(__name__)

    @property
    def D(self) -> int:
        return self.library.size

    @property
    def dim(self) -> int:
        return self.principal.dim

    @property
    def lambdas(self) -> np.ndarray:
        return self.library.lambdas

    def scaled_coordinates(self, X: np.ndarray) -> np.ndarray:
        return self.scaling.apply(np.atleast_2d(self.diffeo.forward(np.atleast_2d(X))))

    def principal_values(self, X: np.ndarray) -> np.ndarray:
        return self.principal.evaluate(self.scaled_coordinates(X))

    def lift(self, X: np.ndarray) -> np.ndarray:
        """
        Lift states into eigenfunction coordinates.

        Args:
            X (np.ndarray): state (d,) or batch (B, d)

        Returns:
            np.ndarray: (D,) or (B, D); the zero multi-index gives the constant 1
        """
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        Y = self.scaled_coordinates(X)
        outside = np.any(np.abs(Y) > EXTRAPOLATION_LIMIT, axis=1)
        if np.any(outside):
            self.logger.warning(f"Lifting {int(outside.sum())} state(s) outside {EXTRAPOLATION_LIMIT}x the unit box; "
                                f"eigenfunctions are extrapolated")
        C = self.principal.evaluate(Y)
        Z = np.prod(C[:, None, :] ** self.library.indices[None, :, :], axis=2)
        return Z[0] if single else Z

    __call__ = lift

    def to_dict(self) -> Dict:
        return {
            'A': self.A.tolist(),
            'lambdas_p': self.principal.lambdas.tolist(),
            'V_A': self.principal.right_eigvecs.tolist(),
            'W': self.principal.adjoint_basis.tolist(),
            'max_powers': list(self.library.max_powers),
            'radii': self.scaling.radius.tolist(),
            'diffeo': diffeo_reference(self.diffeo, self.flow_path),
            'D': self.D,
        }

    def save(self, path: PathLike) -> Path:
        path = write_json(path, self.to_dict())
        self.logger.info(f"Saved eigenfunction library (D={self.D}) to {path}")
        return path

    @classmethod
    def load(cls, path: PathLike, diffeo=None) -> 'EigenfunctionLibrary':
        path = Path(path)
        document = read_json(path)
        principal = PrincipalEigenpairs(lambdas=np.asarray(document['lambdas_p'], dtype=np.float64),
                                        right_eigvecs=np.asarray(document['V_A'], dtype=np.float64),
                                        adjoint_basis=np.asarray(document['W'], dtype=np.float64))
        library = enumerate_library(principal.lambdas, document['max_powers'])
        if diffeo is None:
            diffeo = resolve_diffeo(document['diffeo'], base_dir=path.parent)
        flow_path = document['diffeo'].get('path')
        return cls(document['A'], principal, library, BoxScaling(document['radii']), diffeo, flow_path=flow_path)


def build_eigenfunction_library(diffeo, A: np.ndarray, data: Union[TrajectoryDataset, np.ndarray],
                                max_powers: Sequence[int], margin: float = BOX_MARGIN,
                                flow_path: Optional[PathLike] = None) -> EigenfunctionLibrary:
    """Principal eigenpairs of A, the multi-index library, and the box scaling fitted on the data's image."""
    principal = principal_eigenpairs(A)
    library = enumerate_library(principal.lambdas, max_powers)
    scaling = fit_box_scaling(diffeo, data, margin=margin)
    logger.info(f"Built eigenfunction library: D={library.size}, radii={scaling.radius.tolist()}")
    return EigenfunctionLibrary(A, principal, library, scaling, diffeo, flow_path=flow_path)


def lift(lib: EigenfunctionLibrary, x: np.ndarray) -> np.ndarray:
    return lib.lift(x)
