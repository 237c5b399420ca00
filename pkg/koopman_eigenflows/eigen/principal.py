"""
Principal eigenpairs of the Jacobian linearization and the multi-index
product library generated from them.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

from ..exceptions import DiagonalizabilityError, StabilityViolationError, UnsupportedSpectrumError

logger = logging.getLogger(__name__)

# eigenvector matrices worse conditioned than this are treated as defective
MAX_EIGVEC_COND = 1e8
IMAG_TOL = 1e-12


@dataclass(frozen=True)
class PrincipalEigenpairs:
    """
    Eigenvalues of A with right eigenvectors V_A and adjoint basis W.

    The principal eigenfunction j of y' = A y is phi_j(y) = <y, w_j>.
    """
    lambdas: np.ndarray
    right_eigvecs: np.ndarray
    adjoint_basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.lambdas.size

    def evaluate(self, Y: np.ndarray) -> np.ndarray:
        """Principal eigenfunction values (B, d) at linear coordinates Y (B, d)."""
        return np.asarray(Y, dtype=np.float64) @ self.adjoint_basis


def principal_eigenpairs(A: np.ndarray, max_cond: float = MAX_EIGVEC_COND) -> PrincipalEigenpairs:
    """
    Eigendecomposition of a Hurwitz matrix with real spectrum.

    Eigenvalues keep the order returned by the eigensolver. W solves
    V_A^T W = I, so <v_i, w_j> = delta_ij.

    Raises:
        UnsupportedSpectrumError: A has a complex eigenvalue
        DiagonalizabilityError: V_A is (near) singular
        StabilityViolationError: A has a non-negative eigenvalue
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    d = A.shape[0]
    lambdas, V = scipy.linalg.eig(A)
    scale = max(1.0, float(np.max(np.abs(lambdas))))
    if np.any(np.abs(lambdas.imag) > IMAG_TOL * scale):
        raise UnsupportedSpectrumError(f"A has complex eigenvalues {lambdas.tolist()}; only real spectra are supported")
    lambdas = lambdas.real.copy()
    V = V.real / np.linalg.norm(V.real, axis=0)

    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > max_cond:
        raise DiagonalizabilityError(f"Eigenvector matrix of A is ill-conditioned (cond {cond:g}); A is (near) defective")
    if np.any(lambdas >= 0.0):
        raise StabilityViolationError(f"A has non-negative eigenvalues {lambdas.tolist()}")

    W = scipy.linalg.solve(V.T, np.eye(d))
    return PrincipalEigenpairs(lambdas=lambdas, right_eigvecs=V, adjoint_basis=W)


@dataclass(frozen=True)
class MultiIndexLibrary:
    max_powers: Tuple[int, ...]
    indices: np.ndarray
    lambdas: np.ndarray

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    def position(self, m: Sequence[int]) -> int:
        """Row of multi-index m in the lexicographic ordering."""
        m = tuple(int(v) for v in m)
        if len(m) != len(self.max_powers) or any(not 0 <= v <= p for v, p in zip(m, self.max_powers)):
            raise KeyError(f"Multi-index {m} is outside max_powers {self.max_powers}")
        pos = 0
        for v, p in zip(m, self.max_powers):
            pos = pos * (p + 1) + v
        return pos

    @property
    def constant_position(self) -> int:
        return 0


def enumerate_library(lambdas_p: Sequence[float], max_powers: Sequence[int]) -> MultiIndexLibrary:
    """
    All multi-indices 0 <= m_j <= p_j in lexicographic order, D = prod(p_j + 1),
    with eigenvalues sum_j m_j lambda_j.
    """
    lambdas_p = np.asarray(lambdas_p, dtype=np.float64)
    max_powers = tuple(int(p) for p in max_powers)
    if len(max_powers) != lambdas_p.size:
        raise ValueError(f"Need one max power per principal eigenvalue, got {len(max_powers)} for {lambdas_p.size}")
    if any(p < 0 for p in max_powers):
        raise ValueError(f"max_powers must be non-negative, got {max_powers}")
    indices = np.array(list(itertools.product(*(range(p + 1) for p in max_powers))), dtype=np.int64)
    lambdas = np.array([sum(float(m_j) * l_j for m_j, l_j in zip(m, lambdas_p)) for m in indices])
    logger.debug(f"Enumerated {indices.shape[0]} multi-indices for max_powers {max_powers}")
    return MultiIndexLibrary(max_powers=max_powers, indices=indices, lambdas=lambdas)
