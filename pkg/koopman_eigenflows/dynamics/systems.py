"""
Benchmark vector fields with an exponentially stable origin and their
Jacobian linearizations.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Tuple

import numpy as np

from ..exceptions import ConfigurationError, StabilityViolationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VectorFieldSpec:
    """A registered system name, its scalar parameters and state dimension."""
    name: str
    params: Dict[str, float] = field(default_factory=dict)
    dim: int = 2

    def to_dict(self) -> Dict:
        return {'name': self.name, 'params': dict(self.params), 'dim': self.dim}


@dataclass(frozen=True)
class _SystemDefinition:
    dim: int
    defaults: Dict[str, float]
    rhs: Callable[[np.ndarray, Mapping[str, float]], np.ndarray]
    jacobian: Callable[[Mapping[str, float]], np.ndarray]


def _ex1_rhs(x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack([p['mu'] * x1, p['lam'] * (x2 - x1 ** 2)], axis=-1)


def _ex1_jacobian(p: Mapping[str, float]) -> np.ndarray:
    return np.array([[p['mu'], 0.0], [0.0, p['lam']]])


def _ex3_rhs(x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack([(p['a'] + p['c'] * np.sin(x2) ** 2) * x1, p['b'] * x2], axis=-1)


def _ex3_jacobian(p: Mapping[str, float]) -> np.ndarray:
    # sin^2 vanishes to second order at the origin
    return np.array([[p['a'], 0.0], [0.0, p['b']]])


def _linear_matrix(p: Mapping[str, float]) -> np.ndarray:
    return np.array([[p['a11'], p['a12']], [p['a21'], p['a22']]])


def _linear_rhs(x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    return x @ _linear_matrix(p).T


SYSTEMS: Dict[str, _SystemDefinition] = {
    'ex1': _SystemDefinition(2, {'mu': -0.7, 'lam': -0.3}, _ex1_rhs, _ex1_jacobian),
    'ex3': _SystemDefinition(2, {'a': -1.3, 'b': -2.0, 'c': 1.5}, _ex3_rhs, _ex3_jacobian),
    'linear': _SystemDefinition(2, {'a11': -1.0, 'a12': 0.0, 'a21': 0.0, 'a22': -1.0},
                                _linear_rhs, _linear_matrix),
}


def _definition(system: VectorFieldSpec) -> _SystemDefinition:
    try:
        definition = SYSTEMS[system.name]
    except KeyError:
        raise ConfigurationError(f"Unknown system '{system.name}'. Known systems: {sorted(SYSTEMS)}")
    missing = set(definition.defaults) - set(system.params)
    unknown = set(system.params) - set(definition.defaults)
    if missing or unknown:
        raise ConfigurationError(
            f"Bad parameters for system '{system.name}': missing {sorted(missing)}, unknown {sorted(unknown)}")
    if system.dim != definition.dim:
        raise ConfigurationError(f"System '{system.name}' has dimension {definition.dim}, got {system.dim}")
    return definition


def make_system(name: str, **params: float) -> VectorFieldSpec:
    """Build a spec for a registered system, filling unspecified parameters with defaults."""
    if name not in SYSTEMS:
        raise ConfigurationError(f"Unknown system '{name}'. Known systems: {sorted(SYSTEMS)}")
    definition = SYSTEMS[name]
    merged = dict(definition.defaults)
    merged.update({k: float(v) for k, v in params.items()})
    spec = VectorFieldSpec(name=name, params=merged, dim=definition.dim)
    _definition(spec)
    return spec


def eval_rhs(system: VectorFieldSpec, x: np.ndarray) -> np.ndarray:
    """
    Evaluate f(x) for a single state (d,) or a batch (..., d).

    Args:
        system (VectorFieldSpec): the vector field
        x (np.ndarray): state(s)

    Returns:
        np.ndarray: f(x), same shape as x
    """
    definition = _definition(system)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != definition.dim:
        raise ConfigurationError(f"State has dimension {x.shape[-1]}, system '{system.name}' expects {definition.dim}")
    return definition.rhs(x, system.params)


def jacobian_linearization(system: VectorFieldSpec) -> np.ndarray:
    """
    Return A = Df(0), rejecting systems whose origin is not exponentially stable.

    Raises:
        StabilityViolationError: if A has an eigenvalue with non-negative real part
    """
    A = np.asarray(_definition(system).jacobian(system.params), dtype=np.float64)
    abscissa = float(np.max(np.linalg.eigvals(A).real))
    if abscissa >= 0.0:
        raise StabilityViolationError(
            f"Jacobian linearization of '{system.name}' is not Hurwitz (spectral abscissa {abscissa:g})")
    return A


def check_hurwitz(A: np.ndarray) -> Tuple[bool, float]:
    abscissa = float(np.max(np.linalg.eigvals(np.asarray(A)).real))
    return abscissa < 0.0, abscissa
