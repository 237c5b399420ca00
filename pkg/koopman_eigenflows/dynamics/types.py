from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .systems import VectorFieldSpec


@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned box [lo, hi] in state space."""
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != hi.shape:
            raise ValueError(f"Box bounds have different shapes {lo.shape} and {hi.shape}")
        if not np.all(lo < hi):
            raise ValueError(f"Box requires lo < hi component-wise, got lo={lo}, hi={hi}")
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @classmethod
    def symmetric(cls, half_width: float, dim: int = 2) -> 'DomainBox':
        return cls(-half_width * np.ones(dim), half_width * np.ones(dim))

    @property
    def dim(self) -> int:
        return self.lo.size

    def contains(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X >= self.lo - tol) & (X <= self.hi + tol), axis=-1)

    def to_dict(self) -> Dict:
        return {'lo': self.lo.tolist(), 'hi': self.hi.tolist()}


@dataclass
class Trajectory:
    """Sampled states with the analytic derivative at each stored state."""
    dt: float
    states: np.ndarray
    derivs: np.ndarray

    def __post_init__(self):
        if self.states.shape != self.derivs.shape:
            raise ValueError(f"states {self.states.shape} and derivs {self.derivs.shape} differ in shape")

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self))


@dataclass
class TrajectoryDataset:
    trajectories: List[Trajectory]
    system: VectorFieldSpec
    box: DomainBox
    seed: int = 0
    metadata: Dict = field(default_factory=dict)

    @property
    def n_pairs(self) -> int:
        return int(sum(len(t) for t in self.trajectories))

    @property
    def dt(self) -> float:
        return self.trajectories[0].dt if self.trajectories else float('nan')

    @property
    def states(self) -> np.ndarray:
        if not self.trajectories:
            return np.empty((0, self.system.dim))
        return np.concatenate([t.states for t in self.trajectories], axis=0)

    @property
    def derivs(self) -> np.ndarray:
        if not self.trajectories:
            return np.empty((0, self.system.dim))
        return np.concatenate([t.derivs for t in self.trajectories], axis=0)
