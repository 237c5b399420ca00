"""
Evaluation protocol: RK4 ground truth from a grid of start points,
per-trajectory RMSE of each predictor, mean and std across trajectories.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from ..dynamics.integrator import integrate_batch
from ..dynamics.systems import VectorFieldSpec
from ..dynamics.types import DomainBox

logger = logging.getLogger(__name__)

# maps (S, d) start points to (S, K + 1, d) predicted states
BatchPredictor = Callable[[np.ndarray], np.ndarray]

TIMING_KEYS = ('wall_time', 'fit_time')


@dataclass
class MethodReport:
    method: str
    lifted_dim: Optional[int] = None
    rmse_mean: float = float('nan')
    rmse_std: float = float('nan')
    wall_time: float = 0.0
    per_trajectory: np.ndarray = field(default_factory=lambda: np.empty(0))
    diagnostics: Dict = field(default_factory=dict)
    status: str = 'ok'
    error_message: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == 'ok'

    def to_dict(self, include_timing: bool = True) -> Dict:
        document = {
            'method': self.method,
            'lifted_dim': self.lifted_dim,
            'rmse_mean': self.rmse_mean,
            'rmse_std': self.rmse_std,
            'per_trajectory_rmse': self.per_trajectory.tolist(),
            'diagnostics': {k: v for k, v in self.diagnostics.items() if include_timing or k not in TIMING_KEYS},
            'status': self.status,
            'error_message': self.error_message,
        }
        if include_timing:
            document['wall_time'] = self.wall_time
        return document


@dataclass
class EvalReport:
    preset: str
    seed: int
    dt: float
    horizon: int
    n_trajectories: int
    methods: Dict[str, MethodReport] = field(default_factory=dict)

    def add(self, report: MethodReport) -> None:
        self.methods[report.method] = report

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.methods.values())

    def to_dict(self, include_timing: bool = True) -> Dict:
        return {
            'preset': self.preset,
            'seed': self.seed,
            'dt': self.dt,
            'horizon': self.horizon,
            'n_trajectories': self.n_trajectories,
            'methods': [r.to_dict(include_timing) for r in self.methods.values()],
        }

    def rmse_table(self) -> pd.DataFrame:
        rows = [{'method': r.method, 'rmse_mean': r.rmse_mean, 'rmse_std': r.rmse_std, 'lifted_dim': r.lifted_dim}
                for r in self.methods.values()]
        return pd.DataFrame(rows, columns=['method', 'rmse_mean', 'rmse_std', 'lifted_dim'])

    def per_trajectory_frame(self) -> pd.DataFrame:
        columns = {'traj_id': np.arange(self.n_trajectories)}
        for r in self.methods.values():
            if r.per_trajectory.size == self.n_trajectories:
                columns[r.method] = r.per_trajectory
        return pd.DataFrame(columns)


def ground_truth(system: VectorFieldSpec, starts: np.ndarray, dt: float, horizon: int) -> np.ndarray:
    """RK4 reference trajectories (S, horizon + 1, d)."""
    return integrate_batch(system, starts, dt, horizon)


def trajectory_rmse(truth: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    """RMSE per trajectory, pooled over steps and state dimensions."""
    if truth.shape != predicted.shape:
        raise ValueError(f"Truth {truth.shape} and prediction {predicted.shape} differ in shape")
    return np.sqrt(np.mean((truth - predicted) ** 2, axis=(1, 2)))


def predict_parallel(predict: BatchPredictor, starts: np.ndarray, threads: int = 1) -> np.ndarray:
    """
    Run a batch predictor over chunks of the start points on a thread pool.

    Chunks are reassembled in start order, so the result does not depend on
    the number of threads.
    """
    threads = max(1, int(threads))
    if threads == 1 or starts.shape[0] < 2:
        return predict(starts)
    chunks = np.array_split(starts, min(threads, starts.shape[0]))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(predict, chunks))
    return np.concatenate(parts, axis=0)


def evaluate_method(method: str, predict: BatchPredictor, starts: np.ndarray, truth: np.ndarray,
                    lifted_dim: Optional[int] = None, diagnostics: Optional[Dict] = None,
                    threads: int = 1) -> Tuple[MethodReport, np.ndarray]:
    """
    Score one predictor against ground truth.

    Returns:
        Tuple[MethodReport, np.ndarray]: the report and the (S, K + 1, d) predictions
    """
    t0 = time.perf_counter()
    predicted = predict_parallel(predict, starts, threads)
    wall_time = time.perf_counter() - t0
    per_traj = trajectory_rmse(truth, predicted)
    report = MethodReport(method=method, lifted_dim=lifted_dim, rmse_mean=float(np.mean(per_traj)),
                          rmse_std=float(np.std(per_traj)), wall_time=wall_time, per_trajectory=per_traj,
                          diagnostics=dict(diagnostics or {}))
    if not np.all(np.isfinite(per_traj)):
        logger.warning(f"{method}: {int(np.sum(~np.isfinite(per_traj)))} trajectories have non-finite RMSE")
    logger.info(f"{method}: RMSE {report.rmse_mean:.4g} +/- {report.rmse_std:.4g} over {per_traj.size} trajectories "
                f"(D={lifted_dim}, {wall_time:.2f}s)")
    return report, predicted


def failed_method(method: str, error: Exception) -> MethodReport:
    return MethodReport(method=method, status='failed', error_message=f"{type(error).__name__}: {error}")


def trajectory_frame(predicted: np.ndarray, dt: float, prefix: str = 'xhat') -> pd.DataFrame:
    """Long-format frame traj_id, k, t, <prefix>_1..<prefix>_d."""
    S, K1, d = predicted.shape
    columns = {
        'traj_id': np.repeat(np.arange(S), K1),
        'k': np.tile(np.arange(K1), S),
        't': np.tile(np.arange(K1) * dt, S),
    }
    flat = predicted.reshape(S * K1, d)
    for j in range(d):
        columns[f'{prefix}_{j + 1}'] = flat[:, j]
    return pd.DataFrame(columns)


def diffeo_error_grid(diffeo, exact, box: DomainBox, per_dim: int = 50) -> Tuple[pd.DataFrame, float]:
    """
    Per-dimension |d(x) - d_exact(x)| on a per_dim x per_dim lattice over the box.

    Returns:
        Tuple[pd.DataFrame, float]: frame x_1, x_2, err_1, err_2 and the sup error
    """
    axes = [np.linspace(box.lo[j], box.hi[j], per_dim) for j in range(box.dim)]
    mesh = np.meshgrid(*axes, indexing='ij')
    X = np.stack([m.ravel() for m in mesh], axis=-1)
    err = np.abs(np.atleast_2d(diffeo.forward(X)) - exact.forward(X))
    columns = {f'x_{j + 1}': X[:, j] for j in range(box.dim)}
    columns.update({f'err_{j + 1}': err[:, j] for j in range(box.dim)})
    return pd.DataFrame(columns), float(np.max(err))
