"""
Dataset generation and CSV persistence for {x, xdot} training pairs.
"""
import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from ..exceptions import MissingArtifactError
from ..utils.io import PathLike, read_csv, read_json, write_csv, write_json
from .integrator import integrate_batch
from .systems import VectorFieldSpec, eval_rhs, make_system
from .types import DomainBox, Trajectory, TrajectoryDataset

logger = logging.getLogger(__name__)


def _bounding_box(starts: np.ndarray) -> DomainBox:
    lo, hi = starts.min(axis=0), starts.max(axis=0)
    flat = hi <= lo
    return DomainBox(np.where(flat, lo - 1.0, lo), np.where(flat, hi + 1.0, hi))


def generate_dataset(system: VectorFieldSpec, starts: np.ndarray, dt: float, steps: int,
                     box: Optional[DomainBox] = None, seed: int = 0,
                     n_total: Optional[int] = None) -> TrajectoryDataset:
    """
    Integrate one trajectory per start point and store analytic derivatives.

    Args:
        system (VectorFieldSpec): the vector field
        starts (np.ndarray): (S, d) start points
        dt (float): sampling time
        steps (int): steps per trajectory; each trajectory holds steps + 1 states
        box (DomainBox, optional): domain the starts were drawn from
        seed (int): seed the starts were drawn with, kept as provenance
        n_total (int, optional): truncate to exactly this many pairs

    Returns:
        TrajectoryDataset: N = len(starts) * (steps + 1) pairs unless truncated
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=np.float64))
    states = integrate_batch(system, starts, dt, steps)
    trajectories = [Trajectory(dt=float(dt), states=s, derivs=eval_rhs(system, s)) for s in states]

    if n_total is not None:
        budget = int(n_total)
        kept = []
        for traj in trajectories:
            if budget <= 0:
                break
            take = min(len(traj), budget)
            kept.append(Trajectory(dt=traj.dt, states=traj.states[:take], derivs=traj.derivs[:take]))
            budget -= take
        trajectories = kept

    dataset = TrajectoryDataset(
        trajectories=trajectories,
        system=system,
        box=box if box is not None else _bounding_box(starts),
        seed=seed,
        metadata={'steps': int(steps)},
    )
    logger.info(f"Generated {dataset.n_pairs} pairs from {len(trajectories)} trajectories of '{system.name}'")
    return dataset


def metadata_path(csv_path: PathLike) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + '.meta.json')


def dataset_to_frame(dataset: TrajectoryDataset) -> pd.DataFrame:
    d = dataset.system.dim
    frames = []
    for i, traj in enumerate(dataset.trajectories):
        n = len(traj)
        columns = {'traj_id': np.full(n, i), 'step': np.arange(n), 't': traj.times}
        for j in range(d):
            columns[f'x_{j + 1}'] = traj.states[:, j]
        for j in range(d):
            columns[f'xdot_{j + 1}'] = traj.derivs[:, j]
        frames.append(pd.DataFrame(columns))
    if not frames:
        return pd.DataFrame(columns=['traj_id', 'step', 't'] + [f'x_{j + 1}' for j in range(d)]
                            + [f'xdot_{j + 1}' for j in range(d)])
    return pd.concat(frames, ignore_index=True)


def save_dataset(dataset: TrajectoryDataset, csv_path: PathLike) -> Tuple[Path, Path]:
    """Write the dataset CSV and its metadata sidecar."""
    csv_path = write_csv(csv_path, dataset_to_frame(dataset))
    meta = {
        'system': dataset.system.name,
        'params': dict(dataset.system.params),
        'dim': dataset.system.dim,
        'dt': dataset.dt,
        'seed': dataset.seed,
        'box': dataset.box.to_dict(),
        'n_pairs': dataset.n_pairs,
        'n_trajectories': len(dataset.trajectories),
    }
    meta.update(dataset.metadata)
    meta_path = write_json(metadata_path(csv_path), meta)
    logger.info(f"Saved dataset to {csv_path} ({dataset.n_pairs} rows)")
    return csv_path, meta_path


def load_dataset(csv_path: PathLike) -> TrajectoryDataset:
    """Read a dataset written by save_dataset; values round-trip bit-exactly."""
    csv_path = Path(csv_path)
    meta_file = metadata_path(csv_path)
    if not meta_file.exists():
        raise MissingArtifactError("Dataset metadata sidecar not found", str(meta_file))
    meta = read_json(meta_file)
    df = read_csv(csv_path)
    system = make_system(meta['system'], **meta['params'])
    d = system.dim
    x_cols = [f'x_{j + 1}' for j in range(d)]
    xdot_cols = [f'xdot_{j + 1}' for j in range(d)]
    trajectories = []
    for _, group in df.groupby('traj_id', sort=True):
        group = group.sort_values('step')
        trajectories.append(Trajectory(dt=float(meta['dt']),
                                       states=group[x_cols].to_numpy(dtype=np.float64),
                                       derivs=group[xdot_cols].to_numpy(dtype=np.float64)))
    extra = {k: v for k, v in meta.items()
             if k not in ('system', 'params', 'dim', 'dt', 'seed', 'box', 'n_pairs', 'n_trajectories')}
    return TrajectoryDataset(trajectories=trajectories, system=system,
                             box=DomainBox(meta['box']['lo'], meta['box']['hi']),
                             seed=int(meta['seed']), metadata=extra)
