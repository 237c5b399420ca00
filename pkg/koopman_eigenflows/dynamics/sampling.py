"""
Start points for training and evaluation trajectories.
"""
from typing import List

import numpy as np

from .types import DomainBox


def boundary_starts(box: DomainBox, n_trajectories: int, seed: int) -> np.ndarray:
    """
    Sample points uniformly over the boundary of a box.

    A face (coordinate j pinned to lo_j or hi_j) is drawn with probability
    proportional to its (d-1)-dimensional measure, then the free coordinates
    are drawn uniformly on that face.

    Returns:
        np.ndarray: (n_trajectories, d) start points
    """
    if n_trajectories < 1:
        raise ValueError(f"n_trajectories must be >= 1, got {n_trajectories}")
    rng = np.random.default_rng(seed)
    d = box.dim
    widths = box.hi - box.lo
    face_measure = np.array([np.prod(np.delete(widths, j)) for j in range(d)])
    probs = np.repeat(face_measure, 2) / (2.0 * face_measure.sum())
    faces = rng.choice(2 * d, size=n_trajectories, p=probs)
    points = box.lo + rng.random((n_trajectories, d)) * widths
    for i, face in enumerate(faces):
        j, upper = divmod(int(face), 2)
        points[i, j] = box.hi[j] if upper else box.lo[j]
    return points


def grid_starts(box: DomainBox, per_dim: int) -> np.ndarray:
    """Uniform lattice with per_dim points per axis, bounds included."""
    if per_dim < 2:
        raise ValueError(f"per_dim must be >= 2, got {per_dim}")
    axes: List[np.ndarray] = [np.linspace(box.lo[j], box.hi[j], per_dim) for j in range(box.dim)]
    mesh = np.meshgrid(*axes, indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=-1)
