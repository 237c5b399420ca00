"""
Classical fixed-step Runge-Kutta 4 integration of the benchmark systems.
"""
import logging

import numpy as np

from ..exceptions import DivergenceError
from .systems import VectorFieldSpec, eval_rhs
from .types import Trajectory

logger = logging.getLogger(__name__)


def rk4_step(system: VectorFieldSpec, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = eval_rhs(system, x)
    k2 = eval_rhs(system, x + 0.5 * dt * k1)
    k3 = eval_rhs(system, x + 0.5 * dt * k2)
    k4 = eval_rhs(system, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_batch(system: VectorFieldSpec, X0: np.ndarray, dt: float, steps: int) -> np.ndarray:
    """
    Integrate several initial conditions at once.

    Args:
        system (VectorFieldSpec): the vector field
        X0 (np.ndarray): (S, d) initial states
        dt (float): step size, > 0
        steps (int): number of steps, >= 1

    Returns:
        np.ndarray: (S, steps + 1, d) states, X[:, 0] == X0
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    X0 = np.atleast_2d(np.asarray(X0, dtype=np.float64))
    out = np.empty((X0.shape[0], steps + 1, X0.shape[1]))
    out[:, 0] = X0
    x = X0.copy()
    for k in range(steps):
        x = rk4_step(system, x, dt)
        if not np.all(np.isfinite(x)):
            bad = int(np.argmax(~np.all(np.isfinite(x), axis=-1)))
            raise DivergenceError(
                f"Non-finite state in '{system.name}' at step {k + 1} from start {X0[bad].tolist()}")
        out[:, k + 1] = x
    return out


def integrate(system: VectorFieldSpec, x0: np.ndarray, dt: float, steps: int) -> Trajectory:
    """Integrate one initial condition; derivatives come from the analytic rhs."""
    states = integrate_batch(system, np.asarray(x0, dtype=np.float64)[None, :], dt, steps)[0]
    return Trajectory(dt=float(dt), states=states, derivs=eval_rhs(system, states))
