"""
Conjugacy loss between a nonlinear system and its Jacobian linearization.

For a diffeomorphism d with d o F^t = e^{At} o d the data must satisfy
J_d(x) xdot = A d(x), J_d(0) = I and d(0) = 0. The residual is available in
the inverse-Jacobian form xdot - J_d(x)^{-1} A d(x) or in the premultiplied
form J_d(x) xdot - A d(x); both vanish on the same set.
"""
import enum
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..exceptions import NumericalFailureError
from ..nets.params import LossFunction

# condition number above which J is treated as singular
SINGULAR_COND = 1e14


class ResidualForm(enum.Enum):
    INVERSE_JACOBIAN = "inverse_jacobian"
    PREMULTIPLIED = "premultiplied"


@dataclass(frozen=True)
class LossBreakdown:
    conjugacy: float
    jacobian_at_origin: float
    origin_fixed: float
    total: float

    def to_dict(self) -> dict:
        return {'conjugacy': self.conjugacy, 'jac0': self.jacobian_at_origin,
                'orig0': self.origin_fixed, 'total': self.total}


def _check_invertible(J: np.ndarray) -> None:
    cond = np.linalg.cond(J)
    bad = ~np.isfinite(cond) | (cond > SINGULAR_COND)
    if np.any(bad):
        index = int(np.argmax(bad))
        raise NumericalFailureError(f"Flow Jacobian is singular to machine precision at batch index {index}",
                                    batch_index=index)


def conjugacy_residual(y: np.ndarray, J: np.ndarray, A: np.ndarray, xdot: np.ndarray,
                       form: ResidualForm) -> np.ndarray:
    """Per-sample residual (B, d) given d(x) (B, d) and J_d(x) (B, d, d)."""
    if form == ResidualForm.PREMULTIPLIED:
        return np.einsum('bij,bj->bi', J, xdot) - y @ A.T
    _check_invertible(J)
    return xdot - np.linalg.solve(J, (y @ A.T)[..., None])[..., 0]


def loss_terms(diffeo, A: np.ndarray, x: np.ndarray, xdot: np.ndarray,
               form: ResidualForm = ResidualForm.PREMULTIPLIED,
               weights: Tuple[float, float, float] = (1.0, 1.0, 1.0)) -> LossBreakdown:
    """
    Evaluate the three loss terms for any map exposing forward() and jacobian().

    The conjugacy term is averaged over the rows of x; the origin terms are
    evaluated once.
    """
    form = ResidualForm(form)
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    Xdot = np.atleast_2d(np.asarray(xdot, dtype=np.float64))
    d = X.shape[1]
    r = conjugacy_residual(np.atleast_2d(diffeo.forward(X)), np.asarray(diffeo.jacobian(X)).reshape(-1, d, d),
                           A, Xdot, form)
    conj = float(np.mean(np.sum(r ** 2, axis=1)))
    origin = np.zeros((1, d))
    J0 = np.asarray(diffeo.jacobian(origin)).reshape(d, d)
    y0 = np.asarray(diffeo.forward(origin)).reshape(d)
    jac0 = float(np.sum((J0 - np.eye(d)) ** 2))
    orig0 = float(np.sum(y0 ** 2))
    w_conj, w_jac0, w_orig0 = weights
    return LossBreakdown(conj, jac0, orig0, w_conj * conj + w_jac0 * jac0 + w_orig0 * orig0)


def conjugacy_seeds(xdot: np.ndarray, form: ResidualForm) -> np.ndarray:
    """Tangent directions the flow must carry: xdot itself, or the full identity."""
    B, d = xdot.shape
    if form == ResidualForm.PREMULTIPLIED:
        return xdot[:, :, None].copy()
    return np.broadcast_to(np.eye(d), (B, d, d)).copy()


def conjugacy_loss(A: np.ndarray, xdot: np.ndarray, form: ResidualForm, weight: float = 1.0) -> LossFunction:
    """
    Batch-mean conjugacy loss as a LossFunction over (d(x), tangents).

    Tangents are J xdot (premultiplied form) or the full J (inverse form).
    """
    B = xdot.shape[0]

    def loss(Y: np.ndarray, T: np.ndarray):
        if form == ResidualForm.PREMULTIPLIED:
            r = T[:, :, 0] - Y @ A.T
            Ybar = -2.0 * weight * (r @ A) / B
            Tbar = np.zeros_like(T)
            Tbar[:, :, 0] = 2.0 * weight * r / B
        else:
            _check_invertible(T)
            u = np.linalg.solve(T, (Y @ A.T)[..., None])[..., 0]
            r = xdot - u
            q = np.linalg.solve(np.transpose(T, (0, 2, 1)), (-2.0 * weight * r / B)[..., None])[..., 0]
            Tbar = -q[:, :, None] * u[:, None, :]
            Ybar = q @ A
        return weight * np.sum(r ** 2, axis=1) / B, Ybar, Tbar

    return loss


def origin_loss(w_jac0: float, w_orig0: float) -> LossFunction:
    """Penalties ||J_d(0) - I||_F^2 and ||d(0)||^2 on a single origin sample with identity seeds."""

    def loss(Y: np.ndarray, T: np.ndarray):
        eye = np.eye(Y.shape[1])
        per = w_jac0 * np.sum((T - eye) ** 2, axis=(1, 2)) + w_orig0 * np.sum(Y ** 2, axis=1)
        return per, 2.0 * w_orig0 * Y, 2.0 * w_jac0 * (T - eye)

    return loss
