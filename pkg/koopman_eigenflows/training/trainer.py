"""
Mini-batch Adam training of a coupling flow on the conjugacy loss.
"""
import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..dynamics.systems import check_hurwitz
from ..dynamics.types import TrajectoryDataset
from ..exceptions import (ConfigurationError, DegenerateDataError, NumericalFailureError,
                          StabilityViolationError, TrainingDivergedError)
from ..flows.coupling import FlowModel
from ..nets.optim import AdamState, adam_step
from ..nets.params import ParamVector, assign_params, flatten_params, loss_gradient
from ..utils.io import PathLike, write_csv
from .loss import LossBreakdown, ResidualForm, conjugacy_loss, conjugacy_seeds, origin_loss


@dataclass
class TrainConfig:
    batch_size: int = 64
    epochs: int = 200
    lr: float = 1e-3
    seed: int = 0
    residual_form: ResidualForm = ResidualForm.PREMULTIPLIED
    loss_weights: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    early_stop: bool = False
    plateau_patience: int = 20
    plateau_tol: float = 1e-5
    checkpoint_every: int = 0
    progress: bool = True

    def __post_init__(self):
        self.residual_form = ResidualForm(self.residual_form)
        self.loss_weights = tuple(float(w) for w in self.loss_weights)
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if len(self.loss_weights) != 3 or any(w < 0 for w in self.loss_weights):
            raise ConfigurationError(f"loss_weights must be three non-negative reals, got {self.loss_weights}")
        if self.lr <= 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")

    def to_dict(self) -> dict:
        return {
            'batch_size': self.batch_size, 'epochs': self.epochs, 'lr': self.lr, 'seed': self.seed,
            'residual_form': self.residual_form.value, 'loss_weights': list(self.loss_weights),
            'beta1': self.beta1, 'beta2': self.beta2, 'eps': self.eps,
            'early_stop': self.early_stop, 'plateau_patience': self.plateau_patience,
            'plateau_tol': self.plateau_tol, 'checkpoint_every': self.checkpoint_every,
        }


@dataclass
class TrainResult:
    flow: FlowModel
    history: List[LossBreakdown] = field(default_factory=list)
    stopped_early: bool = False

    @property
    def final_loss(self) -> Optional[LossBreakdown]:
        return self.history[-1] if self.history else None


class DiffeoTrainer:
    """Fits a FlowModel so that J(x) xdot = A d(x) on the data with d(0) = 0 and J(0) = I."""

    def __init__(self, A: np.ndarray, config: Optional[TrainConfig] = None):
        self.A = np.asarray(A, dtype=np.float64)
        self.config = config or TrainConfig()
        self.logger = logging.getLogger(__name__)
        stable, abscissa = check_hurwitz(self.A)
        if not stable:
            raise StabilityViolationError(f"Training target A is not Hurwitz (spectral abscissa {abscissa:g})")

    def batch_gradient(self, flow: FlowModel, X: np.ndarray, Xdot: np.ndarray) -> Tuple[LossBreakdown, ParamVector]:
        """
        Loss breakdown and parameter gradient for one mini-batch.

        The origin penalties are evaluated once per batch, not per sample.
        """
        form = self.config.residual_form
        w_conj, w_jac0, w_orig0 = self.config.loss_weights
        d = flow.dim

        conj, grad_conj = loss_gradient(flow, conjugacy_loss(self.A, Xdot, form, 1.0),
                                        X, conjugacy_seeds(Xdot, form))
        origin = np.zeros((1, d))
        Y0, J0, _ = flow.forward_tangent(origin, np.eye(d)[None].copy())
        jac0 = float(np.sum((J0[0] - np.eye(d)) ** 2))
        orig0 = float(np.sum(Y0[0] ** 2))
        _, grad_origin = loss_gradient(flow, origin_loss(w_jac0, w_orig0), origin, np.eye(d)[None].copy())

        total = w_conj * conj + w_jac0 * jac0 + w_orig0 * orig0
        grad = grad_origin.like(w_conj * grad_conj.values + grad_origin.values)
        return LossBreakdown(conj, jac0, orig0, total), grad

    def fit(self, flow: FlowModel, dataset: TrajectoryDataset,
            checkpoint_dir: Optional[PathLike] = None) -> TrainResult:
        """
        Train a copy of flow; the input flow is left untouched.

        Args:
            flow (FlowModel): initial flow
            dataset (TrajectoryDataset): {x, xdot} pairs
            checkpoint_dir (PathLike, optional): where to write periodic flow checkpoints

        Returns:
            TrainResult: trained flow and per-epoch mean losses

        Raises:
            DegenerateDataError: the dataset is empty
            TrainingDivergedError: a loss or gradient became non-finite
        """
        cfg = self.config
        X_all, Xdot_all = dataset.states, dataset.derivs
        n = X_all.shape[0]
        if n == 0:
            raise DegenerateDataError("Cannot train on an empty dataset")
        if X_all.shape[1] != flow.dim:
            raise ConfigurationError(f"Dataset dimension {X_all.shape[1]} does not match flow dimension {flow.dim}")

        flow = copy.deepcopy(flow)
        result = TrainResult(flow=flow)
        if cfg.epochs == 0:
            self.logger.info("epochs=0, returning the initial flow")
            return result

        rng = np.random.default_rng(cfg.seed)
        params = flatten_params(flow)
        state = AdamState.zeros(len(params))
        n_batches = int(np.ceil(n / cfg.batch_size))
        best = np.inf
        best_epoch = 0
        self.logger.info(f"Training {flow.n_params} parameters on {n} pairs: {cfg.epochs} epochs x {n_batches} batches "
                         f"({cfg.residual_form.value} residual)")

        epochs = tqdm(range(cfg.epochs), desc="train", unit="epoch", disable=not cfg.progress)
        for epoch in epochs:
            perm = rng.permutation(n)
            sums = np.zeros(4)
            for b in range(n_batches):
                idx = perm[b * cfg.batch_size:(b + 1) * cfg.batch_size]
                try:
                    breakdown, grad = self.batch_gradient(flow, X_all[idx], Xdot_all[idx])
                except NumericalFailureError as e:
                    raise TrainingDivergedError(f"Numerical failure: {e}", epoch, b) from e
                if not np.isfinite(breakdown.total):
                    raise TrainingDivergedError("Non-finite loss", epoch, b)
                values, state = adam_step(params.values, grad.values, state,
                                          lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
                params = params.like(values)
                assign_params(flow, params)
                sums += [breakdown.conjugacy, breakdown.jacobian_at_origin, breakdown.origin_fixed, breakdown.total]

            mean = LossBreakdown(*(float(v) for v in sums / n_batches))
            result.history.append(mean)
            epochs.set_postfix(loss=f"{mean.total:.3e}")
            self.logger.debug(f"epoch {epoch}: conj={mean.conjugacy:.6e} jac0={mean.jacobian_at_origin:.3e} "
                              f"orig0={mean.origin_fixed:.3e} total={mean.total:.6e}")

            if checkpoint_dir is not None and cfg.checkpoint_every > 0 and (epoch + 1) % cfg.checkpoint_every == 0:
                flow.save(Path(checkpoint_dir) / f"flow_epoch_{epoch + 1:04d}.json")

            if mean.total < best * (1.0 - cfg.plateau_tol):
                best, best_epoch = mean.total, epoch
            elif cfg.early_stop and epoch - best_epoch >= cfg.plateau_patience:
                self.logger.info(f"Loss plateau at epoch {epoch} (best {best:.6e} at epoch {best_epoch}), stopping")
                result.stopped_early = True
                break

        final = result.history[-1]
        self.logger.info(f"Training finished after {len(result.history)} epochs: "
                         f"conjugacy={final.conjugacy:.6e} total={final.total:.6e}")
        return result


def train(flow: FlowModel, dataset: TrajectoryDataset, A: np.ndarray, config: Optional[TrainConfig] = None,
          checkpoint_dir: Optional[PathLike] = None) -> Tuple[FlowModel, List[LossBreakdown]]:
    result = DiffeoTrainer(A, config).fit(flow, dataset, checkpoint_dir=checkpoint_dir)
    return result.flow, result.history


def history_frame(history: List[LossBreakdown]) -> pd.DataFrame:
    columns = ['epoch', 'conjugacy', 'jac0', 'orig0', 'total']
    rows = [dict(epoch=i, **h.to_dict()) for i, h in enumerate(history)]
    return pd.DataFrame(rows, columns=columns)


def save_history(history: List[LossBreakdown], path: PathLike) -> Path:
    return write_csv(path, history_frame(history))
