from .loss import LossBreakdown, ResidualForm, conjugacy_residual, loss_terms
from .trainer import DiffeoTrainer, TrainConfig, TrainResult, history_frame, save_history, train
