from typing import Optional


class KoopmanFlowError(Exception):
    """Base class for every error raised by the library."""


class ConfigurationError(KoopmanFlowError):
    """Unknown system, bad parameter set or malformed experiment config."""


class StabilityViolationError(KoopmanFlowError):
    """The Jacobian linearization at the origin is not Hurwitz."""


class DivergenceError(KoopmanFlowError):
    """Integration produced a non-finite state."""


class ResonanceError(KoopmanFlowError):
    """The closed-form ex1 diffeomorphism is undefined for lam == 2 * mu."""


class NumericalFailureError(KoopmanFlowError):
    """Overflow, singular Jacobian or non-finite gradient."""

    def __init__(self, message: str, batch_index: Optional[int] = None, layer_index: Optional[int] = None):
        super().__init__(message)
        self.batch_index = batch_index
        self.layer_index = layer_index


class TrainingDivergedError(KoopmanFlowError):
    def __init__(self, message: str, epoch: int, batch: int):
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")
        self.epoch = epoch
        self.batch = batch


class DiagonalizabilityError(KoopmanFlowError):
    """A is defective or too close to defective."""


class UnsupportedSpectrumError(KoopmanFlowError):
    """A has complex eigenvalues."""


class DegenerateDataError(KoopmanFlowError):
    """Data cannot support the requested fit (empty set, zero radius, ...)."""


class MissingArtifactError(KoopmanFlowError):
    def __init__(self, message: str, path: str):
        super().__init__(f"{message}: {path}")
        self.path = path
