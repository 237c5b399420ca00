"""
Typed experiment configuration built from preset dicts or JSON files.
"""
import copy
import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

from .dynamics.systems import VectorFieldSpec, make_system
from .dynamics.types import DomainBox
from .exceptions import ConfigurationError
from .training.trainer import TrainConfig
from .utils.io import read_json

logger = logging.getLogger(__name__)

METHODS = ('kefmd', 'edmd_monomial', 'edmd_rbf')


def _check_keys(section: str, document: Mapping[str, Any], allowed: Sequence[str]) -> None:
    if not isinstance(document, Mapping):
        raise ConfigurationError(f"Config section '{section}' must be a mapping, got {type(document).__name__}")
    unknown = sorted(set(document) - set(allowed))
    if unknown:
        raise ConfigurationError(f"Unknown key(s) {unknown} in config section '{section}'")


def _field_names(cls) -> List[str]:
    return [f.name for f in dataclasses.fields(cls)]


@dataclass
class FlowArchitecture:
    n_layers: int = 7
    hidden: List[int] = field(default_factory=lambda: [120, 120, 120])
    activation: str = 'elu'
    s_clamp: Optional[float] = 5.0

    def __post_init__(self):
        if self.activation != 'elu':
            raise ConfigurationError(f"Only the 'elu' activation is supported, got '{self.activation}'")
        if self.n_layers < 2:
            raise ConfigurationError(f"Flow needs at least 2 coupling layers, got {self.n_layers}")
        self.hidden = [int(h) for h in self.hidden]


@dataclass
class EvalConfig:
    grid_per_dim: int = 10
    horizon: int = 200
    # lattice size for the flow-vs-exact error surface; 0 disables it
    diffeo_grid: int = 50

    def __post_init__(self):
        if self.grid_per_dim < 2:
            raise ConfigurationError(f"grid_per_dim must be >= 2, got {self.grid_per_dim}")
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")


@dataclass
class BaselineConfig:
    monomial_degree: int = 5
    monomial_mode: str = 'per_coordinate'
    rbf_size: int = 36
    ridge: float = 1e-8


@dataclass
class ExperimentConfig:
    name: str = 'custom'
    system: Dict[str, Any] = field(default_factory=lambda: {'name': 'ex1', 'params': {}})
    box: Dict[str, List[float]] = field(default_factory=lambda: {'lo': [-5.0, -5.0], 'hi': [5.0, 5.0]})
    n_train_trajectories: int = 24
    dt: float = 0.065
    steps: int = 199
    n_total: Optional[int] = None
    max_powers: List[int] = field(default_factory=lambda: [5, 5])
    box_margin: float = 1.05
    kefmd_ridge: float = 0.0
    flow: FlowArchitecture = field(default_factory=FlowArchitecture)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    baselines: BaselineConfig = field(default_factory=BaselineConfig)
    methods: List[str] = field(default_factory=lambda: list(METHODS))
    seed: int = 0
    output_dir: str = 'runs'
    scale: float = 1.0

    def __post_init__(self):
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigurationError(f"Unknown method(s) {unknown}; choose from {list(METHODS)}")
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.steps < 1:
            raise ConfigurationError(f"steps must be >= 1, got {self.steps}")
        if self.n_train_trajectories < 1:
            raise ConfigurationError(f"n_train_trajectories must be >= 1, got {self.n_train_trajectories}")
        self.max_powers = [int(p) for p in self.max_powers]

    @property
    def vector_field(self) -> VectorFieldSpec:
        return make_system(self.system['name'], **self.system.get('params', {}))

    @property
    def domain(self) -> DomainBox:
        try:
            return DomainBox(self.box['lo'], self.box['hi'])
        except (KeyError, ValueError) as e:
            raise ConfigurationError(f"Invalid box {self.box}: {e}")

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def train_config(self, progress: bool = True) -> TrainConfig:
        """The trainer settings with the experiment seed."""
        return dataclasses.replace(self.train, seed=self.seed, progress=progress)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name, 'system': copy.deepcopy(self.system), 'box': copy.deepcopy(self.box),
            'n_train_trajectories': self.n_train_trajectories, 'dt': self.dt, 'steps': self.steps,
            'n_total': self.n_total, 'max_powers': list(self.max_powers), 'box_margin': self.box_margin,
            'kefmd_ridge': self.kefmd_ridge, 'flow': dataclasses.asdict(self.flow), 'train': self.train.to_dict(),
            'eval': dataclasses.asdict(self.eval), 'baselines': dataclasses.asdict(self.baselines),
            'methods': list(self.methods), 'seed': self.seed, 'output_dir': self.output_dir, 'scale': self.scale,
        }


_TRAIN_KEYS = [k for k in _field_names(TrainConfig) if k != 'progress']


def experiment_from_dict(document: Mapping[str, Any], name: str = 'custom') -> ExperimentConfig:
    """
    Build an ExperimentConfig, rejecting unknown keys at every level.

    Raises:
        ConfigurationError: unknown keys, bad values or an unknown system
    """
    _check_keys('experiment', document, _field_names(ExperimentConfig))
    doc = copy.deepcopy(dict(document))
    sections = {
        'flow': (FlowArchitecture, _field_names(FlowArchitecture)),
        'train': (TrainConfig, _TRAIN_KEYS),
        'eval': (EvalConfig, _field_names(EvalConfig)),
        'baselines': (BaselineConfig, _field_names(BaselineConfig)),
    }
    try:
        for key, (cls, allowed) in sections.items():
            if key in doc:
                _check_keys(key, doc[key], allowed)
                doc[key] = cls(**doc[key])
        if 'system' in doc:
            _check_keys('system', doc['system'], ['name', 'params'])
        if 'box' in doc:
            _check_keys('box', doc['box'], ['lo', 'hi'])
        doc.setdefault('name', name)
        config = ExperimentConfig(**doc)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid experiment config: {e}")
    # resolve system and box eagerly so a bad config fails at load time
    dim = config.vector_field.dim
    if config.domain.dim != dim:
        raise ConfigurationError(f"Box has dimension {config.domain.dim}, system '{config.system['name']}' has {dim}")
    if len(config.max_powers) != dim or any(p < 0 for p in config.max_powers):
        raise ConfigurationError(f"max_powers needs {dim} non-negative integers, got {config.max_powers}")
    return config


def load_experiment_config(name_or_path: str, presets: Optional[Mapping[str, Mapping]] = None) -> ExperimentConfig:
    """
    Load a named preset or a JSON config file.

    Args:
        name_or_path (str): preset name (e.g. 'ex1') or path to a JSON document
        presets (Mapping, optional): preset table, normally config.PRESETS
    """
    presets = presets or {}
    if name_or_path in presets:
        logger.info(f"Using preset '{name_or_path}'")
        return experiment_from_dict(presets[name_or_path], name=name_or_path)
    path = Path(name_or_path)
    if path.suffix.lower() != '.json' and not path.exists():
        raise ConfigurationError(f"'{name_or_path}' is neither a preset ({sorted(presets)}) nor a JSON file")
    logger.info(f"Loading experiment config from {path}")
    return experiment_from_dict(read_json(path), name=path.stem)


def apply_overrides(config: ExperimentConfig, seed: Optional[int] = None, output_dir: Optional[str] = None,
                    methods: Optional[Sequence[str]] = None, scale: Optional[float] = None) -> ExperimentConfig:
    """
    Apply command-line overrides. A scale s multiplies trajectory length
    (steps + 1) and epochs by s, keeping the number of start points.
    """
    config = copy.deepcopy(config)
    if seed is not None:
        config.seed = int(seed)
    if output_dir is not None:
        config.output_dir = str(output_dir)
    if methods is not None:
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise ConfigurationError(f"Unknown method(s) {unknown}; choose from {list(METHODS)}")
        config.methods = list(methods)
    if scale is not None and scale != 1.0:
        if scale <= 0:
            raise ConfigurationError(f"scale must be positive, got {scale}")
        length = max(2, int(round((config.steps + 1) * scale)))
        config.steps = length - 1
        if config.n_total is not None:
            config.n_total = config.n_train_trajectories * length
        if config.train.epochs > 0:
            config.train = dataclasses.replace(config.train, epochs=max(1, int(round(config.train.epochs * scale))))
        config.scale = float(scale)
        logger.info(f"Scaled experiment by {scale}: steps={config.steps}, epochs={config.train.epochs}")
    return config
