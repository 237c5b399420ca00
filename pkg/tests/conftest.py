import numpy as np
import pytest

from koopman_eigenflows.dynamics import DomainBox, boundary_starts, generate_dataset, make_system
from koopman_eigenflows.dynamics.exact import ExactEx1Diffeomorphism


@pytest.fixture
def ex1():
    return make_system('ex1', mu=-0.7, lam=-0.3)


@pytest.fixture
def ex3():
    return make_system('ex3', a=-1.3, b=-2.0, c=1.5)


@pytest.fixture
def linear():
    return make_system('linear')


@pytest.fixture
def ex1_box():
    return DomainBox.symmetric(5.0, 2)


@pytest.fixture
def exact_ex1():
    return ExactEx1Diffeomorphism(-0.7, -0.3)


@pytest.fixture
def ex1_dataset(ex1, ex1_box):
    """Eight boundary trajectories of 50 steps at the ex1 sampling time."""
    starts = boundary_starts(ex1_box, 8, seed=0)
    return generate_dataset(ex1, starts, 0.065, 49, box=ex1_box, seed=0)


@pytest.fixture
def linear_dataset(linear):
    box = DomainBox.symmetric(1.0, 2)
    starts = boundary_starts(box, 6, seed=1)
    return generate_dataset(linear, starts, 0.1, 29, box=box, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config_doc(tmp_path):
    """A linear-system experiment small enough to run every step in a test."""
    return {
        'system': {'name': 'linear', 'params': {}},
        'box': {'lo': [-1.0, -1.0], 'hi': [1.0, 1.0]},
        'n_train_trajectories': 6,
        'dt': 0.1,
        'steps': 19,
        'max_powers': [1, 1],
        'flow': {'n_layers': 2, 'hidden': [8]},
        'train': {'batch_size': 32, 'epochs': 2},
        'eval': {'grid_per_dim': 3, 'horizon': 20, 'diffeo_grid': 0},
        'baselines': {'monomial_degree': 1, 'monomial_mode': 'total', 'rbf_size': 8},
        'methods': ['kefmd', 'edmd_monomial', 'edmd_rbf'],
        'seed': 3,
        'output_dir': str(tmp_path / 'run'),
    }
