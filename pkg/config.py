import os
from dotenv import load_dotenv

load_dotenv()

# Experiment presets
# Format: {'preset_name': {<ExperimentConfig field>: value}}; see koopman_eigenflows/settings.py
PRESETS = {
    'ex1': {
        'system': {'name': 'ex1', 'params': {'mu': -0.7, 'lam': -0.3}},
        'box': {'lo': [-5.0, -5.0], 'hi': [5.0, 5.0]},
        'n_train_trajectories': 24,
        'dt': 0.065,
        'steps': 199,
        'n_total': 4800,
        'max_powers': [5, 5],
        'flow': {'n_layers': 7, 'hidden': [120, 120, 120], 'activation': 'elu', 's_clamp': 5.0},
        'train': {'batch_size': 64, 'epochs': 200, 'lr': 1e-3, 'residual_form': 'premultiplied',
                  'loss_weights': [1.0, 1.0, 1.0]},
        'eval': {'grid_per_dim': 10, 'horizon': 200, 'diffeo_grid': 50},
        'baselines': {'monomial_degree': 5, 'monomial_mode': 'per_coordinate', 'rbf_size': 36, 'ridge': 1e-8},
        'methods': ['kefmd', 'edmd_monomial', 'edmd_rbf'],
        'seed': 0,
    },
    'ex3': {
        'system': {'name': 'ex3', 'params': {'a': -1.3, 'b': -2.0, 'c': 1.5}},
        'box': {'lo': [-5.5, -5.5], 'hi': [5.5, 5.5]},
        'n_train_trajectories': 56,
        'dt': 0.015,
        'steps': 199,
        'n_total': 11200,
        'max_powers': [13, 13],
        'flow': {'n_layers': 7, 'hidden': [120, 120, 120], 'activation': 'elu', 's_clamp': 5.0},
        'train': {'batch_size': 64, 'epochs': 400, 'lr': 1e-3, 'residual_form': 'premultiplied',
                  'loss_weights': [1.0, 1.0, 1.0]},
        'eval': {'grid_per_dim': 10, 'horizon': 200, 'diffeo_grid': 50},
        'baselines': {'monomial_degree': 8, 'monomial_mode': 'per_coordinate', 'rbf_size': 196, 'ridge': 1e-8},
        'methods': ['kefmd', 'edmd_monomial', 'edmd_rbf'],
        'seed': 0,
    },
    # Linear system: the identity flow is already optimal
    'linear': {
        'system': {'name': 'linear', 'params': {'a11': -1.0, 'a12': 0.0, 'a21': 0.0, 'a22': -1.0}},
        'box': {'lo': [-1.0, -1.0], 'hi': [1.0, 1.0]},
        'n_train_trajectories': 8,
        'dt': 0.1,
        'steps': 49,
        'max_powers': [1, 1],
        'flow': {'n_layers': 2, 'hidden': [16, 16], 'activation': 'elu', 's_clamp': 5.0},
        'train': {'batch_size': 64, 'epochs': 5, 'lr': 1e-3, 'residual_form': 'premultiplied',
                  'loss_weights': [1.0, 1.0, 1.0]},
        'eval': {'grid_per_dim': 5, 'horizon': 50, 'diffeo_grid': 0},
        'baselines': {'monomial_degree': 1, 'monomial_mode': 'total', 'rbf_size': 10, 'ridge': 1e-8},
        'methods': ['kefmd', 'edmd_monomial'],
        'seed': 0,
    },
}

# Runtime Settings
KOOPFLOW_THREADS = int(os.getenv('KOOPFLOW_THREADS', 1))
KOOPFLOW_LOG_LEVEL = os.getenv('KOOPFLOW_LOG_LEVEL', 'INFO')
KOOPFLOW_OUTPUT_DIR = os.getenv('KOOPFLOW_OUTPUT_DIR', 'runs')

# Database (run ledger)
DATABASE_URL = os.getenv('DATABASE_URL', 'sqlite:///koopflow_runs.db')
