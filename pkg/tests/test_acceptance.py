"""
Full-scale experiments. These take minutes to an hour on a desktop CPU and
only run with --runslow.
"""
import copy

import pytest

import config
from koopman_eigenflows.analysis.oracles import eigenfunction_evolution_error
from koopman_eigenflows.analysis.pipeline import ExperimentPipeline
from koopman_eigenflows.dynamics import grid_starts
from koopman_eigenflows.eigen import EigenfunctionLibrary
from koopman_eigenflows.settings import apply_overrides, experiment_from_dict, load_experiment_config
from koopman_eigenflows.utils.io import read_csv


def preset_pipeline(name, tmp_path, **overrides):
    experiment = load_experiment_config(name, presets=config.PRESETS)
    experiment = apply_overrides(experiment, output_dir=str(tmp_path / name), **overrides)
    return ExperimentPipeline(experiment, progress=False)


@pytest.mark.slow
class TestEx1AtFullScale:

    @pytest.fixture(scope='class')
    def outcome(self, tmp_path_factory):
        pipeline = preset_pipeline('ex1', tmp_path_factory.mktemp('ex1'))
        report = pipeline.compare()
        return pipeline, report

    def test_all_methods_finish(self, outcome):
        _, report = outcome
        assert report.all_ok
        assert report.n_trajectories == 100
        assert report.methods['kefmd'].lifted_dim == 36

    def test_kefmd_accuracy(self, outcome):
        _, report = outcome
        assert report.methods['kefmd'].rmse_mean <= 0.05

    def test_monomial_edmd_is_near_exact(self, outcome):
        _, report = outcome
        assert report.methods['edmd_monomial'].rmse_mean <= 0.01

    def test_conjugacy_loss_converges(self, outcome):
        pipeline, _ = outcome
        log = read_csv(pipeline.paths.loss_log)
        assert log['conjugacy'].iloc[-1] < 1e-3
        assert log['conjugacy'].iloc[-1] < log['conjugacy'].iloc[0]

    def test_learned_flow_improves_on_the_identity(self, outcome):
        _, report = outcome
        # the identity misses x_2 by |lam / (lam - 2 mu)| x_1^2, largest at the box corners
        identity_error = 25.0 * 0.3 / 1.1
        assert report.methods['kefmd'].diagnostics['diffeo_sup_error'] < 0.5 * identity_error

    def test_trained_eigenfunctions_evolve_exponentially(self, outcome):
        pipeline, _ = outcome
        library = EigenfunctionLibrary.load(pipeline.paths.library)
        starts = grid_starts(pipeline.box, 5)
        assert eigenfunction_evolution_error(library, pipeline.system, starts, 0.065, 200) <= 5e-2


@pytest.mark.slow
class TestEx3Ranking:

    def test_kefmd_beats_both_baselines(self, tmp_path):
        report = preset_pipeline('ex3', tmp_path, scale=0.25).compare()
        assert report.all_ok
        rmse = {name: r.rmse_mean for name, r in report.methods.items()}
        assert report.methods['kefmd'].lifted_dim == 196
        assert rmse['kefmd'] < min(rmse['edmd_monomial'], rmse['edmd_rbf'])


@pytest.mark.slow
def test_preset_runs_are_bit_identical(tmp_path):
    reports = [preset_pipeline('ex1', tmp_path / run, scale=0.1).compare().to_dict(include_timing=False)
               for run in ('first', 'second')]
    assert reports[0] == reports[1]


@pytest.mark.slow
def test_more_capacity_does_not_fit_the_exact_conjugacy_worse(tmp_path):
    errors = []
    for hidden, epochs in (([16], 50), ([32, 32], 100), ([64, 64, 64], 200)):
        document = copy.deepcopy(config.PRESETS['ex1'])
        document['flow']['hidden'] = hidden
        document['train']['epochs'] = epochs
        document['methods'] = ['kefmd']
        document['output_dir'] = str(tmp_path / f"width{hidden[0]}")
        report = ExperimentPipeline(experiment_from_dict(document, name='ex1'), progress=False).compare()
        errors.append(report.methods['kefmd'].diagnostics['diffeo_sup_error'])
    assert errors[-1] <= errors[0]
    # small slack for minibatch noise between neighbouring sizes
    assert all(later <= 1.1 * earlier for earlier, later in zip(errors, errors[1:])), errors
