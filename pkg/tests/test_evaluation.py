import json

import numpy as np
import pytest

from koopman_eigenflows.analysis.evaluation import (EvalReport, MethodReport, diffeo_error_grid, evaluate_method,
                                                    failed_method, ground_truth, predict_parallel,
                                                    trajectory_frame, trajectory_rmse)
from koopman_eigenflows.dynamics import DomainBox, grid_starts
from koopman_eigenflows.exceptions import DegenerateDataError
from koopman_eigenflows.flows import IdentityMap
from koopman_eigenflows.reporting import ReportWriter, format_summary
from koopman_eigenflows.utils.io import read_csv, read_json


def shifted(offset):
    def predict(starts):
        return np.repeat(starts[:, None, :], 6, axis=1) + offset
    return predict


@pytest.fixture
def starts():
    return grid_starts(DomainBox.symmetric(1.0, 2), 3)


@pytest.fixture
def report(starts):
    truth = np.repeat(starts[:, None, :], 6, axis=1)
    report = EvalReport(preset='linear', seed=0, dt=0.1, horizon=5, n_trajectories=starts.shape[0])
    good, _ = evaluate_method('kefmd', shifted(0.0), starts, truth, lifted_dim=4, diagnostics={'rank': 4})
    biased, _ = evaluate_method('edmd_monomial', shifted(0.5), starts, truth, lifted_dim=3)
    report.add(good)
    report.add(biased)
    report.add(failed_method('edmd_rbf', DegenerateDataError("no centers")))
    return report


class TestRMSE:

    def test_pooled_over_steps_and_dimensions(self):
        truth = np.zeros((2, 3, 2))
        predicted = np.zeros((2, 3, 2))
        predicted[1, :, 0] = 2.0
        np.testing.assert_allclose(trajectory_rmse(truth, predicted), [0.0, np.sqrt(2.0)])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            trajectory_rmse(np.zeros((2, 3, 2)), np.zeros((2, 4, 2)))

    def test_ground_truth_shape(self, linear, starts):
        truth = ground_truth(linear, starts, 0.1, 20)
        assert truth.shape == (9, 21, 2)
        np.testing.assert_array_equal(truth[:, 0], starts)

    def test_evaluate_method(self, starts):
        truth = np.repeat(starts[:, None, :], 6, axis=1)
        method_report, predicted = evaluate_method('x', shifted(0.5), starts, truth)
        assert predicted.shape == truth.shape
        assert method_report.rmse_mean == pytest.approx(0.5)
        assert method_report.rmse_std == pytest.approx(0.0, abs=1e-15)
        assert method_report.ok


class TestParallelPrediction:

    @pytest.mark.parametrize('threads', [1, 2, 4, 16])
    def test_result_does_not_depend_on_threads(self, starts, threads):
        predict = shifted(np.array([0.1, -0.2]))
        np.testing.assert_array_equal(predict_parallel(predict, starts, threads), predict(starts))


class TestEvalReport:

    def test_all_ok(self, report):
        assert not report.all_ok
        del report.methods['edmd_rbf']
        assert report.all_ok

    def test_rmse_table(self, report):
        table = report.rmse_table()
        assert table['method'].tolist() == ['kefmd', 'edmd_monomial', 'edmd_rbf']
        assert table['rmse_mean'].iloc[1] == pytest.approx(0.5)
        assert np.isnan(table['rmse_mean'].iloc[2])

    def test_timing_is_optional(self, report):
        report.methods['kefmd'].diagnostics['fit_time'] = 1.5
        document = report.to_dict(include_timing=False)
        kefmd = document['methods'][0]
        assert 'wall_time' not in kefmd
        assert kefmd['diagnostics'] == {'rank': 4}
        assert 'wall_time' in report.to_dict()['methods'][0]

    def test_failed_method(self, report):
        failed = report.methods['edmd_rbf']
        assert failed.status == 'failed'
        assert failed.error_message == 'DegenerateDataError: no centers'

    def test_per_trajectory_frame_skips_failures(self, report):
        frame = report.per_trajectory_frame()
        assert list(frame.columns) == ['traj_id', 'kefmd', 'edmd_monomial']
        assert len(frame) == 9


class TestFrames:

    def test_trajectory_frame(self):
        predicted = np.arange(12, dtype=float).reshape(2, 3, 2)
        frame = trajectory_frame(predicted, 0.5)
        assert list(frame.columns) == ['traj_id', 'k', 't', 'xhat_1', 'xhat_2']
        assert frame['t'].tolist() == [0.0, 0.5, 1.0, 0.0, 0.5, 1.0]
        assert frame['xhat_2'].tolist() == [1.0, 3.0, 5.0, 7.0, 9.0, 11.0]

    def test_diffeo_error_grid(self, exact_ex1, ex1_box):
        frame, sup = diffeo_error_grid(IdentityMap(2), exact_ex1, ex1_box, per_dim=11)
        assert len(frame) == 121
        # identity misses the quadratic term gain * x1^2, largest at |x1| = 5
        assert sup == pytest.approx(abs(exact_ex1.gain) * 25.0)
        assert frame['err_1'].max() == 0.0


class TestReportWriter:

    def test_eval_report_files(self, report, tmp_path):
        paths = ReportWriter(tmp_path / 'eval').write_eval_report(report)
        document = read_json(paths['report'])
        assert [m['method'] for m in document['methods']] == ['kefmd', 'edmd_monomial', 'edmd_rbf']
        assert read_csv(paths['rmse_table'])['method'].tolist() == ['kefmd', 'edmd_monomial', 'edmd_rbf']
        assert 'traj_id' in read_csv(paths['per_trajectory']).columns

    def test_comparison(self, report, tmp_path):
        paths = ReportWriter(tmp_path).write_comparison(report)
        document = json.loads(paths['json'].read_text())
        assert document['failures'] == {'edmd_rbf': 'DegenerateDataError: no centers'}
        assert len(document['rows']) == 3

    def test_summary(self, report):
        text = format_summary(report)
        assert 'RMSE SUMMARY (linear, seed 0)' in text
        assert 'FAILED: DegenerateDataError' in text
        assert text.startswith('=' * 50)

    def test_empty_report(self, tmp_path):
        empty = EvalReport(preset='ex1', seed=0, dt=0.065, horizon=200, n_trajectories=100)
        paths = ReportWriter(tmp_path).write_comparison(empty)
        assert json.loads(paths['json'].read_text())['rows'] == []
        assert empty.all_ok

    def test_method_report_defaults(self):
        report = MethodReport(method='kefmd')
        assert report.ok and report.per_trajectory.size == 0
