import pytest

from koopman_eigenflows.models import MethodStatus, RunLedger


@pytest.fixture
def ledger(tmp_path):
    return RunLedger(f"sqlite:///{tmp_path / 'runs.db'}")


ROWS = [
    {'method': 'kefmd', 'status': 'ok', 'rmse_mean': 0.03, 'rmse_std': 0.01, 'lifted_dim': 36, 'wall_time': 0.2},
    {'method': 'edmd_rbf', 'status': 'failed', 'error_message': 'DegenerateDataError: no centers'},
]


class TestRunLedger:

    def test_record_and_list(self, ledger):
        run_id = ledger.record('ex1', 0, 1.0, 'runs/ex1_seed0', ROWS)
        assert run_id is not None
        runs = ledger.runs()
        assert len(runs) == 1
        assert runs[0]['id'] == run_id
        assert runs[0]['created_at'] is not None
        results = {r['method']: r for r in runs[0]['results']}
        assert results['kefmd']['rmse_mean'] == 0.03
        assert results['edmd_rbf']['status'] == MethodStatus.FAILED.value
        assert results['edmd_rbf']['rmse_mean'] is None

    def test_filter_by_preset(self, ledger):
        ledger.record('ex1', 0, 1.0, 'a', ROWS[:1])
        ledger.record('ex3', 1, 0.1, 'b', ROWS[:1])
        assert [r['preset'] for r in ledger.runs('ex3')] == ['ex3']
        assert len(ledger.runs()) == 2

    def test_bad_row_is_logged_not_raised(self, ledger, caplog):
        assert ledger.record('ex1', 0, 1.0, 'a', [{'method': 'kefmd', 'status': 'exploded'}]) is None
        assert 'Error saving run' in caplog.text
        assert ledger.runs() == []

    def test_persists_across_connections(self, tmp_path):
        url = f"sqlite:///{tmp_path / 'shared.db'}"
        RunLedger(url).record('linear', 2, 1.0, 'c', ROWS)
        assert RunLedger(url).runs('linear')[0]['seed'] == 2
