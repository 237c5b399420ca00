import json

import pytest

import config
import main
from koopman_eigenflows.models import RunLedger
from koopman_eigenflows.utils.io import read_csv, read_json


@pytest.fixture
def config_path(small_config_doc, tmp_path):
    path = tmp_path / 'small.json'
    path.write_text(json.dumps(small_config_doc))
    return str(path)


@pytest.fixture
def ledger_url(tmp_path, monkeypatch):
    url = f"sqlite:///{tmp_path / 'cli_runs.db'}"
    monkeypatch.setattr(config, 'DATABASE_URL', url)
    return url


def run(*argv):
    return main.main(list(argv))


class TestCommands:

    def test_pipeline_steps(self, config_path, tmp_path):
        out = str(tmp_path / 'steps')
        for command in ('generate', 'train', 'build', 'evaluate'):
            assert run(command, '--config', config_path, '--out', out) == 0, command
        assert len(read_csv(tmp_path / 'steps' / 'dataset.csv')) == 120
        assert read_json(tmp_path / 'steps' / 'eval' / 'report.json')['preset'] == 'small'

    def test_compare_records_run(self, config_path, ledger_url, tmp_path, capsys):
        out = tmp_path / 'cmp'
        assert run('compare', '--config', config_path, '--out', str(out), '--seed', '5') == 0
        assert 'METHOD COMPARISON (small, seed 5)' in capsys.readouterr().out
        assert (out / 'eval' / 'comparison.csv').exists()
        runs = RunLedger(ledger_url).runs('small')
        assert len(runs) == 1 and runs[0]['seed'] == 5

    def test_method_subset(self, config_path, ledger_url, tmp_path):
        out = tmp_path / 'subset'
        assert run('compare', '--config', config_path, '--out', str(out), '--method', 'edmd_monomial') == 0
        rows = read_json(out / 'eval' / 'comparison.json')['rows']
        assert [r['method'] for r in rows] == ['edmd_monomial']
        assert not (out / 'flow.json').exists()

    def test_empty_method_list(self, config_path, ledger_url, tmp_path):
        out = tmp_path / 'empty'
        assert run('compare', '--config', config_path, '--out', str(out), '--method') == 0
        assert read_json(out / 'eval' / 'comparison.json')['rows'] == []

    def test_scale(self, config_path, tmp_path):
        out = tmp_path / 'scaled'
        assert run('generate', '--config', config_path, '--out', str(out), '--scale', '0.5') == 0
        assert len(read_csv(out / 'dataset.csv')) == 6 * 10

    def test_oracle_check(self, tmp_path, capsys):
        out = tmp_path / 'oracle'
        assert run('oracle-check', '--out', str(out)) == 0
        report = read_json(out / 'oracle_report.json')
        assert report['all_passed'] is True
        assert len(report['checks']) == 9
        assert 'ORACLE CHECKS' in capsys.readouterr().out


class TestExitCodes:

    def test_train_before_generate(self, config_path, tmp_path):
        assert run('train', '--config', config_path, '--out', str(tmp_path / 'nothing')) == 1

    def test_evaluate_before_build(self, config_path, tmp_path):
        out = str(tmp_path / 'half')
        assert run('generate', '--config', config_path, '--out', out) == 0
        assert run('evaluate', '--config', config_path, '--out', out) == 1

    def test_unknown_config(self, tmp_path):
        assert run('generate', '--config', 'ex2', '--out', str(tmp_path / 'x')) == 1

    def test_bad_config_file(self, small_config_doc, tmp_path):
        small_config_doc['train']['warmup'] = 10
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps(small_config_doc))
        assert run('generate', '--config', str(path), '--out', str(tmp_path / 'y')) == 1

    def test_max_powers_of_the_wrong_length(self, small_config_doc, tmp_path):
        small_config_doc['max_powers'] = [1]
        path = tmp_path / 'short.json'
        path.write_text(json.dumps(small_config_doc))
        assert run('compare', '--config', str(path), '--out', str(tmp_path / 'z')) == 1

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as info:
            run('fit')
        assert info.value.code == 2

    def test_unknown_method(self):
        with pytest.raises(SystemExit):
            run('compare', '--method', 'dmd')


class TestResolveConfig:

    def test_default_output_directory(self, monkeypatch):
        monkeypatch.setattr(config, 'KOOPFLOW_OUTPUT_DIR', 'somewhere')
        args = main.build_parser().parse_args(['generate', '--config', 'ex1', '--seed', '4'])
        experiment = main.resolve_config(args)
        assert experiment.output_dir == 'somewhere/ex1_seed4'
        assert experiment.seed == 4
