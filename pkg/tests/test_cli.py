import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from retrospace.cli import cli
from retrospace.exceptions import StructureInconsistencyError
from retrospace.services.runner import WorkloadRunner

INTRO = Path(__file__).parent / 'data' / 'intro.workload'


@pytest.fixture
def runner():
    # click >= 8.2 always keeps stderr separate and dropped the mix_stderr option
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        return CliRunner()


def test_exec(runner):
    result = runner.invoke(cli, ['--config', 'testing', 'run', str(INTRO)])
    assert result.exit_code == 0
    assert result.stdout.splitlines() == ['ann 8: 7', 'ann 10: 6', 'range 11: 1', 'empty 12: -']


def test_verify(runner):
    result = runner.invoke(cli, ['--config', 'testing', 'run', str(INTRO), '--mode', 'verify'])
    assert result.exit_code == 0
    assert '4 passed, 0 failed' in result.stderr


def test_bad_script_exits_with_input_error(runner, tmp_path):
    script = tmp_path / 'bad.workload'
    script.write_text('dims 1 5\nadd 1 5 3 0.5\n')
    result = runner.invoke(cli, ['run', str(script)])
    assert result.exit_code == 2
    assert 'line 2, column 7' in result.stderr


def test_missing_input_is_a_usage_error(runner):
    result = runner.invoke(cli, ['run'])
    assert result.exit_code == 2


def test_inconsistency_exits_with_failure(runner, monkeypatch):
    def broken(self, script, mode='exec'):
        raise StructureInconsistencyError('catalog out of sync')

    monkeypatch.setattr(WorkloadRunner, 'run', broken)
    result = runner.invoke(cli, ['run', str(INTRO)])
    assert result.exit_code == 1
    assert 'catalog out of sync' in result.stderr


def test_generate_then_run(runner, tmp_path):
    result = runner.invoke(cli, ['generate', '--gen', 'n=30,q=10,d=2', '--seed', '7', '--bits', '16'])
    assert result.exit_code == 0
    assert result.stdout.startswith('dims 2 16\n')
    script = tmp_path / 'gen.workload'
    script.write_text(result.stdout)
    verified = runner.invoke(cli, ['--config', 'testing', 'run', str(script), '--mode', 'verify'])
    assert verified.exit_code == 0
    assert '10 passed, 0 failed' in verified.stderr


def test_generate_rejects_bad_spec(runner):
    result = runner.invoke(cli, ['generate', '--gen', 'n=3,q=1'])
    assert result.exit_code == 2


def test_gen_bench(runner):
    result = runner.invoke(cli, ['--config', 'production', 'run', '--gen', 'n=16,q=8,d=1', '--mode', 'bench',
                                 '--doublings', '2'])
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0].startswith('n,queries,')
    assert len(lines) == 3


def test_exec_json(runner):
    result = runner.invoke(cli, ['--config', 'testing', 'run', str(INTRO), '--json'])
    assert result.exit_code == 0
    data = json.loads(result.stdout)
    assert [entry['answer'][0]['id'] for entry in data['results'][:2]] == [7, 6]
    assert data['results'][1]['answer'][0]['point']['coords'] == [6]
    assert data['counters']['catalog_ops'] > 0


def test_gen_bench_json(runner):
    result = runner.invoke(cli, ['--config', 'production', 'run', '--gen', 'n=16,q=8,d=1', '--mode', 'bench',
                                 '--doublings', '2', '--json'])
    assert result.exit_code == 0
    data = json.loads(result.stdout)
    assert [row['n'] for row in data['table']] == [16, 32]
    assert 'entries_constant' in data['fits']
