import json
from pathlib import Path

import pytest

from retrospace.exceptions import PreconditionError
from retrospace.services.point_set import RetroPointSet
from retrospace.services.runner import WorkloadRunner
from retrospace.services.workload_parser import generate_workload, parse_workload

INTRO = Path(__file__).parent / 'data' / 'intro.workload'

INTRO_LINES = ['ann 8: 7', 'ann 10: 6', 'range 11: 1', 'empty 12: -']


@pytest.fixture
def runner():
    return WorkloadRunner('testing')


@pytest.fixture
def intro_script():
    return parse_workload(INTRO.read_text())


def test_exec_reports_workload_ids(runner, intro_script):
    report = runner.run(intro_script, 'exec')
    assert report.lines == INTRO_LINES
    assert report.render() == ''.join(f'{line}\n' for line in INTRO_LINES)
    assert report.exit_code == 0


def test_verify_passes_intro(runner, intro_script):
    report = runner.run(intro_script, 'verify')
    assert (report.passed, report.failed) == (4, 0)
    assert report.lines == [f'PASS {line}' for line in INTRO_LINES]
    assert report.to_dict()['passed'] == 4


def test_verify_flags_a_broken_answer(runner, intro_script, monkeypatch):
    monkeypatch.setattr(RetroPointSet, 'retro_ann', lambda self, q, eps, t: None)
    report = runner.run(intro_script, 'verify')
    assert report.failed == 2
    assert report.lines[0] == 'FAIL ann 8: -'
    assert report.exit_code == 1


def test_verify_generated_workload(runner):
    report = runner.run(generate_workload(80, 40, 2, seed=5, bits=16), 'verify')
    assert report.failed == 0
    assert report.passed == 40


def test_unknown_mode(runner, intro_script):
    with pytest.raises(PreconditionError):
        runner.run(intro_script, 'replay')


def test_bench_single_script(runner, intro_script):
    report = runner.run(intro_script, 'bench')
    table = report.table
    assert len(table) == 1
    assert table.loc[0, 'n'] == 6
    assert table.loc[0, 'queries'] == 4
    assert report.render().splitlines()[0].startswith('n,queries,')


def test_bench_doublings():
    report = WorkloadRunner('production').bench([30, 60, 120], q=20, d=2, seed=1, bits=16)
    table = report.table
    assert list(table['n']) == [30, 60, 120]
    assert {'add_nodes_ratio', 'query_nodes_ratio'} <= set(table.columns)
    assert set(report.fits) == {'query_nodes_per_log2n', 'query_nodes_intercept', 'entries_constant'}
    assert (table['catalog_entries'] > 0).all()


def test_adds_only_prints_nothing(runner):
    script = parse_workload('dims 2 8\nadd 1 0 5 0.5 0.5\nadd 2 3 inf 0.25 0.75\n')
    report = runner.run(script, 'exec')
    assert report.render() == ''
    assert report.exit_code == 0


@pytest.mark.parametrize('seed', range(10))
def test_verify_generated_seeds(seed):
    report = WorkloadRunner('production').run(generate_workload(60, 30, 1 + seed % 3, seed=seed, bits=20), 'verify')
    assert (report.passed, report.failed) == (30, 0)


def test_output_is_deterministic():
    script = generate_workload(60, 30, 2, seed=12, bits=20)
    first = WorkloadRunner('production').run(script, 'exec').render()
    assert first == WorkloadRunner('production').run(script, 'exec').render()
    assert len(first.splitlines()) == 30


def test_bench_counters_grow_logarithmically():
    report = WorkloadRunner('production').bench([256, 512, 1024], q=80, d=1, seed=2, bits=20)
    table = report.table
    assert table['query_nodes_ratio'].iloc[-1] <= 1.5
    assert table['add_nodes_ratio'].iloc[-1] <= 1.5
    assert report.fits['entries_constant'] <= 2.5
    assert (table['add_block_mean'] > 0).all()


@pytest.mark.slow
def test_bench_acceptance_sizes():
    sizes = [1 << exponent for exponent in range(10, 16)]
    report = WorkloadRunner('production').bench(sizes, q=200, d=1, seed=0, bits=31)
    table = report.table
    # the first two points settle the additive term
    assert (table['query_nodes_ratio'].iloc[2:] <= 1.35).all()
    assert (table['add_nodes_ratio'].iloc[2:] <= 1.35).all()
    assert report.fits['entries_constant'] <= 2


def test_report_dict_carries_answers_and_counters(runner, intro_script):
    data = runner.run(intro_script, 'exec').to_dict()
    assert data['mode'] == 'exec'
    assert (data['script']['dimension'], data['script']['bits'], data['script']['queries']) == (1, 5, 4)
    assert data['results'][0] == {
        'line': 8,
        'command': 'ann',
        'query': {'center': [0.1875], 'eps': 0.5, 't': 12},
        'answer': [{'id': 7, 'point': {'coords': [7], 'bits': 5, 'unit': [0.21875]}}]
    }
    assert data['results'][2]['query'] == {'center': [0.0], 'radius': 0.1, 'eps': 0.1, 't': 4}
    assert [entry['id'] for entry in data['results'][2]['answer']] == [1]
    assert data['results'][3]['answer'] == []
    assert data['counters']['nodes_visited'] > 0
    assert 'block_work' in data['counters']
    assert 'table' not in data
    json.dumps(data)


def test_verify_results_are_marked(runner, intro_script):
    data = runner.run(intro_script, 'verify').to_dict()
    assert [result['ok'] for result in data['results']] == [True] * 4


def test_bench_report_dict():
    data = WorkloadRunner('production').bench([16, 32], q=8, d=1, seed=3, bits=16).to_dict()
    assert [row['n'] for row in data['table']] == [16, 32]
    assert data['table'][0]['query_nodes_ratio'] is None
    assert set(data['fits']) == {'query_nodes_per_log2n', 'query_nodes_intercept', 'entries_constant'}
    json.dumps(data)
