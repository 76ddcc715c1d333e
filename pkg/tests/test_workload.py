import dataclasses
from pathlib import Path

import pytest

from retrospace.exceptions import WorkloadError
from retrospace.models import INF, AddCommand, AnnCommand, EmptyCommand, RangeCommand, RemoveCommand
from retrospace.services.workload_parser import (
    format_workload, generate_workload, parse_generator_spec, parse_workload
)

INTRO = Path(__file__).parent / 'data' / 'intro.workload'


def test_parse_intro_script():
    script = parse_workload(INTRO.read_text())
    assert (script.dimension, script.bits) == (1, 5)
    assert len(script.commands) == 10
    assert script.query_count == 4
    assert script.commands[0] == AddCommand(1, 1, INF, (0.03125,), 3)
    assert script.commands[5] == AnnCommand(12, 0.5, (0.1875,), 8)
    assert script.commands[8] == RangeCommand(4, 0.1, 0.1, (0.0,), 11)
    assert script.commands[9] == EmptyCommand(0, 0.5, 0.1, (0.5,), 12)


def test_comments_blank_lines_and_reused_ids():
    text = 'dims 2 8  # header\n\n   \nadd 3 0 4 0.5 0.25\nremove 3 # gone\nadd 3 -7 9 0 0\n'
    script = parse_workload(text)
    assert script.commands == [
        AddCommand(3, 0, 4, (0.5, 0.25), 4),
        RemoveCommand(3, 5),
        AddCommand(3, -7, 9, (0.0, 0.0), 6)
    ]


def test_empty_script():
    script = parse_workload('# nothing here\n')
    assert script.dimension is None
    assert script.commands == []


@pytest.mark.parametrize('text, line, column', [
    ('add 1 0 1 0.5\n', 1, 1),
    ('dims 1\n', 1, 7),
    ('dims 9 5\n', 1, 6),
    ('dims 1 63\n', 1, 8),
    ('dims 1 5\nadd 1 5 3 0.5\n', 2, 7),
    ('dims 1 5\nadd 1 0 inf 0.5\nadd 1 2 3 0.5\n', 3, 5),
    ('dims 1 5\nremove 9\n', 2, 8),
    ('dims 2 8\nann 3 0.5 0.2 1.5\n', 2, 15),
    ('dims 1 8\nrange 3 0 0.5 0.2\n', 2, 9),
    ('dims 1 8\nann 3 -1 0.2\n', 2, 7),
    ('dims 1 8\nempty 3 0.1 x 0.2\n', 2, 13),
    ('dims 1 8\nadd 1 0 1 0.5\nremove 1 2\n', 3, 10),
    ('dims 1 8\nann 1.5 0.5 0.2\n', 2, 5),
    ('dims 1 8\nadd 1 0 9223372036854775808 0.2\n', 2, 9),
    ('dims 1 8\ndims 1 8\n', 2, 1),
    ('dims 1 8\nquery 1 2\n', 2, 1),
    ('dims 1 8\nann 1 0.5 0.2 0.3\n', 2, 15),
])
def test_errors_carry_position(text, line, column):
    with pytest.raises(WorkloadError) as error:
        parse_workload(text)
    assert (error.value.line, error.value.column) == (line, column)
    assert str(error.value).startswith(f'line {line}, column {column}: ')


def test_generator_spec():
    assert parse_generator_spec('n=10,q=5,d=2') == (10, 5, 2)
    assert parse_generator_spec(' d=1, n=3 ,q=0') == (3, 0, 1)
    for bad in ('n=10,q=5', 'n=10,q=5,d=9', 'n=ten,q=5,d=2', 'x=1,q=5,d=2'):
        with pytest.raises(WorkloadError):
            parse_generator_spec(bad)


def test_generated_workloads_are_reproducible():
    script = generate_workload(50, 20, 3, seed=3)
    assert format_workload(script) == format_workload(generate_workload(50, 20, 3, seed=3))
    assert format_workload(script) != format_workload(generate_workload(50, 20, 3, seed=4))
    assert sum(isinstance(command, AddCommand) for command in script.commands) == 50
    assert script.query_count == 20
    assert (script.dimension, script.bits) == (3, 31)


def test_formatted_workload_parses_back():
    script = generate_workload(40, 15, 2, seed=9, bits=20)
    parsed = parse_workload(format_workload(script))
    assert (parsed.dimension, parsed.bits) == (2, 20)
    assert [dataclasses.replace(command, line=0) for command in parsed.commands] == script.commands
