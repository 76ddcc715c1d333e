"""Workload scripts: parsing, formatting and random generation.

Grammar (whitespace separated, `#` starts a comment):

    dims <d> <w>                          first non-comment line
    add <id> <t_start> <t_end|inf> <x1> .. <xd>
    remove <id>
    range <t> <r> <eps> <x1> .. <xd>
    ann <t> <eps> <x1> .. <xd>
    empty <t> <r> <eps> <x1> .. <xd>
"""
import logging
import math
import random
import re
from typing import List, Tuple

from retrospace.exceptions import WorkloadError
from retrospace.models import (
    INF, MAX_DIMENSION, AddCommand, AnnCommand, EmptyCommand, RangeCommand, RemoveCommand, WorkloadScript
)

logger = logging.getLogger(__name__)

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1
MAX_WORD_BITS = 62

_TOKEN = re.compile(r'\S+')

Token = Tuple[str, int]


def _tokens(line: str) -> List[Token]:
    text = line.split('#', 1)[0]
    return [(match.group(), match.start() + 1) for match in _TOKEN.finditer(text)]


class _LineParser:
    """Typed token access for one line, raising WorkloadError with positions"""

    def __init__(self, tokens: List[Token], number: int):
        self.tokens = tokens
        self.number = number
        self.cursor = 1

    def fail(self, message: str, column: int = None):
        raise WorkloadError(message, self.number, column)

    def _next(self, what: str) -> Token:
        if self.cursor >= len(self.tokens):
            end = self.tokens[-1][1] + len(self.tokens[-1][0])
            self.fail(f'missing {what}', end)
        token = self.tokens[self.cursor]
        self.cursor += 1
        return token

    def integer(self, what: str, low: int = INT64_MIN, high: int = INT64_MAX) -> int:
        text, column = self._next(what)
        try:
            value = int(text)
        except ValueError:
            self.fail(f'{what} must be an integer, got {text!r}', column)
        if not low <= value <= high:
            self.fail(f'{what} {value} outside [{low}, {high}]', column)
        return value

    def end_time(self):
        text, column = self._next('t_end')
        if text == 'inf':
            return INF
        self.cursor -= 1
        return self.integer('t_end')

    def positive(self, what: str) -> float:
        text, column = self._next(what)
        try:
            value = float(text)
        except ValueError:
            self.fail(f'{what} must be a number, got {text!r}', column)
        if not value > 0 or math.isinf(value):
            self.fail(f'{what} must be positive and finite, got {text!r}', column)
        return value

    def coords(self, dimension: int) -> Tuple[float, ...]:
        values = []
        for axis in range(dimension):
            text, column = self._next(f'coordinate x{axis + 1}')
            try:
                value = float(text)
            except ValueError:
                self.fail(f'coordinate must be a number, got {text!r}', column)
            if not 0.0 <= value < 1.0:
                self.fail(f'coordinate {text} outside [0, 1)', column)
            values.append(value)
        return tuple(values)

    def finish(self):
        if self.cursor < len(self.tokens):
            text, column = self.tokens[self.cursor]
            self.fail(f'unexpected token {text!r}', column)


def parse_workload(text: str) -> WorkloadScript:
    """Parse a workload script; raises WorkloadError with line and column"""
    script = WorkloadScript()
    live = set()
    for number, line in enumerate(text.splitlines(), start=1):
        tokens = _tokens(line)
        if not tokens:
            continue
        parser = _LineParser(tokens, number)
        verb, column = tokens[0]
        if script.dimension is None:
            if verb != 'dims':
                parser.fail('the first command must be `dims <d> <w>`', column)
            script.dimension = parser.integer('dimension', 1, MAX_DIMENSION)
            script.bits = parser.integer('word bits', 1, MAX_WORD_BITS)
            parser.finish()
            continue
        d = script.dimension
        if verb == 'add':
            ident = parser.integer('id')
            if ident in live:
                parser.fail(f'duplicate live id {ident}', tokens[1][1])
            t_start = parser.integer('t_start')
            t_end = parser.end_time()
            if not t_start < t_end:
                parser.fail(f'empty interval [{t_start}, {t_end})', tokens[2][1])
            command = AddCommand(ident, t_start, t_end, parser.coords(d), number)
            live.add(ident)
        elif verb == 'remove':
            ident = parser.integer('id')
            if ident not in live:
                parser.fail(f'unknown id {ident}', tokens[1][1])
            command = RemoveCommand(ident, number)
            live.discard(ident)
        elif verb == 'range':
            command = RangeCommand(parser.integer('t'), parser.positive('radius'), parser.positive('eps'),
                                   parser.coords(d), number)
        elif verb == 'ann':
            command = AnnCommand(parser.integer('t'), parser.positive('eps'), parser.coords(d), number)
        elif verb == 'empty':
            command = EmptyCommand(parser.integer('t'), parser.positive('radius'), parser.positive('eps'),
                                   parser.coords(d), number)
        elif verb == 'dims':
            parser.fail('`dims` may appear only once', column)
        else:
            parser.fail(f'unknown command {verb!r}', column)
        parser.finish()
        script.commands.append(command)
    logger.info(f'parsed workload: {len(script.commands)} commands, {script.query_count} queries')
    return script


def _number(value: float) -> str:
    return repr(value)


def format_workload(script: WorkloadScript) -> str:
    """Render a script in the workload grammar"""
    lines = [f'dims {script.dimension} {script.bits}']
    for command in script.commands:
        coords = ' '.join(_number(value) for value in getattr(command, 'coords', ()))
        if isinstance(command, AddCommand):
            end = 'inf' if command.t_end == INF else command.t_end
            lines.append(f'add {command.ident} {command.t_start} {end} {coords}')
        elif isinstance(command, RemoveCommand):
            lines.append(f'remove {command.ident}')
        elif isinstance(command, RangeCommand):
            lines.append(f'range {command.t} {_number(command.radius)} {_number(command.eps)} {coords}')
        elif isinstance(command, AnnCommand):
            lines.append(f'ann {command.t} {_number(command.eps)} {coords}')
        else:
            lines.append(f'empty {command.t} {_number(command.radius)} {_number(command.eps)} {coords}')
    return '\n'.join(lines) + '\n'


def parse_generator_spec(text: str) -> Tuple[int, int, int]:
    """`n=<N>,q=<Q>,d=<D>` as (n, q, d)"""
    values = {}
    for part in text.split(','):
        name, _, value = part.partition('=')
        name = name.strip()
        if name not in ('n', 'q', 'd') or not value.strip().isdigit():
            raise WorkloadError(f'bad generator field {part!r}; expected n=<N>,q=<Q>,d=<D>')
        values[name] = int(value)
    if set(values) != {'n', 'q', 'd'}:
        raise WorkloadError('generator needs n, q and d')
    if not 1 <= values['d'] <= MAX_DIMENSION:
        raise WorkloadError(f'd must be in [1, {MAX_DIMENSION}]')
    return values['n'], values['q'], values['d']


def _unit(rng: random.Random) -> float:
    return math.floor(rng.random() * 1e6) / 1e6


def generate_workload(n: int, q: int, d: int, seed: int = 0, bits: int = 31) -> WorkloadScript:
    """Random script: n lifespans over times [0, 4n), about n/10 retractions, q queries"""
    rng = random.Random(seed)
    horizon = max(4 * n, 8)
    script = WorkloadScript(dimension=d, bits=bits)
    live = []
    queries_left = q
    for ident in range(n):
        t_start = rng.randrange(horizon)
        t_end = INF if rng.random() < 0.2 else t_start + 1 + rng.randrange(horizon // 2)
        coords = tuple(_unit(rng) for _ in range(d))
        script.commands.append(AddCommand(ident, t_start, t_end, coords))
        live.append(ident)
        if len(live) > 1 and rng.random() < 0.1:
            victim = live.pop(rng.randrange(len(live)))
            script.commands.append(RemoveCommand(victim))
        # spread the queries over the script
        while queries_left and rng.random() < queries_left / max(n - ident, 1):
            script.commands.append(_random_query(rng, d, horizon))
            queries_left -= 1
    while queries_left:
        script.commands.append(_random_query(rng, d, horizon))
        queries_left -= 1
    logger.info(f'generated workload n={n} q={q} d={d} seed={seed}')
    return script


def _random_query(rng: random.Random, d: int, horizon: int):
    t = rng.randrange(-1, horizon + 1)
    eps = rng.choice((0.1, 0.5, 1.0))
    coords = tuple(_unit(rng) for _ in range(d))
    kind = rng.random()
    if kind < 0.4:
        return RangeCommand(t, rng.uniform(0.01, 0.25), eps, coords)
    if kind < 0.8:
        return AnnCommand(t, eps, coords)
    return EmptyCommand(t, rng.uniform(0.01, 0.25), eps, coords)
