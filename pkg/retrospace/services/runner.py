"""Execute workload scripts against the point set: exec, verify and bench modes."""
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from retrospace import create_point_set
from retrospace.exceptions import PreconditionError
from retrospace.models import (
    AddCommand, AnnCommand, EmptyCommand, Point, RangeCommand, RangeQuery, RemoveCommand, WorkloadScript
)
from retrospace.services.oracle import NaiveTimeline
from retrospace.services.workload_parser import generate_workload

logger = logging.getLogger(__name__)

MODES = ('exec', 'verify', 'bench')


@dataclass
class RunReport:
    """Output lines (exec, verify) or the bench table of one run"""

    mode: str
    lines: List[str] = field(default_factory=list)
    passed: int = 0
    failed: int = 0
    table: Optional[pd.DataFrame] = None
    fits: Dict[str, float] = field(default_factory=dict)
    results: List[dict] = field(default_factory=list)
    script: Dict[str, Any] = field(default_factory=dict)
    counters: Dict[str, int] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

    def render(self) -> str:
        if self.table is not None:
            return self.table.to_csv(index=False)
        return ''.join(f'{line}\n' for line in self.lines)

    def to_dict(self):
        """Convert report to dictionary"""
        data = {
            'mode': self.mode,
            'script': dict(self.script),
            'passed': self.passed,
            'failed': self.failed,
            'results': list(self.results),
            'counters': dict(self.counters)
        }
        if self.table is not None:
            # to_json maps the NaN ratios of the first row to null
            data['table'] = json.loads(self.table.to_json(orient='records'))
            data['fits'] = dict(self.fits)
        return data

    def __repr__(self):
        return f'<RunReport {self.mode}: {self.passed} passed, {self.failed} failed>'


def _answer(hits, ident_of) -> List[dict]:
    entries = [{'id': ident_of[handle], 'point': p.to_dict()} for p, handle in hits]
    return sorted(entries, key=lambda entry: entry['id'])


def _ids(hits, ident_of) -> str:
    idents = sorted(ident_of[handle] for _, handle in hits)
    return ' '.join(str(ident) for ident in idents) if idents else '-'


class WorkloadRunner:
    """Drives one RetroPointSet (and the oracle in verify mode) through a script"""

    def __init__(self, config_name: str = 'default'):
        self.config_name = config_name

    def run(self, script: WorkloadScript, mode: str = 'exec') -> RunReport:
        if mode not in MODES:
            raise PreconditionError(f'unknown mode {mode!r}; expected one of {", ".join(MODES)}')
        if mode == 'bench':
            row = self._measure(script)
            table = pd.DataFrame([row])
            return RunReport(mode, table=table, script=script.to_dict())
        return self._execute(script, verify=(mode == 'verify'))

    def _point_set(self, script: WorkloadScript):
        return create_point_set(self.config_name, dimension=script.dimension, bits=script.bits)

    def _execute(self, script: WorkloadScript, verify: bool) -> RunReport:
        report = RunReport('verify' if verify else 'exec', script=script.to_dict())
        if script.dimension is None:
            return report
        points = self._point_set(script)
        oracle = NaiveTimeline() if verify else None
        handle_of, ident_of = {}, {}
        for command in script.commands:
            if isinstance(command, AddCommand):
                p = Point.from_unit(command.coords, script.bits)
                handle = points.add_lifespan(p, command.t_start, command.t_end)
                handle_of[command.ident] = handle
                ident_of[handle] = command.ident
                if oracle is not None:
                    oracle.add(p, command.t_start, command.t_end, command.ident)
                continue
            if isinstance(command, RemoveCommand):
                handle = handle_of.pop(command.ident)
                points.remove_lifespan(handle)
                if oracle is not None:
                    oracle.remove(command.ident)
                continue
            q = Point.from_unit(command.coords, script.bits)
            if isinstance(command, (RangeCommand, EmptyCommand)):
                query = RangeQuery(q, command.radius, command.eps, command.t)
                asked = query.to_dict()
            else:
                asked = {'center': list(q.to_unit()), 'eps': command.eps, 't': command.t}
            if isinstance(command, RangeCommand):
                hits = points.retro_range_report(query)
                output = _ids(hits, ident_of)
                ok = oracle is None or oracle.range_ok(
                    [(p, ident_of[h]) for p, h in hits], q, command.radius, command.eps, command.t)
                verb = 'range'
            elif isinstance(command, EmptyCommand):
                hit = points.retro_spherical_empty(query.center, query.radius, query.eps, query.t)
                hits = [hit] if hit else []
                output = _ids(hits, ident_of)
                translated = (hit[0], ident_of[hit[1]]) if hit else None
                ok = oracle is None or oracle.empty_ok(translated, q, command.radius, command.eps, command.t)
                verb = 'empty'
            else:
                hit = points.retro_ann(q, command.eps, command.t)
                hits = [hit] if hit else []
                output = _ids(hits, ident_of)
                translated = (hit[0], ident_of[hit[1]]) if hit else None
                ok = oracle is None or oracle.ann_ok(translated, q, command.eps, command.t)
                verb = 'ann'
            result = {'line': command.line, 'command': verb, 'query': asked, 'answer': _answer(hits, ident_of)}
            report.results.append(result)
            if oracle is None:
                report.lines.append(f'{verb} {command.line}: {output}')
                continue
            if ok:
                report.passed += 1
                result['ok'] = True
                report.lines.append(f'PASS {verb} {command.line}: {output}')
            else:
                report.failed += 1
                result['ok'] = False
                report.lines.append(f'FAIL {verb} {command.line}: {output}')
                logger.warning(f'{verb} query on line {command.line} violates its contract')
        report.counters = points.counters.to_dict()
        if verify:
            logger.info(f'verification: {report.passed} passed, {report.failed} failed')
        return report

    def _measure(self, script: WorkloadScript) -> dict:
        """Per-operation counter means of one script"""
        points = self._point_set(script)
        counters = points.counters
        handle_of = {}
        add_nodes, add_catalog, add_block, query_nodes = [], [], [], []
        for command in script.commands:
            before_nodes, before_catalog = counters.nodes_visited, counters.catalog_ops
            before_block = counters.block_work
            if isinstance(command, AddCommand):
                p = Point.from_unit(command.coords, script.bits)
                handle_of[command.ident] = points.add_lifespan(p, command.t_start, command.t_end)
                add_nodes.append(counters.nodes_visited - before_nodes)
                add_catalog.append(counters.catalog_ops - before_catalog)
                add_block.append(counters.block_work - before_block)
                continue
            if isinstance(command, RemoveCommand):
                points.remove_lifespan(handle_of.pop(command.ident))
                continue
            q = Point.from_unit(command.coords, script.bits)
            reported = 0
            if isinstance(command, RangeCommand):
                reported = len(points.retro_range_report(RangeQuery(q, command.radius, command.eps, command.t)))
            elif isinstance(command, EmptyCommand):
                points.retro_spherical_empty(q, command.radius, command.eps, command.t)
            elif isinstance(command, AnnCommand):
                points.retro_ann(q, command.eps, command.t)
            query_nodes.append(counters.nodes_visited - before_nodes - reported)
        n = sum(1 for command in script.commands if isinstance(command, AddCommand))
        entries = points.catalog_entries()
        return {
            'n': n,
            'queries': len(query_nodes),
            'add_nodes_mean': float(np.mean(add_nodes)) if add_nodes else 0.0,
            'add_catalog_mean': float(np.mean(add_catalog)) if add_catalog else 0.0,
            'add_block_mean': float(np.mean(add_block)) if add_block else 0.0,
            'query_nodes_mean': float(np.mean(query_nodes)) if query_nodes else 0.0,
            'rebuild_work': counters.rebuild_work,
            'catalog_entries': entries,
            'entries_per_nlogn': entries / (n * math.log2(n)) if n > 1 else 0.0
        }

    def bench(self, sizes: Sequence[int], q: int, d: int, seed: int = 0, bits: int = 31) -> RunReport:
        """Counter means for generated workloads of the given sizes, with doubling ratios"""
        rows = []
        for n in sizes:
            script = generate_workload(n, q, d, seed=seed, bits=bits)
            rows.append(self._measure(script))
            logger.info(f'bench n={n}: query nodes {rows[-1]["query_nodes_mean"]:.1f}')
        table = pd.DataFrame(rows)
        for column in ('add_nodes_mean', 'query_nodes_mean'):
            ratio = table[column] / table[column].shift(1)
            table[column.replace('_mean', '_ratio')] = ratio.round(4)
        report = RunReport('bench', table=table)
        if len(table) > 1:
            logs = np.log2(table['n'].to_numpy(dtype=float))
            slope, intercept = np.polyfit(logs, table['query_nodes_mean'].to_numpy(dtype=float), 1)
            report.fits = {
                'query_nodes_per_log2n': float(slope),
                'query_nodes_intercept': float(intercept),
                'entries_constant': float(table['entries_per_nlogn'].max())
            }
            logger.info(f'bench fits: {report.fits}')
        return report
