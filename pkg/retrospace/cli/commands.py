import json
import logging

import click

from retrospace.cli import cli
from retrospace.exceptions import RetroSpaceError, StructureInconsistencyError
from retrospace.services.runner import MODES, WorkloadRunner
from retrospace.services.workload_parser import (
    format_workload, generate_workload, parse_generator_spec, parse_workload
)

logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_INPUT = 2


@cli.command()
@click.argument('script', type=click.Path(exists=True, dir_okay=False), required=False)
@click.option('--mode', type=click.Choice(MODES), default='exec', show_default=True)
@click.option('--seed', type=int, default=0, show_default=True, help='Seed for --gen workloads')
@click.option('--gen', 'generator', help='Synthesize a workload: n=<N>,q=<Q>,d=<D>')
@click.option('--doublings', type=int, default=4, show_default=True, help='Bench sizes n, 2n, ... with --gen')
@click.option('--json', 'as_json', is_flag=True, help='Print the report, answers and counters as JSON')
@click.pass_context
def run(ctx, script, mode, seed, generator, doublings, as_json):
    """Run a workload SCRIPT (or a generated one) in exec, verify or bench mode"""
    runner = WorkloadRunner(ctx.obj['config_name'])
    try:
        if generator is not None:
            n, q, d = parse_generator_spec(generator)
            if mode == 'bench':
                report = runner.bench([n << i for i in range(doublings)], q, d, seed=seed)
            else:
                report = runner.run(generate_workload(n, q, d, seed=seed), mode)
        elif script is not None:
            with open(script, encoding='utf-8') as handle:
                parsed = parse_workload(handle.read())
            report = runner.run(parsed, mode)
        else:
            raise click.UsageError('give a SCRIPT or --gen n=<N>,q=<Q>,d=<D>')
    except StructureInconsistencyError as e:
        logger.error(f"Structural inconsistency: {str(e)}")
        click.echo(f'error: {e}', err=True)
        ctx.exit(EXIT_FAILED)
    except RetroSpaceError as e:
        logger.error(f"Error running workload: {str(e)}")
        click.echo(f'error: {e}', err=True)
        ctx.exit(EXIT_INPUT)

    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        click.echo(report.render(), nl=False)
    if mode == 'verify':
        click.echo(f'{report.passed} passed, {report.failed} failed', err=True)
    ctx.exit(report.exit_code)


@cli.command()
@click.option('--gen', 'generator', required=True, help='n=<N>,q=<Q>,d=<D>')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--bits', type=int, default=31, show_default=True)
@click.pass_context
def generate(ctx, generator, seed, bits):
    """Print a random workload script"""
    try:
        n, q, d = parse_generator_spec(generator)
    except RetroSpaceError as e:
        logger.error(f"Error parsing generator spec: {str(e)}")
        click.echo(f'error: {e}', err=True)
        ctx.exit(EXIT_INPUT)
    click.echo(format_workload(generate_workload(n, q, d, seed=seed, bits=bits)), nl=False)
