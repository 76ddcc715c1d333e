import click

from config import config


@click.group()
@click.option('--config', 'config_name', type=click.Choice(sorted(config)), default='default',
              help='Configuration profile from config.py')
@click.pass_context
def cli(ctx, config_name):
    """Fully retroactive approximate range and nearest neighbour queries"""
    from retrospace import setup_logging

    ctx.ensure_object(dict)
    ctx.obj['config_name'] = config_name
    setup_logging(config[config_name])


from . import commands  # noqa: E402,F401
