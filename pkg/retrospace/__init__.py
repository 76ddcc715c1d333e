import logging
import os

from config import config


def create_point_set(config_name='default', dimension=1, bits=None):
    """Point set factory function"""

    from retrospace.services.point_set import RetroPointSet

    cfg = config[config_name]
    return RetroPointSet(
        dimension,
        bits=bits if bits is not None else cfg.RETRO_WORD_BITS,
        branching=cfg.RETRO_BRANCHING,
        min_block=cfg.GUSF_MIN_BLOCK,
        color_cap=cfg.GUSF_COLOR_CAP,
        min_capacity=cfg.RETRO_MIN_CAPACITY,
        seed=cfg.RETRO_SEED,
        check_invariants=cfg.RETRO_CHECK_INVARIANTS
    )


def setup_logging(cfg):
    """Setup logging for the library and the command line"""

    handlers = [logging.StreamHandler()]

    # Create logs directory if it doesn't exist
    if cfg.LOG_FILE:
        log_dir = os.path.dirname(cfg.LOG_FILE)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)
        handlers.append(logging.FileHandler(cfg.LOG_FILE))

    # Configure logging
    logging.basicConfig(
        level=getattr(logging, cfg.LOG_LEVEL.upper()),
        format='%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]',
        handlers=handlers
    )

    logging.getLogger(__name__).debug('retrospace logging configured')
