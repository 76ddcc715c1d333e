import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Base configuration class"""

    # Fixed-point model
    RETRO_WORD_BITS = int(os.environ.get('RETRO_WORD_BITS', 31))  # bits per coordinate

    # Time segment tree
    RETRO_BRANCHING = int(os.environ.get('RETRO_BRANCHING', 8))  # at most 8 children per node
    RETRO_MIN_CAPACITY = int(os.environ.get('RETRO_MIN_CAPACITY', 16))

    # Catalogs (generalized union-split-find)
    GUSF_MIN_BLOCK = int(os.environ.get('GUSF_MIN_BLOCK', 16))
    GUSF_COLOR_CAP = int(os.environ.get('GUSF_COLOR_CAP', 2))

    # Randomized skip levels of the quadtree
    RETRO_SEED = int(os.environ.get('RETRO_SEED', 0))

    # Structural audits after every mutation (slow)
    RETRO_CHECK_INVARIANTS = os.environ.get('RETRO_CHECK_INVARIANTS', 'False').lower() == 'true'

    # Logging Configuration
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'WARNING')
    LOG_FILE = os.environ.get('LOG_FILE')  # optional, stderr only when unset


class DevelopmentConfig(Config):
    """Development configuration"""
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')


class ProductionConfig(Config):
    """Production configuration"""
    RETRO_CHECK_INVARIANTS = False


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    RETRO_WORD_BITS = 16
    RETRO_CHECK_INVARIANTS = True
    LOG_LEVEL = 'DEBUG'


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}
