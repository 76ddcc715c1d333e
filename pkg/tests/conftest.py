import random

import pytest

from retrospace.models import Point
from retrospace.services.point_set import RetroPointSet


def random_point(rng, dimension, bits):
    return Point(tuple(rng.randrange(1 << bits) for _ in range(dimension)), bits)


@pytest.fixture
def rng():
    """Seeded generator so failures replay"""
    return random.Random(20240611)


@pytest.fixture
def make_point_set():
    def factory(dimension, bits=16, **options):
        options.setdefault('check_invariants', False)
        return RetroPointSet(dimension, bits=bits, **options)
    return factory


@pytest.fixture
def intro_point_set():
    """X = {1, 4, 7, 10, 13} on a line, x inserted at time x and never deleted"""
    bits = 5
    points = RetroPointSet(1, bits=bits, check_invariants=True)
    handles = {}
    for x in (1, 4, 7, 10, 13):
        handles[x] = points.add_lifespan(Point((x,), bits), x, float('inf'))
    return points, handles
