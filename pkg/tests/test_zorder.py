import bisect
import itertools
import math

import pytest
from hypothesis import given, strategies as st

from retrospace.models import Point, QuadCell
from retrospace.services.oracle import ref_shuffle, ref_z_sort
from retrospace.services.zorder import (
    ZOrderKey, c_constant, cell_interval, msb_less, shift, shift_offset, shuffle, z_less
)


@st.composite
def point_pairs(draw):
    dimension = draw(st.integers(1, 4))
    bits = draw(st.integers(1, 20))
    coords = st.tuples(*[st.integers(0, (1 << bits) - 1)] * dimension)
    return Point(draw(coords), bits), Point(draw(coords), bits)


def test_shuffle_examples():
    assert shuffle(Point((0, 0), 3)) == 0
    assert shuffle(Point((0b101, 0b011), 3)) == 0b100111 == 39
    assert shuffle(Point((19,), 5)) == 19


@pytest.mark.parametrize('x, y, expected', [
    (1, 2, True),
    (5, 3, False),
    (2, 3, False),
    (0, 1, True),
    (0, 0, False),
])
def test_msb_less(x, y, expected):
    assert msb_less(x, y) is expected


@given(st.integers(0, 1 << 40), st.integers(0, 1 << 40))
def test_msb_less_matches_bit_length(x, y):
    assert msb_less(x, y) == ((x.bit_length() - 1) < (y.bit_length() - 1))


def test_z_less_examples():
    p, q = Point((2, 3), 2), Point((3, 1), 2)
    assert not z_less(p, q)
    assert z_less(q, p)
    assert not z_less(p, p)
    assert z_less(Point((0, 0), 4), Point((1, 0), 4))


@given(point_pairs())
def test_z_less_agrees_with_materialized_keys(pair):
    p, q = pair
    assert z_less(p, q) == (shuffle(p) < shuffle(q))
    assert shuffle(p) == ref_shuffle(p.coords, p.bits)


def test_shift_offsets():
    p = Point((3,), 4)
    assert shift(p, 0) is p
    moved = shift(p, 1)
    assert moved.coords == (11,)
    assert moved.bits == 5
    assert shift_offset(2, 2, 3) == (2 << 3) // 3 == 5
    with pytest.raises(ValueError):
        shift_offset(3, 2, 3)


def test_largest_shift_fits_extra_bit():
    bits = 6
    p = Point((63, 63, 63), bits)
    moved = shift(p, 3)
    assert all(value < (1 << (bits + 1)) for value in moved.coords)


def test_c_constant():
    assert c_constant(1) == pytest.approx(9.0)
    assert c_constant(2) == pytest.approx(math.sqrt(2) * 12 + 1)
    with pytest.raises(ValueError):
        c_constant(0)


def test_every_cell_is_a_contiguous_run_on_the_full_grid():
    bits = 3
    grid = [Point(coords, bits) for coords in itertools.product(range(8), repeat=2)]
    ordered = sorted(grid, key=shuffle)
    assert [shuffle(p) for p in ordered] == list(range(64))
    for level in range(bits + 1):
        for anchor in {QuadCell.around(p, level).anchor for p in grid}:
            cell = QuadCell(anchor, level)
            positions = [index for index, p in enumerate(ordered) if cell.contains(p)]
            assert positions == list(range(positions[0], positions[-1] + 1))
            low, high = cell_interval(cell)
            assert (low, high) == (positions[0], positions[-1])


def test_random_cells_are_contiguous(rng):
    bits = 16
    points = [Point((rng.randrange(1 << bits), rng.randrange(1 << bits)), bits) for _ in range(300)]
    ordered = sorted(points, key=ZOrderKey)
    for _ in range(200):
        cell = QuadCell.around(rng.choice(points), rng.randrange(bits + 1))
        positions = [index for index, p in enumerate(ordered) if cell.contains(p)]
        assert positions == list(range(positions[0], positions[-1] + 1))
        low, high = cell_interval(cell)
        assert all(low <= shuffle(ordered[index]) <= high for index in positions)


def test_zorder_key_sort_matches_reference(rng):
    points = [Point((rng.randrange(64), rng.randrange(64), rng.randrange(64)), 6) for _ in range(100)]
    assert [p.coords for p in sorted(points, key=ZOrderKey)] == [p.coords for p in ref_z_sort(points)]
    shifted = sorted(points, key=lambda p: ZOrderKey(shift(p, 2)))
    assert [p.coords for p in shifted] == [p.coords for p in ref_z_sort(points, 2)]


def test_zorder_key_equality_and_hash():
    a, b = ZOrderKey(Point((1, 2), 3)), ZOrderKey(Point((1, 2), 3))
    assert a == b and hash(a) == hash(b)
    assert not a < b and a <= b


def _nearest_by_shifts(points, q):
    d = q.dimension
    best = None
    for j in range(d + 1):
        keys = sorted((shuffle(shift(p, j)), index) for index, p in enumerate(points))
        position = bisect.bisect_left(keys, (shuffle(shift(q, j)), -1))
        for neighbour in (position - 1, position):
            if 0 <= neighbour < len(keys):
                squared = q.squared_distance(points[keys[neighbour][1]])
                best = squared if best is None else min(best, squared)
    return best


@pytest.mark.parametrize('dimension', [1, 2, 3])
def test_shifted_neighbours_are_c_approximate(rng, dimension):
    bits = 12
    c = c_constant(dimension)
    for _ in range(60):
        points = [Point(tuple(rng.randrange(1 << bits) for _ in range(dimension)), bits) for _ in range(40)]
        q = Point(tuple(rng.randrange(1 << bits) for _ in range(dimension)), bits)
        nearest = min(q.squared_distance(p) for p in points)
        assert _nearest_by_shifts(points, q) <= c * c * nearest


@pytest.mark.slow
@pytest.mark.parametrize('dimension', [1, 2, 3])
def test_shifted_neighbours_acceptance(rng, dimension):
    bits = 16
    c = c_constant(dimension)
    for _ in range(10000):
        points = [Point(tuple(rng.randrange(1 << bits) for _ in range(dimension)), bits) for _ in range(20)]
        q = Point(tuple(rng.randrange(1 << bits) for _ in range(dimension)), bits)
        nearest = min(q.squared_distance(p) for p in points)
        assert _nearest_by_shifts(points, q) <= c * c * nearest


def _grid_distance(value, side):
    offset = value % side
    return min(offset, side - offset)


def central_shift_exists(p, level):
    """Some p + v^(j) sits 1/(2d+2) of a cell side from every face of its grid cell, one unit of slack"""
    side = 1 << (p.bits - level)
    margin = 2 * p.dimension + 2
    for j in range(p.dimension + 1):
        shifted = shift(p, j)
        if all(_grid_distance(value, side) * margin >= side - margin for value in shifted.coords):
            return True
    return False


@pytest.mark.parametrize('dimension', [2, 4])
def test_some_shift_is_central_in_even_dimensions(rng, dimension):
    bits = 16
    for _ in range(200):
        p = Point(tuple(rng.randrange(1 << bits) for _ in range(dimension)), bits)
        for level in range(bits):
            assert central_shift_exists(p, level)


@pytest.mark.parametrize('dimension', [1, 3])
def test_centrality_can_fail_in_odd_dimensions(dimension):
    origin = Point((0,) * dimension, 16)
    assert central_shift_exists(origin, 0)
    # every offset is a multiple of the cell side once 2^level shares a factor with d+1
    assert not central_shift_exists(origin, 2)
