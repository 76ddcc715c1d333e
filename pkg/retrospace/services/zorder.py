"""Z-order (shuffle order) over fixed-point points.

Comparisons never materialize the interleaved key: `z_less` finds the axis whose
XOR difference has the highest set bit, using only comparison and XOR.
"""
import math
from functools import total_ordering
from typing import Tuple

from retrospace.models import Point, QuadCell


def shuffle(p: Point) -> int:
    """Bit-interleave the coordinates, first axis most significant at every bit level"""
    key = 0
    for bit in range(p.bits - 1, -1, -1):
        for value in p.coords:
            key = (key << 1) | ((value >> bit) & 1)
    return key


def msb_less(x: int, y: int) -> bool:
    """floor(log2 x) < floor(log2 y), with floor(log2 0) = -1"""
    if x > y:
        return False
    return x < (x ^ y)


def z_less(p: Point, q: Point) -> bool:
    """True iff shuffle(p) < shuffle(q), in O(d) word operations"""
    return _coords_z_less(p.coords, q.coords)


def _coords_z_less(a: Tuple[int, ...], b: Tuple[int, ...]) -> bool:
    axis = 0
    widest = a[0] ^ b[0]
    for i in range(1, len(a)):
        diff = a[i] ^ b[i]
        if msb_less(widest, diff):
            axis = i
            widest = diff
    return a[axis] < b[axis]


def shift_offset(j: int, dimension: int, bits: int) -> int:
    """Fixed-point value of every coordinate of v^(j)"""
    if not 0 <= j <= dimension:
        raise ValueError(f'shift index {j} outside [0, {dimension}]')
    return (j << bits) // (dimension + 1)


def shift(p: Point, j: int) -> Point:
    """p + v^(j); shifted copies use one extra bit so nothing wraps around"""
    if j == 0:
        return p
    offset = shift_offset(j, p.dimension, p.bits)
    return Point(tuple(value + offset for value in p.coords), p.bits + 1)


def cell_interval(cell: QuadCell) -> Tuple[int, int]:
    """Smallest and largest shuffle key of any point inside the cell"""
    low = shuffle(cell.anchor)
    free = cell.anchor.dimension * cell.free_bits
    return low, low | ((1 << free) - 1)


def c_constant(dimension: int) -> float:
    """Approximation factor of the shifted z-order candidate set"""
    if dimension < 1:
        raise ValueError('dimension must be at least 1')
    return math.sqrt(dimension) * (4 * dimension + 4) + 1


@total_ordering
class ZOrderKey:
    """Orderable wrapper that compares points lazily in z-order"""

    __slots__ = ('point', 'coords')

    def __init__(self, point: Point):
        self.point = point
        self.coords = point.coords

    def __eq__(self, other):
        if not isinstance(other, ZOrderKey):
            return NotImplemented
        return self.coords == other.coords

    def __lt__(self, other):
        if not isinstance(other, ZOrderKey):
            return NotImplemented
        if self.coords == other.coords:
            return False
        return _coords_z_less(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f'<ZOrderKey {self.coords}>'
