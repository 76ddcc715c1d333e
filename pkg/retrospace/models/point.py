import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from retrospace.exceptions import InvalidPointError

MAX_DIMENSION = 8


@dataclass(frozen=True)
class Point:
    """A point of [0,1)^d stored as d unsigned fixed-point coordinates of `bits` bits"""

    coords: Tuple[int, ...]
    bits: int

    def __post_init__(self):
        if not 1 <= len(self.coords) <= MAX_DIMENSION:
            raise InvalidPointError(f'dimension must be in [1, {MAX_DIMENSION}], got {len(self.coords)}')
        limit = 1 << self.bits
        for value in self.coords:
            if not isinstance(value, int) or not 0 <= value < limit:
                raise InvalidPointError(f'coordinate {value!r} is not an integer in [0, 2^{self.bits})')

    @classmethod
    def from_unit(cls, values: Sequence[float], bits: int) -> 'Point':
        """Quantize reals in [0,1) to `bits`-bit fixed point by floor"""
        coords = []
        for value in values:
            if not 0.0 <= value < 1.0:
                raise InvalidPointError(f'coordinate {value!r} is outside [0, 1)')
            coords.append(math.floor(value * (1 << bits)))
        return cls(tuple(coords), bits)

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def to_unit(self) -> Tuple[float, ...]:
        """Coordinates as reals in unit-cube terms"""
        scale = float(1 << self.bits)
        return tuple(value / scale for value in self.coords)

    def squared_distance(self, other: 'Point') -> int:
        """Exact squared Euclidean distance in fixed-point units"""
        return sum((a - b) * (a - b) for a, b in zip(self.coords, other.coords))

    def to_dict(self):
        """Convert point to dictionary"""
        return {
            'coords': list(self.coords),
            'bits': self.bits,
            'unit': list(self.to_unit())
        }

    def __repr__(self):
        return f'<Point {self.coords} w={self.bits}>'


@dataclass(frozen=True)
class QuadCell:
    """A dyadic quadtree cell: `level` fixed high-order bits per coordinate"""

    anchor: Point
    level: int

    def __post_init__(self):
        if not 0 <= self.level <= self.anchor.bits:
            raise InvalidPointError(f'cell level {self.level} outside [0, {self.anchor.bits}]')
        low = self.free_bits
        for value in self.anchor.coords:
            if value & ((1 << low) - 1):
                raise InvalidPointError(f'anchor {self.anchor.coords} has nonzero low {low} bits')

    @classmethod
    def around(cls, p: Point, level: int) -> 'QuadCell':
        """The level-`level` cell containing p"""
        low = p.bits - level
        anchor = Point(tuple((value >> low) << low for value in p.coords), p.bits)
        return cls(anchor, level)

    @property
    def free_bits(self) -> int:
        return self.anchor.bits - self.level

    def bounds(self) -> Tuple[Tuple[int, int], ...]:
        """Inclusive integer range per axis"""
        span = (1 << self.free_bits) - 1
        return tuple((value, value + span) for value in self.anchor.coords)

    def contains(self, p: Point) -> bool:
        low = self.free_bits
        return all((a >> low) == (b >> low) for a, b in zip(self.anchor.coords, p.coords))

    def child_index(self, p: Point) -> int:
        """Quadrant of p inside this cell, numbered in z-order (first axis most significant)"""
        bit = self.free_bits - 1
        index = 0
        for value in p.coords:
            index = (index << 1) | ((value >> bit) & 1)
        return index

    def __repr__(self):
        return f'<QuadCell {self.anchor.coords} level={self.level}>'
