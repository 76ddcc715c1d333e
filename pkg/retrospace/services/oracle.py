"""Brute-force reference answers.

Nothing here reuses the z-order or distance code of the main structures, so
agreement between the two is evidence rather than a tautology.
"""
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

from retrospace.exceptions import DuplicateElementError, MissingElementError
from retrospace.models import Point
from retrospace.models.lifespan import Timestamp

Hit = Tuple[Point, int]


def _distance_squared(a: Tuple[int, ...], b: Tuple[int, ...]) -> int:
    total = 0
    for x, y in zip(a, b):
        total += (x - y) ** 2
    return total


def _radius_squared(r, bits: int) -> Fraction:
    return (Fraction(r) * (2 ** bits)) ** 2


def ref_shuffle(coords: Tuple[int, ...], bits: int) -> int:
    """Interleave via binary strings, first axis leading at every bit level"""
    digits = [format(value, f'0{bits}b') for value in coords]
    return int(''.join(''.join(column) for column in zip(*digits)), 2)


def ref_shift(p: Point, j: int) -> Tuple[Tuple[int, ...], int]:
    d = len(p.coords)
    offset = j * (2 ** p.bits) // (d + 1)
    if j == 0:
        return p.coords, p.bits
    return tuple(value + offset for value in p.coords), p.bits + 1


def ref_z_sort(points: Iterable[Point], j: int = 0) -> List[Point]:
    """Sort points by their materialized shuffle key after shifting by v^(j)"""
    def key(p: Point) -> int:
        coords, bits = ref_shift(p, j)
        return ref_shuffle(coords, bits)
    return sorted(points, key=key)


class NaiveTimeline:
    """A flat list of lifespans answered by linear scans"""

    def __init__(self):
        self._entries: Dict[int, Tuple[Point, Timestamp, Timestamp]] = {}

    def __len__(self):
        return len(self._entries)

    def add(self, p: Point, t_start: Timestamp, t_end: Timestamp, handle: int):
        if handle in self._entries:
            raise DuplicateElementError(handle)
        self._entries[handle] = (p, t_start, t_end)

    def remove(self, handle: int):
        if handle not in self._entries:
            raise MissingElementError(handle)
        del self._entries[handle]

    def alive_at(self, t: Timestamp) -> List[Hit]:
        return [(p, handle) for handle, (p, start, end) in sorted(self._entries.items()) if start <= t < end]

    def exact_range(self, q: Point, r, t: Timestamp) -> List[Hit]:
        """Alive points within distance r (unit-cube terms) of q"""
        limit = _radius_squared(r, q.bits)
        return [(p, handle) for p, handle in self.alive_at(t) if _distance_squared(p.coords, q.coords) <= limit]

    def exact_nn(self, q: Point, t: Timestamp) -> Optional[Hit]:
        """Nearest alive point, ties broken by the smaller handle"""
        alive = self.alive_at(t)
        if not alive:
            return None
        return min(alive, key=lambda hit: (_distance_squared(hit[0].coords, q.coords), hit[1]))

    # -- contract checks -----------------------------------------------------

    def range_ok(self, hits: List[Hit], q: Point, r, eps, t: Timestamp) -> bool:
        """Every alive point within r is reported, nothing beyond (1+eps)*r or dead"""
        reported = {handle for _, handle in hits}
        if len(reported) != len(hits):
            return False
        if not {handle for _, handle in self.exact_range(q, r, t)} <= reported:
            return False
        return reported <= {handle for _, handle in self.exact_range(q, Fraction(r) * (1 + Fraction(eps)), t)}

    def empty_ok(self, hit: Optional[Hit], q: Point, r, eps, t: Timestamp) -> bool:
        if hit is None:
            return not self.exact_range(q, r, t)
        outer = {handle for _, handle in self.exact_range(q, Fraction(r) * (1 + Fraction(eps)), t)}
        return hit[1] in outer

    def ann_ok(self, hit: Optional[Hit], q: Point, eps, t: Timestamp) -> bool:
        """Returned distance <= (1+eps) * nearest distance, compared on squares"""
        nearest = self.exact_nn(q, t)
        if nearest is None or hit is None:
            return nearest is None and hit is None
        point, handle = hit
        entry = self._entries.get(handle)
        if entry is None or entry[0] != point or not entry[1] <= t < entry[2]:
            return False
        found = _distance_squared(point.coords, q.coords)
        best = _distance_squared(nearest[0].coords, q.coords)
        return found <= (1 + Fraction(eps)) ** 2 * best
