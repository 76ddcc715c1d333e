"""Generalized van Emde Boas tree over a universe [N] with colored elements.

An element is a pair (key, color). Each recursive node keeps the minimum and
maximum key of every color it holds, packed into two `RankIndex` words, and
stores the remaining elements of a color in `bottom[key >> half]`; `top`
records which buckets hold which colors. Universes of at most 64 keys are a
single bitset word per color.
"""
import logging
from typing import Iterator, List, Optional, Tuple

from retrospace.exceptions import (
    DuplicateElementError, MissingElementError, PreconditionError, StructureInconsistencyError
)
from retrospace.services.counters import OperationCounters

logger = logging.getLogger(__name__)

BASE_BITS = 6
MAX_COLORS = 64

Element = Tuple[int, int]


def universe_bits_for(size: int) -> int:
    """Bits of the smallest universe 2^(2^l) >= size (at least 16 keys)"""
    bits = 4
    while (1 << bits) < size:
        bits *= 2
    return bits


def iter_bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of mask, ascending"""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class RankIndex:
    """Array indexed by color, packed into one word of (bits+2)-bit fields.

    Field c holds A[c] + 1, so the "absent" sentinels -1 and N+1 fit; the top
    bit of each field is a guard that absorbs the borrow of a packed
    subtraction, which makes `report` a constant number of word operations.
    """

    __slots__ = ('bits', 'width', 'absent', 'ones', 'guards', 'packed', 'values')

    def __init__(self, bits: int, num_colors: int, absent: int):
        self.bits = bits
        self.width = bits + 2
        self.absent = absent
        self.ones = sum(1 << (c * self.width) for c in range(num_colors))
        self.guards = self.ones << (self.width - 1)
        self.packed = absent * self.ones
        self.values = {}

    def _stored(self, color: int) -> int:
        value = self.values.get(color)
        return self.absent if value is None else value + 1

    def set(self, color: int, value: int):
        old = self._stored(color)
        self.values[color] = value
        self.packed += (value + 1 - old) << (color * self.width)

    def clear(self, color: int):
        old = self._stored(color)
        self.values.pop(color, None)
        self.packed += (self.absent - old) << (color * self.width)

    def get(self, color: int) -> Optional[int]:
        return self.values.get(color)

    def report(self, i: int, j: int) -> int:
        """Mask of colors c with i <= A[c] <= j"""
        i = max(i, 0)
        j = min(j, (1 << self.bits) - 1)
        if i > j:
            return 0
        at_least = ((self.packed | self.guards) - (i + 1) * self.ones) & self.guards
        at_most = (((j + 1) * self.ones | self.guards) - self.packed) & self.guards
        hits = at_least & at_most
        mask = 0
        for position in iter_bits(hits):
            mask |= 1 << (position // self.width)
        return mask


def rank_report(index: RankIndex, i: int, j: int) -> int:
    """{c : i <= A[c] <= j} as a color mask"""
    return index.report(i, j)


class _WordNode:
    """Universe of at most 64 keys: one bitset word per color"""

    __slots__ = ('bits', 'words', 'present')

    def __init__(self, bits: int):
        self.bits = bits
        self.words = {}
        self.present = 0

    def insert(self, key: int, color: int):
        word = self.words.get(color, 0)
        if (word >> key) & 1:
            raise DuplicateElementError((key, color))
        self.words[color] = word | (1 << key)
        self.present |= 1 << color

    def delete(self, key: int, color: int):
        word = self.words.get(color, 0)
        if not (word >> key) & 1:
            raise MissingElementError((key, color))
        word &= ~(1 << key)
        if word:
            self.words[color] = word
        else:
            del self.words[color]
            self.present &= ~(1 << color)

    def min_key(self, color: int) -> int:
        word = self.words[color]
        return (word & -word).bit_length() - 1

    def max_key(self, color: int) -> int:
        return self.words[color].bit_length() - 1

    def min_of(self, colors: int) -> Optional[Element]:
        best = None
        for color in iter_bits(colors & self.present):
            key = self.min_key(color)
            if best is None or key < best[0]:
                best = (key, color)
        return best

    def max_of(self, colors: int) -> Optional[Element]:
        best = None
        for color in iter_bits(colors & self.present):
            key = self.max_key(color)
            if best is None or key >= best[0]:
                best = (key, color)
        return best

    def colors_with_max_at_least(self, low: int) -> int:
        mask = 0
        for color in iter_bits(self.present):
            if self.words[color] >> low:
                mask |= 1 << color
        return mask

    def colors_with_min_at_most(self, high: int) -> int:
        mask = 0
        keep = (2 << high) - 1
        for color in iter_bits(self.present):
            if self.words[color] & keep:
                mask |= 1 << color
        return mask

    def find(self, key: int, colors: int, counters: OperationCounters) -> Optional[Element]:
        counters.gveb_levels += 1
        if key >= (1 << self.bits):
            return None
        key = max(key, 0)
        best = None
        for color in iter_bits(colors & self.present):
            word = self.words[color] >> key
            if word:
                found = key + (word & -word).bit_length() - 1
                if best is None or found < best[0]:
                    best = (found, color)
        return best

    def find_prev(self, key: int, colors: int, counters: OperationCounters) -> Optional[Element]:
        counters.gveb_levels += 1
        if key < 0:
            return None
        key = min(key, (1 << self.bits) - 1)
        keep = (2 << key) - 1
        best = None
        for color in iter_bits(colors & self.present):
            word = self.words[color] & keep
            if word:
                found = word.bit_length() - 1
                if best is None or found >= best[0]:
                    best = (found, color)
        return best

    def reportany(self, i: int, j: int, colors: int, out: List[Element], base: int,
                  counters: OperationCounters) -> int:
        counters.gveb_levels += 1
        i = max(i, 0)
        j = min(j, (1 << self.bits) - 1)
        if i > j:
            return 0
        window = ((2 << j) - 1) & ~((1 << i) - 1)
        found = 0
        for color in iter_bits(colors & self.present):
            word = self.words[color] & window
            if word:
                out.append((base + (word & -word).bit_length() - 1, color))
                found |= 1 << color
        return found

    def elements(self, base: int) -> Iterator[Element]:
        for color, word in self.words.items():
            for key in iter_bits(word):
                yield base + key, color

    def audit(self, num_colors: int):
        mask = 0
        for color, word in self.words.items():
            if not word or color >= num_colors or word >> (1 << self.bits):
                raise StructureInconsistencyError(f'bad word for color {color}')
            mask |= 1 << color
        if mask != self.present:
            raise StructureInconsistencyError('present mask out of sync with words')


class _RecursiveNode:
    """Universe 2^bits split into 2^half buckets of 2^half keys"""

    __slots__ = ('bits', 'half', 'low_mask', 'num_colors', 'mins', 'maxs',
                 'min_rank', 'max_rank', 'present', 'top', 'bottom')

    def __init__(self, bits: int, num_colors: int):
        self.bits = bits
        self.half = bits // 2
        self.low_mask = (1 << self.half) - 1
        self.num_colors = num_colors
        self.mins = {}
        self.maxs = {}
        self.min_rank = RankIndex(bits, num_colors, absent=(1 << bits) + 1)
        self.max_rank = RankIndex(bits, num_colors, absent=0)
        self.present = 0
        self.top = None
        self.bottom = {}

    def _make_child(self):
        if self.half <= BASE_BITS:
            return _WordNode(self.half)
        return _RecursiveNode(self.half, self.num_colors)

    def _set_min(self, color: int, key: int):
        self.mins[color] = key
        self.min_rank.set(color, key)

    def _set_max(self, color: int, key: int):
        self.maxs[color] = key
        self.max_rank.set(color, key)

    def insert(self, key: int, color: int):
        bit = 1 << color
        if not self.present & bit:
            self._set_min(color, key)
            self._set_max(color, key)
            self.present |= bit
            return
        low, high = self.mins[color], self.maxs[color]
        if key == low or key == high:
            raise DuplicateElementError((key, color))
        if low == high:
            if key < low:
                self._set_min(color, key)
            else:
                self._set_max(color, key)
            return
        if key < low:
            self._set_min(color, key)
            key = low
        elif key > high:
            self._set_max(color, key)
            key = high
        self._insert_below(key, color)

    def _insert_below(self, key: int, color: int):
        bucket, low = key >> self.half, key & self.low_mask
        sub = self.bottom.get(bucket)
        if sub is None:
            sub = self.bottom[bucket] = self._make_child()
        if not sub.present & (1 << color):
            if self.top is None:
                self.top = self._make_child()
            self.top.insert(bucket, color)
        sub.insert(low, color)

    def _delete_below(self, bucket: int, low: int, color: int):
        sub = self.bottom[bucket]
        sub.delete(low, color)
        if not sub.present & (1 << color):
            self.top.delete(bucket, color)
            if not self.top.present:
                self.top = None
        if not sub.present:
            del self.bottom[bucket]

    def delete(self, key: int, color: int):
        bit = 1 << color
        if not self.present & bit:
            raise MissingElementError((key, color))
        low, high = self.mins[color], self.maxs[color]
        if low == high:
            if key != low:
                raise MissingElementError((key, color))
            del self.mins[color]
            del self.maxs[color]
            self.min_rank.clear(color)
            self.max_rank.clear(color)
            self.present &= ~bit
            return
        below = self.top is not None and self.top.present & bit
        if key == low:
            if below:
                bucket = self.top.min_key(color)
                sub_key = self.bottom[bucket].min_key(color)
                self._delete_below(bucket, sub_key, color)
                self._set_min(color, (bucket << self.half) | sub_key)
            else:
                self._set_min(color, high)
            return
        if key == high:
            if below:
                bucket = self.top.max_key(color)
                sub_key = self.bottom[bucket].max_key(color)
                self._delete_below(bucket, sub_key, color)
                self._set_max(color, (bucket << self.half) | sub_key)
            else:
                self._set_max(color, low)
            return
        if key < low or key > high:
            raise MissingElementError((key, color))
        bucket = key >> self.half
        sub = self.bottom.get(bucket)
        if sub is None or not sub.present & bit:
            raise MissingElementError((key, color))
        self._delete_below(bucket, key & self.low_mask, color)

    def min_key(self, color: int) -> int:
        return self.mins[color]

    def max_key(self, color: int) -> int:
        return self.maxs[color]

    def min_of(self, colors: int) -> Optional[Element]:
        best = None
        for color in iter_bits(colors & self.present):
            key = self.mins[color]
            if best is None or key < best[0]:
                best = (key, color)
        return best

    def max_of(self, colors: int) -> Optional[Element]:
        best = None
        for color in iter_bits(colors & self.present):
            key = self.maxs[color]
            if best is None or key >= best[0]:
                best = (key, color)
        return best

    def colors_with_max_at_least(self, low: int) -> int:
        return self.max_rank.report(low, (1 << self.bits) - 1)

    def colors_with_min_at_most(self, high: int) -> int:
        return self.min_rank.report(0, high)

    def find(self, key: int, colors: int, counters: OperationCounters) -> Optional[Element]:
        counters.gveb_levels += 1
        colors &= self.present
        last = (1 << self.bits) - 1
        if not colors or key > last:
            return None
        if key <= 0:
            return self.min_of(colors)
        min_ok = self.min_rank.report(key, last) & colors
        max_ok = self.max_rank.report(key, last) & colors & ~min_ok
        best = None
        for color in iter_bits(min_ok):
            candidate = (self.mins[color], color)
            if best is None or candidate < best:
                best = candidate
        for color in iter_bits(max_ok):
            candidate = (self.maxs[color], color)
            if best is None or candidate < best:
                best = candidate
        # colors with min < key <= max may continue inside the buckets
        if max_ok and self.top is not None:
            candidate = self._find_below(key, max_ok, counters)
            if candidate is not None and (best is None or candidate < best):
                best = candidate
        return best

    def _find_below(self, key: int, colors: int, counters: OperationCounters) -> Optional[Element]:
        bucket, low = key >> self.half, key & self.low_mask
        sub = self.bottom.get(bucket)
        if sub is not None and sub.colors_with_max_at_least(low) & colors:
            found = sub.find(low, colors, counters)
            return (bucket << self.half) | found[0], found[1]
        if bucket + 1 > self.low_mask:
            return None
        following = self.top.find(bucket + 1, colors, counters)
        if following is None:
            return None
        bucket = following[0]
        found = self.bottom[bucket].min_of(colors)
        return (bucket << self.half) | found[0], found[1]

    def find_prev(self, key: int, colors: int, counters: OperationCounters) -> Optional[Element]:
        counters.gveb_levels += 1
        colors &= self.present
        last = (1 << self.bits) - 1
        if not colors or key < 0:
            return None
        if key >= last:
            return self.max_of(colors)
        max_ok = self.max_rank.report(0, key) & colors
        min_ok = self.min_rank.report(0, key) & colors & ~max_ok
        best = None
        for color in iter_bits(max_ok):
            candidate = (self.maxs[color], color)
            if best is None or candidate > best:
                best = candidate
        for color in iter_bits(min_ok):
            candidate = (self.mins[color], color)
            if best is None or candidate > best:
                best = candidate
        if min_ok and self.top is not None:
            candidate = self._find_prev_below(key, min_ok, counters)
            if candidate is not None and (best is None or candidate > best):
                best = candidate
        return best

    def _find_prev_below(self, key: int, colors: int, counters: OperationCounters) -> Optional[Element]:
        bucket, low = key >> self.half, key & self.low_mask
        sub = self.bottom.get(bucket)
        if sub is not None and sub.colors_with_min_at_most(low) & colors:
            found = sub.find_prev(low, colors, counters)
            return (bucket << self.half) | found[0], found[1]
        if bucket == 0:
            return None
        preceding = self.top.find_prev(bucket - 1, colors, counters)
        if preceding is None:
            return None
        bucket = preceding[0]
        found = self.bottom[bucket].max_of(colors)
        return (bucket << self.half) | found[0], found[1]

    def reportany(self, i: int, j: int, colors: int, out: List[Element], base: int,
                  counters: OperationCounters) -> int:
        counters.gveb_levels += 1
        last = (1 << self.bits) - 1
        i = max(i, 0)
        j = min(j, last)
        colors &= self.present
        if not colors or i > j:
            return 0
        found = self.min_rank.report(i, j) & colors
        for color in iter_bits(found):
            out.append((base + self.mins[color], color))
        colors &= ~found
        hits = self.max_rank.report(i, j) & colors
        for color in iter_bits(hits):
            out.append((base + self.maxs[color], color))
        found |= hits
        colors &= ~hits
        # what is left can only sit strictly inside the buckets
        colors &= self.min_rank.report(0, i - 1) & self.max_rank.report(j + 1, last)
        if not colors or self.top is None:
            return found
        first, first_low = i >> self.half, i & self.low_mask
        final, final_low = j >> self.half, j & self.low_mask
        if first == final:
            sub = self.bottom.get(first)
            if sub is not None:
                found |= sub.reportany(first_low, final_low, colors, out,
                                       base + (first << self.half), counters)
            return found
        sub = self.bottom.get(first)
        if sub is not None:
            hits = sub.reportany(first_low, self.low_mask, colors, out,
                                 base + (first << self.half), counters)
            found |= hits
            colors &= ~hits
        if colors and first + 1 <= final - 1:
            buckets = []
            hits = self.top.reportany(first + 1, final - 1, colors, buckets, 0, counters)
            for bucket, color in buckets:
                key = (bucket << self.half) | self.bottom[bucket].min_key(color)
                out.append((base + key, color))
            found |= hits
            colors &= ~hits
        sub = self.bottom.get(final)
        if colors and sub is not None:
            found |= sub.reportany(0, final_low, colors, out,
                                   base + (final << self.half), counters)
        return found

    def elements(self, base: int) -> Iterator[Element]:
        for color in iter_bits(self.present):
            yield base + self.mins[color], color
            if self.maxs[color] != self.mins[color]:
                yield base + self.maxs[color], color
        for bucket, sub in self.bottom.items():
            yield from sub.elements(base + (bucket << self.half))

    def audit(self, num_colors: int):
        for color in iter_bits(self.present):
            if color >= num_colors or self.mins[color] > self.maxs[color]:
                raise StructureInconsistencyError(f'bad min/max for color {color}')
            if self.min_rank.get(color) != self.mins[color] or self.max_rank.get(color) != self.maxs[color]:
                raise StructureInconsistencyError(f'rank index out of sync for color {color}')
        if set(self.mins) != set(iter_bits(self.present)):
            raise StructureInconsistencyError('min array out of sync with present mask')
        top_elements = set(self.top.elements(0)) if self.top is not None else set()
        expected = set()
        for bucket, sub in self.bottom.items():
            if not sub.present:
                raise StructureInconsistencyError(f'empty bucket {bucket} kept')
            sub.audit(num_colors)
            for color in iter_bits(sub.present):
                expected.add((bucket, color))
            for key, color in sub.elements(bucket << self.half):
                if not self.mins[color] < key < self.maxs[color]:
                    raise StructureInconsistencyError(f'element {(key, color)} outside its min/max')
        if top_elements != expected:
            raise StructureInconsistencyError('top summary does not match bucket colors')
        if self.top is not None:
            self.top.audit(num_colors)


class Gveb:
    """Colored successor structure with reportany/report over [0, universe)"""

    def __init__(self, universe: int, num_colors: int = MAX_COLORS, counters: Optional[OperationCounters] = None):
        if not 1 <= num_colors <= MAX_COLORS:
            raise PreconditionError(f'color alphabet must have 1..{MAX_COLORS} colors')
        self.bits = universe_bits_for(universe)
        self.universe = 1 << self.bits
        self.num_colors = num_colors
        self.counters = counters if counters is not None else OperationCounters()
        if self.bits <= BASE_BITS:
            self.root = _WordNode(self.bits)
        else:
            self.root = _RecursiveNode(self.bits, num_colors)
        logger.debug(f'gveb over 2^{self.bits} keys, {num_colors} colors')
        self._next = {}
        self._prev = {}

    def _check(self, key: int, color: int):
        if not 0 <= key < self.universe:
            raise PreconditionError(f'key {key} outside universe [0, {self.universe})')
        if not 0 <= color < self.num_colors:
            raise PreconditionError(f'color {color} outside alphabet of {self.num_colors}')

    def __len__(self):
        return len(self._next)

    def __contains__(self, element: Element) -> bool:
        return element in self._next

    @property
    def colors(self) -> int:
        """Mask of colors with at least one element"""
        return self.root.present

    def insert(self, key: int, color: int):
        """Add (key, color) and splice it into the color's linked list"""
        self._check(key, color)
        self.root.insert(key, color)
        bit = 1 << color
        before = self.root.find_prev(key - 1, bit, self.counters)
        after = self.root.find(key + 1, bit, self.counters)
        prev_key = before[0] if before is not None else None
        next_key = after[0] if after is not None else None
        self._prev[(key, color)] = prev_key
        self._next[(key, color)] = next_key
        if prev_key is not None:
            self._next[(prev_key, color)] = key
        if next_key is not None:
            self._prev[(next_key, color)] = key

    def delete(self, key: int, color: int):
        """Remove (key, color)"""
        self._check(key, color)
        self.root.delete(key, color)
        prev_key = self._prev.pop((key, color))
        next_key = self._next.pop((key, color))
        if prev_key is not None:
            self._next[(prev_key, color)] = next_key
        if next_key is not None:
            self._prev[(next_key, color)] = prev_key

    def find(self, key: int, colors: int) -> Optional[Element]:
        """Smallest (key', color) with key' >= key and color in colors"""
        if not colors:
            return None
        return self.root.find(key, colors, self.counters)

    def find_prev(self, key: int, colors: int) -> Optional[Element]:
        """Largest (key', color) with key' <= key and color in colors"""
        if not colors:
            return None
        return self.root.find_prev(key, colors, self.counters)

    def reportany(self, i: int, j: int, colors: int) -> List[Element]:
        """One element in [i, j] for every color of `colors` that has one"""
        out = []
        if colors and i <= j:
            self.root.reportany(i, j, colors, out, 0, self.counters)
        return out

    def report(self, i: int, j: int, colors: int) -> List[Element]:
        """Every element in [i, j] with a color in `colors`, each once"""
        out = []
        for key, color in self.reportany(i, j, colors):
            out.append((key, color))
            walk = self._prev[(key, color)]
            while walk is not None and walk >= i:
                out.append((walk, color))
                walk = self._prev[(walk, color)]
            walk = self._next[(key, color)]
            while walk is not None and walk <= j:
                out.append((walk, color))
                walk = self._next[(walk, color)]
        return out

    def items(self) -> List[Element]:
        """All elements sorted by (key, color)"""
        return sorted(self._next)

    def audit(self):
        """Check every structural invariant; raises StructureInconsistencyError"""
        self.root.audit(self.num_colors)
        stored = sorted(self.root.elements(0))
        if stored != sorted(self._next):
            raise StructureInconsistencyError('linked pointers disagree with stored elements')
        by_color = {}
        for key, color in stored:
            by_color.setdefault(color, []).append(key)
        for color, keys in by_color.items():
            for index, key in enumerate(keys):
                prev_key = keys[index - 1] if index > 0 else None
                next_key = keys[index + 1] if index + 1 < len(keys) else None
                if self._prev[(key, color)] != prev_key or self._next[(key, color)] != next_key:
                    raise StructureInconsistencyError(f'broken color list at {(key, color)}')

    def __repr__(self):
        return f'<Gveb N=2^{self.bits} colors={self.num_colors} size={len(self)}>'
