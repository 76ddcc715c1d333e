"""Generalized union-split-find: an ordered catalog of colored elements.

Consecutive elements are grouped into blocks of Theta(B) elements. Each block
keeps a complete binary tree over its positions whose nodes hold the union of
the colors below them, plus one linked list per color through its colored
elements. Blocks carry order-maintenance labels, and a GVEB indexed by label
holds (label, c) for every color c present in a block, so a colored search
that leaves a block jumps straight to the next block having a wanted color.
Removal is lazy (tombstones) with a full rebuild once tombstones outnumber
live elements.
"""
import logging
import math
from typing import Any, Iterable, Iterator, List, Optional, Tuple

from retrospace.exceptions import (
    MissingElementError, PreconditionError, StructureInconsistencyError
)
from retrospace.services.counters import OperationCounters
from retrospace.services.gveb import Gveb, iter_bits, universe_bits_for
from retrospace.services.order_maintenance import OrderMaintenance

logger = logging.getLogger(__name__)

MIN_CAPACITY = 16


def lowest_color(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


class CatalogElement:
    """One catalog entry: an opaque payload plus its color mask"""

    __slots__ = ('item', 'colors', 'block', 'pos', 'deleted', 'links')

    def __init__(self, item: Any, colors: int = 0):
        self.item = item
        self.colors = colors
        self.block = None
        self.pos = 0
        self.deleted = False
        self.links = {}

    def __repr__(self):
        state = ' deleted' if self.deleted else ''
        return f'<CatalogElement {self.item!r} colors={self.colors:#x}{state}>'


class Block:
    """A run of consecutive elements with its color tree and color lists"""

    __slots__ = ('items', 'cap', 'masks', 'heads', 'tails', 'prev', 'next')

    def __init__(self, cap: int, items: Optional[List[CatalogElement]] = None):
        self.cap = cap
        self.items = items if items is not None else []
        self.masks = [0] * (2 * cap)
        self.heads = {}
        self.tails = {}
        self.prev = None
        self.next = None

    @property
    def mask(self) -> int:
        """Colors present anywhere in the block, C(r_b)"""
        return self.masks[1]

    def rebuild_tree(self):
        cap = self.cap
        masks = [0] * (2 * cap)
        for pos, element in enumerate(self.items):
            element.block = self
            element.pos = pos
            masks[cap + pos] = element.colors
        for node in range(cap - 1, 0, -1):
            masks[node] = masks[2 * node] | masks[2 * node + 1]
        self.masks = masks

    def rebuild_lists(self):
        self.heads = {}
        self.tails = {}
        for element in self.items:
            element.links = {}
            for color in iter_bits(element.colors):
                tail = self.tails.get(color)
                element.links[color] = [tail, None]
                if tail is None:
                    self.heads[color] = element
                else:
                    tail.links[color][1] = element
                self.tails[color] = element

    def insert_at(self, pos: int, element: CatalogElement) -> int:
        """Insert at pos and shift the later leaves; returns the tree slots rewritten"""
        items = self.items
        items.insert(pos, element)
        cap, masks = self.cap, self.masks
        for index in range(pos, len(items)):
            moved = items[index]
            moved.block = self
            moved.pos = index
            masks[cap + index] = moved.colors
        work = len(items) - pos
        low, high = (cap + pos) // 2, (cap + len(items) - 1) // 2
        while low:
            for node in range(low, high + 1):
                masks[node] = masks[2 * node] | masks[2 * node + 1]
            work += high - low + 1
            low, high = low // 2, high // 2
        return work

    def update_leaf(self, pos: int):
        node = self.cap + pos
        self.masks[node] = self.items[pos].colors
        node //= 2
        while node:
            self.masks[node] = self.masks[2 * node] | self.masks[2 * node + 1]
            node //= 2

    def first_from(self, pos: int, colors: int) -> Optional[CatalogElement]:
        """First element at position >= pos with a color in `colors`"""
        if pos >= len(self.items) or not self.masks[1] & colors:
            return None
        pos = max(pos, 0)
        masks = self.masks
        node = self.cap + pos
        if masks[node] & colors:
            return self.items[pos]
        while node > 1:
            if not node & 1 and masks[node + 1] & colors:
                node += 1
                while node < self.cap:
                    node = 2 * node if masks[2 * node] & colors else 2 * node + 1
                return self.items[node - self.cap]
            node //= 2
        return None

    def last_upto(self, pos: int, colors: int) -> Optional[CatalogElement]:
        """Last element at position <= pos with a color in `colors`"""
        if pos < 0 or not self.masks[1] & colors:
            return None
        pos = min(pos, len(self.items) - 1)
        masks = self.masks
        node = self.cap + pos
        if masks[node] & colors:
            return self.items[pos]
        while node > 1:
            if node & 1 and masks[node - 1] & colors:
                node -= 1
                while node < self.cap:
                    node = 2 * node + 1 if masks[2 * node + 1] & colors else 2 * node
                return self.items[node - self.cap]
            node //= 2
        return None

    def __repr__(self):
        return f'<Block {len(self.items)} items colors={self.mask:#x}>'


class GusfCatalog:
    """Ordered list of elements with colored FindNext/FindPrev/Report"""

    def __init__(self, num_colors: int = 64, color_cap: int = 2, block_size: Optional[int] = None,
                 min_block: int = 16, counters: Optional[OperationCounters] = None):
        self.num_colors = num_colors
        self.color_cap = color_cap
        self.min_block = min_block
        self._fixed_block = block_size
        self.counters = counters if counters is not None else OperationCounters()
        self.capacity = MIN_CAPACITY
        self.block_size = self._block_size_for(self.capacity)
        self.live = 0
        self.tombstones = 0
        self.first = None
        self.last = None
        self._reindex()

    @classmethod
    def from_sorted(cls, entries: Iterable[Tuple[Any, int]], **options) -> 'GusfCatalog':
        """Bulk-build from (item, color mask) pairs already in catalog order"""
        catalog = cls(**options)
        elements = []
        for item, colors in entries:
            catalog._check_colors(colors)
            elements.append(CatalogElement(item, colors))
        catalog.live = len(elements)
        catalog.capacity = catalog._capacity_for(len(elements))
        catalog._layout(elements)
        return catalog

    def _block_size_for(self, capacity: int) -> int:
        if self._fixed_block is not None:
            return self._fixed_block
        return max(self.min_block, math.ceil(math.log2(capacity)) ** 2)

    @staticmethod
    def _capacity_for(count: int) -> int:
        capacity = MIN_CAPACITY
        while capacity < count:
            capacity *= 2
        return capacity

    def _block_cap(self) -> int:
        cap = 1
        while cap < 2 * self.block_size + 1:
            cap *= 2
        return cap

    def _check_colors(self, colors: int):
        if colors >> self.num_colors:
            raise PreconditionError(f'color mask {colors:#x} outside alphabet of {self.num_colors}')
        if bin(colors).count('1') > self.color_cap:
            raise PreconditionError(f'more than {self.color_cap} colors on one element')

    def __len__(self):
        return self.live

    def __iter__(self) -> Iterator[CatalogElement]:
        block = self.first
        while block is not None:
            for element in block.items:
                if not element.deleted:
                    yield element
            block = block.next

    def blocks(self) -> Iterator[Block]:
        block = self.first
        while block is not None:
            yield block
            block = block.next

    # -- block index ---------------------------------------------------------

    def _label_universe(self, block_count: int) -> int:
        return 1 << universe_bits_for(max(16, 4 * (block_count + 1)))

    def _reindex(self):
        blocks = list(self.blocks())
        universe = self._label_universe(len(blocks))
        self._order = OrderMaintenance(universe, self.counters)
        self._order.append_evenly(blocks)
        self._index = Gveb(universe, self.num_colors, self.counters)
        self._by_label = {}
        for block in blocks:
            label = self._order.label(block)
            self._by_label[label] = block
            for color in iter_bits(block.mask):
                self._index.insert(label, color)

    def _sync_index(self, block: Block, old_mask: int):
        new_mask = block.mask
        if new_mask == old_mask:
            return
        label = self._order.label(block)
        for color in iter_bits(old_mask & ~new_mask):
            self._index.delete(label, color)
        for color in iter_bits(new_mask & ~old_mask):
            self._index.insert(label, color)

    def _register_block(self, anchor: Optional[Block], block: Block):
        if 2 * (len(self._order) + 1) > self._order.universe:
            # grow the label universe; `block` is already linked into the list
            self._reindex()
            return
        relabeled = self._order.insert_after(anchor, block)
        for moved, old_label in relabeled:
            for color in iter_bits(moved.mask):
                self._index.delete(old_label, color)
            del self._by_label[old_label]
        for moved, _ in relabeled:
            label = self._order.label(moved)
            self._by_label[label] = moved
            for color in iter_bits(moved.mask):
                self._index.insert(label, color)
        label = self._order.label(block)
        self._by_label[label] = block
        for color in iter_bits(block.mask):
            self._index.insert(label, color)

    def label_of(self, block: Block) -> int:
        return self._order.label(block)

    def order_key(self, element: CatalogElement) -> Tuple[int, int]:
        """Comparable position of an element in list order"""
        return self._order.label(element.block), element.pos

    # -- layout and rebuilding ----------------------------------------------

    def _layout(self, elements: List[CatalogElement]):
        self.block_size = self._block_size_for(self.capacity)
        size = self.block_size
        chunks = [elements[i:i + size] for i in range(0, len(elements), size)]
        if len(chunks) > 1 and len(chunks[-1]) < size / 2:
            tail = chunks.pop()
            chunks[-1] = chunks[-1] + tail
        cap = self._block_cap()
        self.first = self.last = None
        previous = None
        for chunk in chunks:
            block = Block(cap, chunk)
            block.rebuild_tree()
            block.rebuild_lists()
            block.prev = previous
            if previous is None:
                self.first = block
            else:
                previous.next = block
            previous = block
        self.last = previous
        self.tombstones = 0
        self._reindex()

    def rebuild(self):
        """Drop tombstones and re-chunk every live element"""
        elements = list(self)
        self.counters.rebuilds += 1
        self.counters.rebuild_work += len(elements)
        logger.debug(f'rebuilding catalog of {len(elements)} elements (capacity {self.capacity})')
        self._layout(elements)

    def _check_capacity(self):
        capacity = self.capacity
        while self.live > capacity:
            capacity *= 2
        while capacity > MIN_CAPACITY and self.live < capacity // 4:
            capacity //= 2
        if capacity != self.capacity:
            self.capacity = capacity
            self.rebuild()

    def _split(self, block: Block):
        old_mask = block.mask
        middle = len(block.items) // 2
        fresh = Block(block.cap, block.items[middle:])
        block.items = block.items[:middle]
        fresh.prev = block
        fresh.next = block.next
        if block.next is not None:
            block.next.prev = fresh
        else:
            self.last = fresh
        block.next = fresh
        for part in (block, fresh):
            part.rebuild_tree()
            part.rebuild_lists()
        self._sync_index(block, old_mask)
        self._register_block(block, fresh)
        self.counters.block_splits += 1
        logger.debug(f'split block into {len(block.items)} + {len(fresh.items)}')

    # -- updates -------------------------------------------------------------

    def add(self, item: Any, after: Optional[CatalogElement] = None) -> CatalogElement:
        """Insert an unmarked element right after `after` (first when None)"""
        self.counters.catalog_ops += 1
        element = CatalogElement(item)
        if self.first is None:
            block = Block(self._block_cap(), [element])
            block.rebuild_tree()
            self.first = self.last = block
            self._register_block(None, block)
        else:
            if after is None:
                block, pos = self.first, 0
            else:
                if after.deleted or after.block is None:
                    raise MissingElementError(after)
                block, pos = after.block, after.pos + 1
            self.counters.block_work += block.insert_at(pos, element)
            if len(block.items) > 2 * self.block_size:
                self._split(block)
        self.live += 1
        self._check_capacity()
        return element

    def remove(self, element: CatalogElement):
        """Lazy deletion of an unmarked element"""
        self.counters.catalog_ops += 1
        if element.deleted or element.block is None:
            raise MissingElementError(element)
        if element.colors:
            raise PreconditionError('unmark an element before removing it')
        element.deleted = True
        self.live -= 1
        self.tombstones += 1
        if self.tombstones > self.live:
            self.rebuild()
        else:
            self._check_capacity()

    def mark(self, element: CatalogElement, color: int):
        """Add `color` to the element's color set"""
        self.counters.catalog_ops += 1
        bit = 1 << color
        if element.deleted:
            raise MissingElementError(element)
        if element.colors & bit:
            raise PreconditionError(f'element already marked with color {color}')
        self._check_colors(element.colors | bit)
        block = element.block
        old_mask = block.mask
        before = block.last_upto(element.pos - 1, bit)
        after = block.first_from(element.pos + 1, bit)
        element.colors |= bit
        block.update_leaf(element.pos)
        element.links[color] = [before, after]
        if before is None:
            block.heads[color] = element
        else:
            before.links[color][1] = element
        if after is None:
            block.tails[color] = element
        else:
            after.links[color][0] = element
        self._sync_index(block, old_mask)

    def unmark(self, element: CatalogElement, color: int):
        """Remove `color` from the element's color set"""
        self.counters.catalog_ops += 1
        bit = 1 << color
        if element.deleted or not element.colors & bit:
            raise PreconditionError(f'element is not marked with color {color}')
        block = element.block
        old_mask = block.mask
        element.colors &= ~bit
        block.update_leaf(element.pos)
        before, after = element.links.pop(color)
        if before is None:
            if after is None:
                del block.heads[color]
            else:
                block.heads[color] = after
        else:
            before.links[color][1] = after
        if after is None:
            if before is None:
                del block.tails[color]
            else:
                block.tails[color] = before
        else:
            after.links[color][0] = before
        self._sync_index(block, old_mask)

    # -- queries -------------------------------------------------------------

    def find_next(self, element: Optional[CatalogElement], colors: int) -> Optional[CatalogElement]:
        """First element at or after `element` (catalog start when None) with a color in `colors`"""
        self.counters.catalog_ops += 1
        if not colors or self.first is None:
            return None
        if element is None:
            block, pos = self.first, 0
        else:
            block, pos = element.block, element.pos
        found = block.first_from(pos, colors)
        if found is not None:
            return found
        hit = self._index.find(self._order.label(block) + 1, colors)
        if hit is None:
            return None
        return self._by_label[hit[0]].first_from(0, colors)

    def find_prev(self, element: Optional[CatalogElement], colors: int) -> Optional[CatalogElement]:
        """Last element at or before `element` (catalog end when None) with a color in `colors`"""
        self.counters.catalog_ops += 1
        if not colors or self.last is None:
            return None
        if element is None:
            block, pos = self.last, len(self.last.items) - 1
        else:
            block, pos = element.block, element.pos
        found = block.last_upto(pos, colors)
        if found is not None:
            return found
        hit = self._index.find_prev(self._order.label(block) - 1, colors)
        if hit is None:
            return None
        block = self._by_label[hit[0]]
        return block.last_upto(len(block.items) - 1, colors)

    def report(self, first: Optional[CatalogElement], last: Optional[CatalogElement],
               colors: int) -> List[CatalogElement]:
        """Every element between `first` and `last` inclusive having a color in `colors`, once"""
        self.counters.catalog_ops += 1
        if not colors or self.first is None:
            return []
        if first is None:
            first_block, first_pos = self.first, 0
        else:
            first_block, first_pos = first.block, first.pos
        if last is None:
            last_block, last_pos = self.last, len(self.last.items) - 1
        else:
            last_block, last_pos = last.block, last.pos
        first_label = self._order.label(first_block)
        last_label = self._order.label(last_block)
        if (first_label, first_pos) > (last_label, last_pos):
            return []
        out = []
        if first_block is last_block:
            self._walk(first_block, first_pos, last_pos, colors, out)
            return out
        self._walk(first_block, first_pos, len(first_block.items) - 1, colors, out)
        if last_label - first_label > 1:
            for label, color in self._index.report(first_label + 1, last_label - 1, colors):
                element = self._by_label[label].heads[color]
                while element is not None:
                    if lowest_color(element.colors & colors) == color:
                        out.append(element)
                    element = element.links[color][1]
        self._walk(last_block, 0, last_pos, colors, out)
        return out

    @staticmethod
    def _walk(block: Block, start: int, stop: int, colors: int, out: List[CatalogElement]):
        element = block.first_from(start, colors)
        while element is not None and element.pos <= stop:
            out.append(element)
            element = block.first_from(element.pos + 1, colors)

    # -- audit ---------------------------------------------------------------

    def audit(self):
        """Check block bounds, color trees, color lists and the block index"""
        blocks = list(self.blocks())
        live = 0
        expected_index = set()
        previous_label = -1
        for block in blocks:
            if len(block.items) > 2 * self.block_size:
                raise StructureInconsistencyError(f'block of {len(block.items)} exceeds 2B')
            if len(blocks) > 1 and len(block.items) < self.block_size / 2:
                raise StructureInconsistencyError(f'block of {len(block.items)} below B/2')
            label = self._order.label(block)
            if label <= previous_label or self._by_label.get(label) is not block:
                raise StructureInconsistencyError('block labels out of order')
            previous_label = label
            cap = block.cap
            for pos in range(cap):
                colors = block.items[pos].colors if pos < len(block.items) else 0
                if block.masks[cap + pos] != colors:
                    raise StructureInconsistencyError('leaf mask out of sync')
            for node in range(1, cap):
                if block.masks[node] != block.masks[2 * node] | block.masks[2 * node + 1]:
                    raise StructureInconsistencyError(f'node {node} is not the union of its children')
            for pos, element in enumerate(block.items):
                if element.block is not block or element.pos != pos:
                    raise StructureInconsistencyError('element back-pointer out of sync')
                if element.deleted and element.colors:
                    raise StructureInconsistencyError('tombstone still carries colors')
                if not element.deleted:
                    live += 1
            for color in iter_bits(block.mask):
                expected_index.add((label, color))
                chain = []
                walk = block.heads.get(color)
                while walk is not None:
                    chain.append(walk)
                    walk = walk.links[color][1]
                scanned = [element for element in block.items if element.colors & (1 << color)]
                if chain != scanned or block.tails.get(color) is not scanned[-1]:
                    raise StructureInconsistencyError(f'color list {color} out of sync')
            if set(block.heads) != set(iter_bits(block.mask)):
                raise StructureInconsistencyError('stale color list heads')
        if live != self.live:
            raise StructureInconsistencyError(f'live count {self.live} but {live} live elements')
        if set(self._index.items()) != expected_index:
            raise StructureInconsistencyError('block index does not match block colors')
        self._index.audit()
        self._order.audit()

    def __repr__(self):
        return f'<GusfCatalog {self.live} live, {self.tombstones} tombstones, B={self.block_size}>'
