"""List labeling: integer labels that increase along a linked order.

Insertion takes the midpoint of the gap to the successor. When there is no
room, the smallest aligned window of labels around the insertion point whose
density stays at most one half is relabeled evenly.
"""
import bisect
import logging
from typing import Any, Hashable, List, Optional, Tuple

from retrospace.exceptions import (
    DuplicateElementError, MissingElementError, PreconditionError, StructureInconsistencyError
)
from retrospace.services.counters import OperationCounters

logger = logging.getLogger(__name__)


class OrderMaintenance:
    """Labels in [0, universe) for an ordered sequence of hashable items"""

    def __init__(self, universe: int, counters: Optional[OperationCounters] = None):
        if universe < 4:
            raise PreconditionError('label universe must hold at least 4 labels')
        self.universe = universe
        self.counters = counters if counters is not None else OperationCounters()
        self._items: List[Any] = []
        self._labels: List[int] = []
        self._label_of = {}

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def label(self, item: Hashable) -> int:
        return self._label_of[item]

    def _index(self, item: Hashable) -> int:
        label = self._label_of[item]
        return bisect.bisect_left(self._labels, label)

    def append_evenly(self, items: List[Any]):
        """Label a fresh sequence with evenly spaced labels"""
        if self._items:
            raise PreconditionError('append_evenly needs an empty order')
        if 2 * (len(items) + 1) > self.universe:
            raise PreconditionError(f'{len(items)} items do not fit a universe of {self.universe}')
        gap = self.universe // (len(items) + 1)
        for index, item in enumerate(items):
            label = gap * (index + 1)
            self._items.append(item)
            self._labels.append(label)
            self._label_of[item] = label

    def insert_after(self, anchor: Optional[Hashable], item: Hashable) -> List[Tuple[Any, int]]:
        """Place `item` right after `anchor` (first when anchor is None).

        Returns (item, old_label) for every previously labeled item whose label changed.
        """
        if item in self._label_of:
            raise DuplicateElementError(item)
        if 2 * (len(self._items) + 1) > self.universe:
            raise PreconditionError(f'label universe {self.universe} is full')
        if anchor is None:
            index = 0
            before = -1
        else:
            if anchor not in self._label_of:
                raise MissingElementError(anchor)
            index = self._index(anchor) + 1
            before = self._label_of[anchor]
        after = self._labels[index] if index < len(self._labels) else self.universe
        if after - before > 1:
            label = (before + after) // 2
            self._items.insert(index, item)
            self._labels.insert(index, label)
            self._label_of[item] = label
            return []
        return self._relabel_window(index, item, max(before, 0))

    def _relabel_window(self, index: int, item: Hashable, around: int) -> List[Tuple[Any, int]]:
        size = 2
        while True:
            low = (around // size) * size
            high = low + size
            first = bisect.bisect_left(self._labels, low)
            last = bisect.bisect_left(self._labels, high)
            count = last - first + 1
            if 2 * count <= size and first <= index <= last:
                break
            if size >= self.universe:
                raise PreconditionError('no relabeling window found')
            size *= 2
        members = self._items[first:index] + [item] + self._items[index:last]
        gap = size // count
        relabeled = []
        self._items[first:last] = members
        labels = [low + gap * offset for offset in range(count)]
        self._labels[first:last] = labels
        for member, label in zip(members, labels):
            old = self._label_of.get(member)
            self._label_of[member] = label
            if member is not item and old != label:
                relabeled.append((member, old))
        self.counters.relabels += len(relabeled)
        logger.debug(f'relabeled {len(relabeled)} items in window [{low}, {high})')
        return relabeled

    def remove(self, item: Hashable):
        index = self._index(item)
        del self._items[index]
        del self._labels[index]
        del self._label_of[item]

    def audit(self):
        if any(a >= b for a, b in zip(self._labels, self._labels[1:])):
            raise StructureInconsistencyError('labels do not increase along the order')
        for item, label in zip(self._items, self._labels):
            if self._label_of[item] != label or not 0 <= label < self.universe:
                raise StructureInconsistencyError(f'label of {item!r} out of sync')

    def __repr__(self):
        return f'<OrderMaintenance {len(self)} items in [0, {self.universe})>'
