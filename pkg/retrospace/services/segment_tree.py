"""Fully retroactive ordered set: a weight-balanced segment tree over time.

Leaves are the distinct lifespan endpoints (plus two sentinels at -inf and
+inf); the leaf holding timestamp t_i stands for the elementary interval
[t_i, t_next). Every internal node v keeps a colored catalog M(v) of the
lifespans with an endpoint under v, ordered by (key, handle). The color of a
lifespan at v names the child slots holding its endpoints:

    pair(a, b)  both endpoints under v, in the children with slots a and b
    left(a)     only t_start under v (the lifespan runs past v on the right)
    right(b)    only t_end under v (the lifespan started before v)

For the child u on a query path, `query_masks` selects the lifespans alive
throughout u and `cascade_masks` selects the lifespans stored in M(u), so a
query walks one root-to-leaf path and moves its key bounds from catalog to
catalog with colored find operations.
"""
import bisect
import logging
from typing import Any, Dict, Iterator, List, Optional, Tuple

from retrospace.exceptions import (
    DuplicateElementError, MissingElementError, PreconditionError, StructureInconsistencyError
)
from retrospace.models import INF, Lifespan
from retrospace.services.counters import OperationCounters
from retrospace.services.gusf import CatalogElement, GusfCatalog, lowest_color

logger = logging.getLogger(__name__)

MAX_BRANCHING = 8
PAIR_COLORS = MAX_BRANCHING * (MAX_BRANCHING + 1) // 2
NUM_COLORS = PAIR_COLORS + 2 * MAX_BRANCHING


def pair_color(a: int, b: int) -> int:
    """Color of a lifespan whose endpoints sit under slots a and b (unordered)"""
    if a > b:
        a, b = b, a
    return a * MAX_BRANCHING - a * (a - 1) // 2 + (b - a)


def left_color(slot: int) -> int:
    return PAIR_COLORS + slot


def right_color(slot: int) -> int:
    return PAIR_COLORS + MAX_BRANCHING + slot


class TimeLeaf:
    """One distinct endpoint timestamp with its reference count"""

    __slots__ = ('time', 'refcount', 'sentinel', 'parent', 'slot')

    weight = 1

    def __init__(self, time, sentinel: bool = False):
        self.time = time
        self.refcount = 0
        self.sentinel = sentinel
        self.parent = None
        self.slot = None

    @property
    def lo(self):
        return self.time

    def __repr__(self):
        return f'<TimeLeaf {self.time} x{self.refcount}>'


class TimeNode:
    """Internal node: ordered children, catalog M(v) and its color tables"""

    __slots__ = ('children', 'catalog', 'elements', 'bounds', 'weight', 'lo', 'parent', 'slot',
                 'query_masks', 'cascade_masks', 'leaf_masks')

    def __init__(self):
        self.children = []
        self.catalog = None
        self.elements: Dict[int, CatalogElement] = {}
        self.bounds = []
        self.weight = 0
        self.lo = None
        self.parent = None
        self.slot = None
        self.query_masks = []
        self.cascade_masks = []
        self.leaf_masks = []

    def child_at(self, t) -> int:
        """Position of the child whose time range holds t"""
        return bisect.bisect_right(self.bounds, t) - 1

    def refresh(self):
        self.bounds = [child.lo for child in self.children]
        self.weight = sum(child.weight for child in self.children)
        self.lo = self.bounds[0] if self.bounds else None

    def refresh_tables(self):
        """Recompute Q, F and the last-level report masks from the child slots"""
        slots = [child.slot for child in self.children]
        query, cascade, leaf = [], [], []
        for k, slot in enumerate(slots):
            before, after = slots[:k], slots[k + 1:]
            spanning = 0
            for a in before:
                spanning |= 1 << left_color(a)
                for b in after:
                    spanning |= 1 << pair_color(a, b)
            for b in after:
                spanning |= 1 << right_color(b)
            stored = (1 << left_color(slot)) | (1 << right_color(slot))
            for other in slots:
                stored |= 1 << pair_color(slot, other)
            starting = 1 << left_color(slot)
            for b in after:
                starting |= 1 << pair_color(slot, b)
            query.append(spanning)
            cascade.append(stored)
            leaf.append(spanning | starting)
        self.query_masks = query
        self.cascade_masks = cascade
        self.leaf_masks = leaf

    def __repr__(self):
        return f'<TimeNode {len(self.children)} children weight={self.weight}>'


class RetroSegmentTree:
    """Keys with lifespans; successor, predecessor and range report at any time"""

    def __init__(self, branching: int = MAX_BRANCHING, min_block: int = 16, color_cap: int = 2,
                 min_capacity: int = 16, check_invariants: bool = False,
                 counters: Optional[OperationCounters] = None):
        if not 2 <= branching <= MAX_BRANCHING:
            raise PreconditionError(f'branching must be in [2, {MAX_BRANCHING}], got {branching}')
        self.branching = branching
        self.min_capacity = min_capacity
        self.check_invariants = check_invariants
        self.counters = counters if counters is not None else OperationCounters()
        self._catalog_options = {
            'num_colors': NUM_COLORS,
            'color_cap': color_cap,
            'min_block': min_block,
            'counters': self.counters
        }
        self._lifespans: Dict[int, Lifespan] = {}
        # root catalog order; bisect search, list insert and delete shift the tail
        self._index: List[Tuple[Any, int]] = []
        first, last = TimeLeaf(-INF, sentinel=True), TimeLeaf(INF, sentinel=True)
        self._leaves = {-INF: first, INF: last}
        self._capacity = min_capacity
        self.root = self._build([first, last], [], {first: 0, last: 1}, 0, 2)

    def __len__(self):
        return len(self._lifespans)

    def __contains__(self, handle: int) -> bool:
        return handle in self._lifespans

    def __iter__(self) -> Iterator[Lifespan]:
        """Lifespans in key order"""
        for _, handle in self._index:
            yield self._lifespans[handle]

    def get(self, handle: int) -> Lifespan:
        try:
            return self._lifespans[handle]
        except KeyError:
            raise MissingElementError(handle) from None

    @property
    def leaf_count(self) -> int:
        return len(self._leaves)

    def height(self) -> int:
        depth, node = 0, self.root
        while isinstance(node, TimeNode):
            node = max(node.children, key=lambda child: child.weight)
            depth += 1
        return depth

    def catalog_entries(self) -> int:
        """Live catalog entries summed over every internal node"""
        return sum(len(node.catalog) for node in self._internal_nodes())

    # -- updates -------------------------------------------------------------

    def insert(self, lifespan: Lifespan) -> int:
        """Add a lifespan; returns its handle"""
        if lifespan.handle in self._lifespans:
            raise DuplicateElementError(lifespan.handle)
        start = self._acquire_leaf(lifespan.t_start)
        end = self._acquire_leaf(lifespan.t_end)
        position = bisect.bisect_left(self._index, lifespan.sort_key)
        anchor = self.root.elements[self._index[position - 1][1]] if position else None
        self._index.insert(position, lifespan.sort_key)
        self._lifespans[lifespan.handle] = lifespan
        self._place(self.root, lifespan, anchor, self._toward(start), self._toward(end))
        if self.check_invariants:
            self.audit()
        return lifespan.handle

    def delete(self, handle: int) -> Lifespan:
        """Remove a lifespan by handle and return it"""
        lifespan = self.get(handle)
        del self._lifespans[handle]
        del self._index[bisect.bisect_left(self._index, lifespan.sort_key)]
        start = self._leaves[lifespan.t_start]
        end = self._leaves[lifespan.t_end]
        for node in set(self._toward(start)) | set(self._toward(end)):
            element = node.elements.pop(handle)
            node.catalog.unmark(element, lowest_color(element.colors))
            node.catalog.remove(element)
        self._release_leaf(start)
        self._release_leaf(end)
        if self.check_invariants:
            self.audit()
        return lifespan

    @staticmethod
    def _toward(leaf: TimeLeaf) -> Dict[TimeNode, Any]:
        """Map every ancestor of the leaf to its child on the path to the leaf"""
        path = {}
        child = leaf
        while child.parent is not None:
            path[child.parent] = child
            child = child.parent
        return path

    @staticmethod
    def _color(under_start, under_end) -> int:
        if under_start is not None and under_end is not None:
            return pair_color(under_start.slot, under_end.slot)
        if under_start is not None:
            return left_color(under_start.slot)
        return right_color(under_end.slot)

    def _place(self, node: TimeNode, lifespan: Lifespan, anchor: Optional[CatalogElement],
               toward_start: Dict, toward_end: Dict):
        under_start, under_end = toward_start.get(node), toward_end.get(node)
        element = node.catalog.add(lifespan, anchor)
        node.catalog.mark(element, self._color(under_start, under_end))
        node.elements[lifespan.handle] = element
        children = [under_start] if under_start is under_end else [under_start, under_end]
        for child in children:
            if child is None or isinstance(child, TimeLeaf):
                continue
            colors = node.cascade_masks[node.children.index(child)]
            found = node.catalog.find_prev(anchor, colors) if anchor is not None else None
            child_anchor = child.elements[found.item.handle] if found is not None else None
            self._place(child, lifespan, child_anchor, toward_start, toward_end)

    def _locate(self, t) -> TimeLeaf:
        """Leaf with the largest timestamp <= t"""
        node = self.root
        while isinstance(node, TimeNode):
            node = node.children[node.child_at(t)]
        return node

    def _acquire_leaf(self, t) -> TimeLeaf:
        leaf = self._leaves.get(t)
        if leaf is None:
            leaf = self._add_leaf(t)
        leaf.refcount += 1
        return leaf

    def _add_leaf(self, t) -> TimeLeaf:
        before = self._locate(t)
        parent = before.parent
        leaf = TimeLeaf(t)
        self._leaves[t] = leaf
        parent.children.insert(parent.children.index(before) + 1, leaf)
        leaf.parent = parent
        used = {child.slot for child in parent.children}
        free = [slot for slot in range(self.branching) if slot not in used]
        # a full parent gets rebuilt below, which assigns fresh slots
        leaf.slot = free[0] if free else None
        self._refresh_up(parent)
        if leaf.slot is not None:
            parent.refresh_tables()
        if not self._check_capacity():
            self._rebalance(parent)
        return leaf

    def _release_leaf(self, leaf: TimeLeaf):
        leaf.refcount -= 1
        if leaf.refcount or leaf.sentinel:
            return
        parent = leaf.parent
        parent.children.remove(leaf)
        del self._leaves[leaf.time]
        leaf.parent = None
        self._refresh_up(parent)
        parent.refresh_tables()
        if not self._check_capacity():
            self._rebalance(parent)

    @staticmethod
    def _refresh_up(node: Optional[TimeNode]):
        while node is not None:
            node.refresh()
            node = node.parent

    # -- balance -------------------------------------------------------------

    def _balanced(self, node: TimeNode) -> bool:
        if not 2 <= len(node.children) <= self.branching:
            return False
        low = node.weight / (4 * self.branching)
        high = 4 * node.weight / self.branching
        return all(low <= child.weight <= high for child in node.children)

    def _rebalance(self, node: TimeNode):
        """Rebuild the highest unbalanced node on the path from node to the root"""
        target = None
        while node is not None:
            if not self._balanced(node):
                target = node
            node = node.parent
        if target is not None:
            self._rebuild(target)

    def _check_capacity(self) -> bool:
        count = len(self._leaves)
        capacity = self._capacity
        while count > capacity:
            capacity *= 2
        while capacity > self.min_capacity and count < capacity // 4:
            capacity //= 2
        if capacity == self._capacity:
            return False
        logger.debug(f'global rebuild: {count} leaves, capacity {self._capacity} -> {capacity}')
        self._capacity = capacity
        self._rebuild(self.root)
        return True

    def _rebuild(self, node: TimeNode):
        leaves = list(self._leaves_under(node))
        lifespans = [element.item for element in node.catalog]
        position = {leaf: index for index, leaf in enumerate(leaves)}
        parent, slot = node.parent, node.slot
        fresh = self._build(leaves, lifespans, position, 0, len(leaves))
        fresh.parent = parent
        fresh.slot = slot
        if parent is None:
            self.root = fresh
        else:
            parent.children[parent.children.index(node)] = fresh
        self.counters.rebuilds += 1
        self.counters.rebuild_work += len(leaves) + len(lifespans)
        logger.debug(f'rebuilt time node: {len(leaves)} leaves, {len(lifespans)} lifespans')

    def _build(self, leaves: List[TimeLeaf], lifespans: List[Lifespan], position: Dict[TimeLeaf, int],
               lo: int, hi: int):
        if hi - lo == 1:
            return leaves[lo]
        count = min(self.branching, hi - lo)
        cuts = [lo + (hi - lo) * i // count for i in range(count + 1)]
        groups = [[] for _ in range(count)]
        entries = []
        for lifespan in lifespans:
            start = self._group(position, lifespan.t_start, cuts)
            end = self._group(position, lifespan.t_end, cuts)
            if start is not None and end is not None:
                color = pair_color(start, end)
            elif start is not None:
                color = left_color(start)
            else:
                color = right_color(end)
            entries.append((lifespan, 1 << color))
            if start is not None:
                groups[start].append(lifespan)
            if end is not None and end != start:
                groups[end].append(lifespan)
        node = TimeNode()
        node.catalog = GusfCatalog.from_sorted(entries, **self._catalog_options)
        node.elements = {element.item.handle: element for element in node.catalog}
        for slot in range(count):
            child = self._build(leaves, groups[slot], position, cuts[slot], cuts[slot + 1])
            child.parent = node
            child.slot = slot
            node.children.append(child)
        node.refresh()
        node.refresh_tables()
        return node

    def _group(self, position: Dict[TimeLeaf, int], t, cuts: List[int]) -> Optional[int]:
        index = position.get(self._leaves[t])
        if index is None or not cuts[0] <= index < cuts[-1]:
            return None
        return bisect.bisect_right(cuts, index) - 1

    # -- queries -------------------------------------------------------------

    def _root_bounds(self, y, z) -> Tuple[Optional[CatalogElement], Optional[CatalogElement]]:
        lo = 0 if y is None else bisect.bisect_left(self._index, (y, -INF))
        hi = len(self._index) if z is None else bisect.bisect_right(self._index, (z, INF))
        if lo >= hi:
            return None, None
        elements = self.root.elements
        return elements[self._index[lo][1]], elements[self._index[hi - 1][1]]

    def iter_report(self, t, y=None, z=None) -> Iterator[Lifespan]:
        """Lifespans alive at t with key in [y, z]; None leaves a side unbounded"""
        first, last = self._root_bounds(y, z)
        if first is None:
            return
        node = self.root
        while True:
            self.counters.nodes_visited += 1
            k = node.child_at(t)
            child = node.children[k]
            if isinstance(child, TimeLeaf):
                for element in node.catalog.report(first, last, node.leaf_masks[k]):
                    yield element.item
                return
            for element in node.catalog.report(first, last, node.query_masks[k]):
                yield element.item
            colors = node.cascade_masks[k]
            low = node.catalog.find_next(first, colors)
            high = node.catalog.find_prev(last, colors)
            if low is None or high is None or high.item.sort_key < low.item.sort_key:
                return
            first = child.elements[low.item.handle]
            last = child.elements[high.item.handle]
            node = child

    def retro_report_keys(self, t, y, z) -> List[int]:
        """Handles of the lifespans alive at t with key in [y, z]"""
        if z < y:
            raise PreconditionError('range report needs y <= z')
        return [lifespan.handle for lifespan in self.iter_report(t, y, z)]

    def retro_succ(self, t, y) -> Optional[int]:
        """Handle of the smallest key >= y alive at t"""
        position = bisect.bisect_left(self._index, (y, -INF))
        if position == len(self._index):
            return None
        current = self.root.elements[self._index[position][1]]
        best = None
        node = self.root
        while True:
            self.counters.nodes_visited += 1
            k = node.child_at(t)
            child = node.children[k]
            last_level = isinstance(child, TimeLeaf)
            colors = node.leaf_masks[k] if last_level else node.query_masks[k]
            found = node.catalog.find_next(current, colors)
            if found is not None and (best is None or found.item.sort_key < best.sort_key):
                best = found.item
            if last_level:
                break
            following = node.catalog.find_next(current, node.cascade_masks[k])
            if following is None or (best is not None and best.sort_key < following.item.sort_key):
                break
            current = child.elements[following.item.handle]
            node = child
        return best.handle if best is not None else None

    def retro_pred(self, t, z) -> Optional[int]:
        """Handle of the largest key <= z alive at t"""
        position = bisect.bisect_right(self._index, (z, INF)) - 1
        if position < 0:
            return None
        current = self.root.elements[self._index[position][1]]
        best = None
        node = self.root
        while True:
            self.counters.nodes_visited += 1
            k = node.child_at(t)
            child = node.children[k]
            last_level = isinstance(child, TimeLeaf)
            colors = node.leaf_masks[k] if last_level else node.query_masks[k]
            found = node.catalog.find_prev(current, colors)
            if found is not None and (best is None or best.sort_key < found.item.sort_key):
                best = found.item
            if last_level:
                break
            preceding = node.catalog.find_prev(current, node.cascade_masks[k])
            if preceding is None or (best is not None and preceding.item.sort_key < best.sort_key):
                break
            current = child.elements[preceding.item.handle]
            node = child
        return best.handle if best is not None else None

    def retro_nearest(self, t, y) -> Optional[int]:
        """Handle of the key closest to y alive at t (numeric keys; ties to the smaller key)"""
        candidates = [handle for handle in (self.retro_pred(t, y), self.retro_succ(t, y)) if handle is not None]
        if not candidates:
            return None
        return min(candidates, key=lambda handle: (abs(self._lifespans[handle].key - y),
                                                   self._lifespans[handle].sort_key))

    # -- audit ---------------------------------------------------------------

    def _internal_nodes(self) -> Iterator[TimeNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, TimeNode):
                yield node
                stack.extend(node.children)

    @staticmethod
    def _leaves_under(node) -> Iterator[TimeLeaf]:
        stack = [node]
        while stack:
            current = stack.pop()
            if isinstance(current, TimeLeaf):
                yield current
            else:
                stack.extend(reversed(current.children))

    def audit(self):
        """Check balance, leaf reference counts, catalog membership, colors, tables and nesting"""
        if self.root.parent is not None:
            raise StructureInconsistencyError('root has a parent')
        leaves = list(self._leaves_under(self.root))
        if [leaf.time for leaf in leaves] != sorted(self._leaves):
            raise StructureInconsistencyError('leaf order does not match the timestamps')
        if any(self._leaves[leaf.time] is not leaf for leaf in leaves):
            raise StructureInconsistencyError('leaf table out of sync')
        refcounts = {time: 0 for time in self._leaves}
        for lifespan in self._lifespans.values():
            refcounts[lifespan.t_start] += 1
            refcounts[lifespan.t_end] += 1
        for leaf in leaves:
            if leaf.refcount != refcounts[leaf.time]:
                raise StructureInconsistencyError(f'leaf {leaf.time} refcount {leaf.refcount}, expected {refcounts[leaf.time]}')
            if not leaf.refcount and not leaf.sentinel:
                raise StructureInconsistencyError(f'unreferenced leaf {leaf.time}')
        if self._index != sorted(lifespan.sort_key for lifespan in self._lifespans.values()):
            raise StructureInconsistencyError('root index out of sync')
        toward = {}
        for time, leaf in self._leaves.items():
            toward[time] = self._toward(leaf)
        for node in self._internal_nodes():
            self._audit_node(node, toward)

    def _audit_node(self, node: TimeNode, toward: Dict):
        if not self._balanced(node):
            raise StructureInconsistencyError(f'{node!r} is out of balance')
        slots = [child.slot for child in node.children]
        if len(set(slots)) != len(slots) or not all(0 <= slot < self.branching for slot in slots):
            raise StructureInconsistencyError(f'bad child slots {slots}')
        for child in node.children:
            if child.parent is not node:
                raise StructureInconsistencyError('child parent pointer out of sync')
        expected = (list(node.query_masks), list(node.cascade_masks), list(node.leaf_masks))
        bounds, weight = list(node.bounds), node.weight
        node.refresh()
        node.refresh_tables()
        if (bounds, weight) != (node.bounds, node.weight):
            raise StructureInconsistencyError('node bounds or weight out of sync')
        if expected != (node.query_masks, node.cascade_masks, node.leaf_masks):
            raise StructureInconsistencyError('color tables out of sync')
        node.catalog.audit()
        members = [lifespan for lifespan in self._lifespans.values()
                   if node in toward[lifespan.t_start] or node in toward[lifespan.t_end]]
        members.sort(key=lambda lifespan: lifespan.sort_key)
        stored = list(node.catalog)
        if [element.item for element in stored] != members:
            raise StructureInconsistencyError('catalog does not hold exactly the lifespans with an endpoint below')
        if {handle: element for handle, element in node.elements.items()} != {
                element.item.handle: element for element in stored}:
            raise StructureInconsistencyError('element table out of sync')
        for element in stored:
            lifespan = element.item
            color = self._color(toward[lifespan.t_start].get(node), toward[lifespan.t_end].get(node))
            if element.colors != 1 << color:
                raise StructureInconsistencyError(f'{lifespan!r} has colors {element.colors:#x}, expected {color}')
        for k, child in enumerate(node.children):
            if isinstance(child, TimeLeaf):
                continue
            colors = node.cascade_masks[k]
            nested = [element.item for element in stored if element.colors & colors]
            if nested != [element.item for element in child.catalog]:
                raise StructureInconsistencyError('child catalog is not the cascade-colored part of its parent')

    def __repr__(self):
        return f'<RetroSegmentTree {len(self)} lifespans, {self.leaf_count} leaves>'
