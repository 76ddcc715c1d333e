"""Compressed quadtree with randomized skip levels.

Level 0 holds every stored point location; each location is also kept in
levels 1..h where h is geometric with parameter 1/2. A compressed quadtree of
a subset has cells that are also cells of the tree over the full set, so
`locate` descends the sparsest level first and drops to the same cell one
level down through the per-level node tables.
"""
import logging
import random
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Set, Tuple

from retrospace.exceptions import (
    InvalidPointError, MissingElementError, PreconditionError, StructureInconsistencyError
)
from retrospace.models import Point, QuadCell
from retrospace.services.counters import OperationCounters

logger = logging.getLogger(__name__)

CellKey = Tuple[Tuple[int, ...], int]


class CompressedNode:
    """A quadtree cell with its non-empty children, or a leaf holding one location"""

    __slots__ = ('cell', 'children', 'point', 'handles', 'parent', 'height')

    def __init__(self, cell: QuadCell, point: Optional[Point] = None):
        self.cell = cell
        self.children: Dict[int, 'CompressedNode'] = {}
        self.point = point
        self.handles: Set[int] = set()
        self.parent = None
        self.height = 0

    @property
    def is_leaf(self) -> bool:
        return self.point is not None

    @property
    def key(self) -> CellKey:
        return self.cell.anchor.coords, self.cell.level

    def __repr__(self):
        if self.is_leaf:
            return f'<CompressedNode leaf {self.point.coords} handles={sorted(self.handles)}>'
        return f'<CompressedNode {self.cell!r} {len(self.children)} children>'


class _Level:
    """One compressed quadtree of the skip structure"""

    def __init__(self):
        self.root: Optional[CompressedNode] = None
        self.nodes: Dict[CellKey, CompressedNode] = {}

    def descend(self, node: Optional[CompressedNode], p: Point, counters: OperationCounters):
        """Deepest node at or below `node` whose cell contains p"""
        if node is None:
            node = self.root
            if node is None or not node.cell.contains(p):
                return None
        while not node.is_leaf:
            counters.nodes_visited += 1
            child = node.children.get(node.cell.child_index(p))
            if child is None or not child.cell.contains(p):
                break
            node = child
        return node

    def insert(self, leaf: CompressedNode, found: Optional[CompressedNode]):
        """Link a new leaf, `found` being the deepest node containing its point"""
        p = leaf.point
        self.nodes[leaf.key] = leaf
        if self.root is None:
            self.root = leaf
            return
        if found is None:
            top = self._join(self.root, leaf)
            self.root = top
            return
        quadrant = found.cell.child_index(p)
        sibling = found.children.get(quadrant)
        if sibling is None:
            found.children[quadrant] = leaf
            leaf.parent = found
            return
        junction = self._join(sibling, leaf)
        found.children[quadrant] = junction
        junction.parent = found

    def _join(self, node: CompressedNode, leaf: CompressedNode) -> CompressedNode:
        """New internal node at the smallest cell holding both"""
        junction = CompressedNode(smallest_common_cell(leaf.point, node.cell))
        for child in (node, leaf):
            junction.children[junction.cell.child_index(child.cell.anchor)] = child
            child.parent = junction
        self.nodes[junction.key] = junction
        return junction

    def remove(self, leaf: CompressedNode):
        del self.nodes[leaf.key]
        parent = leaf.parent
        leaf.parent = None
        if parent is None:
            self.root = None
            return
        del parent.children[parent.cell.child_index(leaf.point)]
        if len(parent.children) > 1:
            return
        (survivor,) = parent.children.values()
        grand = parent.parent
        survivor.parent = grand
        del self.nodes[parent.key]
        if grand is None:
            self.root = survivor
        else:
            grand.children[grand.cell.child_index(parent.cell.anchor)] = survivor


def smallest_common_cell(p: Point, cell: QuadCell) -> QuadCell:
    """Smallest quadtree cell containing both p and `cell`"""
    spread = 0
    for a, b in zip(p.coords, cell.anchor.coords):
        spread |= a ^ b
    level = min(cell.level, p.bits - spread.bit_length())
    return QuadCell.around(p, level)


def _closest_squared(cell: QuadCell, q: Point) -> int:
    total = 0
    for (lo, hi), value in zip(cell.bounds(), q.coords):
        gap = max(lo - value, 0, value - hi)
        total += gap * gap
    return total


def _farthest_squared(cell: QuadCell, q: Point) -> int:
    total = 0
    for (lo, hi), value in zip(cell.bounds(), q.coords):
        gap = max(value - lo, hi - value)
        total += gap * gap
    return total


class SkipQuadtree:
    """Point locations (with handle sets) in a skip structure of compressed quadtrees"""

    def __init__(self, dimension: int, bits: int, seed: int = 0, counters: Optional[OperationCounters] = None):
        self.dimension = dimension
        self.bits = bits
        self.counters = counters if counters is not None else OperationCounters()
        self._rng = random.Random(seed)
        self._levels: List[_Level] = [_Level()]
        self._leaves: Dict[Tuple[int, ...], CompressedNode] = {}

    def __len__(self):
        """Number of distinct locations"""
        return len(self._leaves)

    def __contains__(self, p: Point) -> bool:
        return p.coords in self._leaves

    @property
    def root(self) -> Optional[CompressedNode]:
        return self._levels[0].root

    @property
    def level_count(self) -> int:
        return len(self._levels)

    def handles_at(self, p: Point) -> Set[int]:
        leaf = self._leaves.get(p.coords)
        return set(leaf.handles) if leaf is not None else set()

    def leaves(self) -> Iterator[CompressedNode]:
        """Level-0 leaves in z-order"""
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            if node.is_leaf:
                yield node
            else:
                stack.extend(node.children[index] for index in sorted(node.children, reverse=True))

    def _check(self, p: Point):
        if p.dimension != self.dimension or p.bits != self.bits:
            raise InvalidPointError(f'{p!r} does not match d={self.dimension}, w={self.bits}')

    def _locate_all(self, p: Point, depth: int) -> List[Optional[CompressedNode]]:
        """Deepest node containing p on each of levels 0..depth-1"""
        found = [None] * depth
        start = None
        for index in range(len(self._levels) - 1, -1, -1):
            level = self._levels[index]
            if start is not None:
                start = level.nodes[start.key]
            start = level.descend(start, p, self.counters)
            if index < depth:
                found[index] = start
        return found

    def locate(self, p: Point) -> Optional[CompressedNode]:
        """Deepest level-0 node whose cell contains p.

        None on an empty tree, where there is no root cell, and when p lies
        outside the root.
        """
        self._check(p)
        return self._locate_all(p, 1)[0]

    def insert(self, p: Point, handle: int):
        """Add a handle at location p"""
        self._check(p)
        leaf = self._leaves.get(p.coords)
        if leaf is not None:
            leaf.handles.add(handle)
            return
        height = 0
        while self._rng.random() < 0.5:
            height += 1
        while len(self._levels) <= height:
            self._levels.append(_Level())
            logger.debug(f'skip quadtree grew to {len(self._levels)} levels')
        found = self._locate_all(p, height + 1)
        cell = QuadCell.around(p, self.bits)
        for index in range(height + 1):
            node = CompressedNode(cell, p)
            node.height = height
            if index == 0:
                node.handles.add(handle)
                self._leaves[p.coords] = node
            self._levels[index].insert(node, found[index])

    def delete(self, p: Point, handle: int):
        """Drop a handle at p; the location leaves every level when its last handle goes"""
        self._check(p)
        leaf = self._leaves.get(p.coords)
        if leaf is None or handle not in leaf.handles:
            raise MissingElementError(f'handle {handle} at {p.coords}')
        leaf.handles.discard(handle)
        if leaf.handles:
            return
        del self._leaves[p.coords]
        logger.debug(f'purging location {p.coords} from {leaf.height + 1} levels')
        key = leaf.key
        for index in range(leaf.height + 1):
            level = self._levels[index]
            level.remove(level.nodes[key])
        while len(self._levels) > 1 and self._levels[-1].root is None:
            self._levels.pop()

    def inner_nodes(self, q: Point, r: float, eps: float) -> List[CompressedNode]:
        """Disjoint level-0 nodes covering every location within r of q, each within (1+eps)*r"""
        self._check(q)
        if not r > 0 or not eps > 0:
            raise PreconditionError('inner cells need r > 0 and eps > 0')
        if self.root is None:
            return []
        scale = 1 << self.bits
        inner = (Fraction(r) * scale) ** 2
        outer = (Fraction(r) * (1 + Fraction(eps)) * scale) ** 2
        result = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            self.counters.nodes_visited += 1
            if _closest_squared(node.cell, q) > inner:
                continue
            if _farthest_squared(node.cell, q) <= outer:
                result.append(node)
                continue
            stack.extend(node.children[index] for index in sorted(node.children, reverse=True))
        return result

    def inner_cells(self, q: Point, r: float, eps: float) -> List[QuadCell]:
        return [node.cell for node in self.inner_nodes(q, r, eps)]

    def node_extremes(self, node: CompressedNode) -> Tuple[Point, Point]:
        low = high = node
        while not low.is_leaf:
            low = low.children[min(low.children)]
        while not high.is_leaf:
            high = high.children[max(high.children)]
        return low.point, high.point

    def cell_extremes(self, cell: QuadCell) -> Tuple[Point, Point]:
        """First and last stored location of a level-0 node's cell in z-order"""
        node = self._levels[0].nodes.get((cell.anchor.coords, cell.level))
        if node is None:
            raise MissingElementError(f'no quadtree node at {cell!r}')
        return self.node_extremes(node)

    def audit(self):
        """Check compression, containment, node tables and the nesting of skip levels"""
        below = None
        for index, level in enumerate(self._levels):
            seen = {}
            points = set()
            stack = [level.root] if level.root is not None else []
            if level.root is not None and level.root.parent is not None:
                raise StructureInconsistencyError(f'level {index} root has a parent')
            while stack:
                node = stack.pop()
                seen[node.key] = node
                if node.is_leaf:
                    points.add(node.point.coords)
                    if node.children:
                        raise StructureInconsistencyError('leaf with children')
                    continue
                if len(node.children) < 2:
                    raise StructureInconsistencyError(f'{node!r} on level {index} is not compressed')
                spread = 0
                for quadrant, child in node.children.items():
                    if child.parent is not node:
                        raise StructureInconsistencyError('child parent pointer out of sync')
                    if child.cell.level <= node.cell.level or not node.cell.contains(child.cell.anchor):
                        raise StructureInconsistencyError(f'{child!r} not inside {node!r}')
                    if node.cell.child_index(child.cell.anchor) != quadrant:
                        raise StructureInconsistencyError(f'{child!r} filed under the wrong quadrant')
                    spread |= 1 << quadrant
                    stack.append(child)
                if bin(spread).count('1') < 2:
                    raise StructureInconsistencyError(f'{node!r} has a single occupied quadrant')
            if seen.keys() != level.nodes.keys() or any(level.nodes[key] is not node for key, node in seen.items()):
                raise StructureInconsistencyError(f'node table of level {index} out of sync')
            if below is not None and not set(seen) <= set(below):
                raise StructureInconsistencyError(f'level {index} has cells missing one level down')
            if index == 0 and points != set(self._leaves):
                raise StructureInconsistencyError('level 0 leaves differ from the stored locations')
            below = seen
        for leaf in self._leaves.values():
            if not leaf.handles:
                raise StructureInconsistencyError(f'empty handle set at {leaf.point.coords}')

    def __repr__(self):
        return f'<SkipQuadtree d={self.dimension} w={self.bits}: {len(self)} locations, {self.level_count} levels>'
