"""Fully retroactive approximate range reporting and nearest neighbour search.

A skip quadtree holds every point location that still has a lifespan; d+1
time segment trees hold the same lifespans keyed by the z-order of the point
shifted by v^(j). Range queries decompose the query ball into quadtree cells,
each cell being one contiguous key range of the unshifted tree. Nearest
neighbour queries start from the 2(d+1) shifted z-order neighbours and refine
the radius by bisection over spherical emptiness probes.
"""
import logging
import math
from fractions import Fraction
from typing import Iterator, List, Optional, Tuple

from retrospace.exceptions import (
    InvalidPointError, MissingElementError, PreconditionError, StructureInconsistencyError
)
from retrospace.models import Lifespan, Point, RangeQuery
from retrospace.models.lifespan import Timestamp
from retrospace.services.counters import OperationCounters
from retrospace.services.quadtree import SkipQuadtree
from retrospace.services.segment_tree import RetroSegmentTree
from retrospace.services.zorder import ZOrderKey, c_constant, shift

logger = logging.getLogger(__name__)

Hit = Tuple[Point, int]

# upper bounds on square roots carry this many fractional bits
SQRT_PRECISION = 32
MAX_BISECTION_STEPS = 256


def _sqrt_upper(value: int) -> Fraction:
    """A rational >= sqrt(value), within 2^-SQRT_PRECISION of it"""
    scale = 1 << SQRT_PRECISION
    root = math.isqrt(value * scale * scale)
    if root * root < value * scale * scale:
        root += 1
    return Fraction(root, scale)


class RetroPointSet:
    """Points with lifespans, queried at any time index"""

    def __init__(self, dimension: int, bits: int = 31, branching: int = 8, min_block: int = 16,
                 color_cap: int = 2, min_capacity: int = 16, seed: int = 0, check_invariants: bool = False):
        self.dimension = dimension
        self.bits = bits
        self.check_invariants = check_invariants
        self.counters = OperationCounters()
        self.quadtree = SkipQuadtree(dimension, bits, seed=seed, counters=self.counters)
        self.trees = [
            RetroSegmentTree(branching=branching, min_block=min_block, color_cap=color_cap,
                             min_capacity=min_capacity, check_invariants=check_invariants,
                             counters=self.counters)
            for _ in range(dimension + 1)
        ]
        self._points = {}
        self._next_handle = 0
        self._frozen = False

    def __len__(self):
        return len(self._points)

    def __contains__(self, handle: int) -> bool:
        return handle in self._points

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self):
        """Forbid further updates.

        Queries still bump the shared operation counters, so concurrent
        readers of a frozen set see approximate counter values.
        """
        self._frozen = True

    def _check_point(self, p: Point):
        if p.dimension != self.dimension or p.bits != self.bits:
            raise InvalidPointError(f'{p!r} does not match d={self.dimension}, w={self.bits}')

    def point_of(self, handle: int) -> Point:
        try:
            return self._points[handle]
        except KeyError:
            raise MissingElementError(handle) from None

    def interval_of(self, handle: int) -> Tuple[Timestamp, Timestamp]:
        lifespan = self.trees[0].get(handle)
        return lifespan.t_start, lifespan.t_end

    def catalog_entries(self) -> int:
        """Live catalog entries over all d+1 segment trees"""
        return sum(tree.catalog_entries() for tree in self.trees)

    # -- updates -------------------------------------------------------------

    def add_lifespan(self, p: Point, t_start: Timestamp, t_end: Timestamp) -> int:
        """Insert p for the time interval [t_start, t_end); returns the new handle"""
        if self._frozen:
            raise PreconditionError('point set is frozen')
        self._check_point(p)
        handle = self._next_handle
        lifespans = [Lifespan(ZOrderKey(shift(p, j)), t_start, t_end, handle) for j in range(self.dimension + 1)]
        self._next_handle += 1
        for tree, lifespan in zip(self.trees, lifespans):
            tree.insert(lifespan)
        self.quadtree.insert(p, handle)
        self._points[handle] = p
        if self.check_invariants:
            self.quadtree.audit()
        return handle

    def remove_lifespan(self, handle: int):
        """Retract a lifespan from the whole timeline"""
        if self._frozen:
            raise PreconditionError('point set is frozen')
        p = self.point_of(handle)
        for tree in self.trees:
            tree.delete(handle)
        self.quadtree.delete(p, handle)
        del self._points[handle]
        if self.check_invariants:
            self.quadtree.audit()

    # -- queries -------------------------------------------------------------

    def _iter_range(self, q: Point, r, eps, t: Timestamp) -> Iterator[Hit]:
        # cells of the decomposition may reach out to (1+eps)*r; keep only the
        # points within r so the answer is a function of the alive set alone
        tree = self.trees[0]
        limit = (Fraction(r) * (1 << self.bits)) ** 2
        for node in self.quadtree.inner_nodes(q, r, eps):
            if node.is_leaf:
                for handle in sorted(node.handles):
                    if tree.get(handle).is_alive(t) and q.squared_distance(node.point) <= limit:
                        yield node.point, handle
                continue
            low, high = self.quadtree.node_extremes(node)
            for lifespan in tree.iter_report(t, ZOrderKey(low), ZOrderKey(high)):
                if q.squared_distance(lifespan.key.point) <= limit:
                    yield lifespan.key.point, lifespan.handle

    def retro_range_report(self, query: RangeQuery) -> List[Hit]:
        """Exactly the points alive at query.t within radius r, ordered by handle.

        eps only sets how coarse the cell decomposition of the ball may be.
        """
        self._check_point(query.center)
        hits = list(self._iter_range(query.center, query.radius, query.eps, query.t))
        return sorted(hits, key=lambda hit: hit[1])

    def retro_spherical_empty(self, q: Point, r, eps, t: Timestamp) -> Optional[Hit]:
        """None when no point alive at t lies within r of q.

        Otherwise the witness is the alive point within r nearest to q, ties
        broken by the smaller handle.
        """
        query = RangeQuery(q, r, eps, t)
        self._check_point(q)
        hits = self._iter_range(query.center, query.radius, query.eps, query.t)
        return min(hits, key=lambda hit: (q.squared_distance(hit[0]), hit[1]), default=None)

    def alive_at(self, t: Timestamp) -> List[Hit]:
        """Every (point, handle) alive at t, ordered by handle"""
        hits = [(lifespan.key.point, lifespan.handle) for lifespan in self.trees[0].iter_report(t)]
        return sorted(hits, key=lambda hit: hit[1])

    def _candidates(self, q: Point, t: Timestamp) -> List[int]:
        handles = set()
        for j, tree in enumerate(self.trees):
            key = ZOrderKey(shift(q, j))
            for handle in (tree.retro_pred(t, key), tree.retro_succ(t, key)):
                if handle is not None:
                    handles.add(handle)
        return sorted(handles)

    def retro_ann(self, q: Point, eps, t: Timestamp) -> Optional[Hit]:
        """A point alive at t within (1+eps) times the nearest neighbour distance from q"""
        if not eps > 0:
            raise PreconditionError(f'eps must be positive, got {eps}')
        self._check_point(q)
        candidates = self._candidates(q, t)
        if not candidates:
            return None
        best = min(candidates, key=lambda handle: (q.squared_distance(self._points[handle]), handle))
        best_squared = q.squared_distance(self._points[best])
        if self.check_invariants:
            self._check_candidate_bound(q, t, best_squared)
        if best_squared == 0:
            return self._points[best], best

        scale = 1 << self.bits
        slack = min(Fraction(eps), Fraction(1)) / 4
        limit = 1 + Fraction(eps)
        hi = _sqrt_upper(best_squared)
        lo = hi / Fraction(c_constant(self.dimension))
        # lo must be a certified lower bound on the nearest distance
        while True:
            found = self.retro_spherical_empty(q, lo / scale, slack, t)
            if found is None:
                break
            logger.warning(f'radius {float(lo)} not certified empty at t={t}, halving')
            best, best_squared, hi = self._tighten(q, found, best, best_squared, hi, lo)
            lo /= 2
        steps = 0
        while hi > limit * lo:
            steps += 1
            if steps > MAX_BISECTION_STEPS:
                logger.warning(f'ann bisection stopped after {MAX_BISECTION_STEPS} steps at ratio {float(hi / lo)}')
                break
            mid = (lo + hi) / 2
            found = self.retro_spherical_empty(q, mid / scale, slack, t)
            if found is None:
                lo = mid
            else:
                best, best_squared, hi = self._tighten(q, found, best, best_squared, hi, mid)
            logger.debug(f'ann bisection step {steps}: lo={float(lo)} hi={float(hi)}')
        return self._points[best], best

    def _tighten(self, q: Point, found: Hit, best: int, best_squared: int, hi: Fraction, radius: Fraction):
        # the witness lies within radius, so radius bounds the best distance too
        point, handle = found
        squared = q.squared_distance(point)
        if (squared, handle) < (best_squared, best):
            best, best_squared = handle, squared
        return best, best_squared, min(hi, radius, _sqrt_upper(best_squared))

    def _check_candidate_bound(self, q: Point, t: Timestamp, best_squared: int):
        alive = self.alive_at(t)
        nearest = min(q.squared_distance(point) for point, _ in alive)
        c = c_constant(self.dimension)
        if best_squared > c * c * nearest:
            logger.warning(f'candidate distance^2 {best_squared} exceeds c^2 * {nearest} at t={t}')

    def audit(self):
        """Audit the quadtree and every segment tree, and check they hold the same lifespans"""
        self.quadtree.audit()
        handles = set(self._points)
        for tree in self.trees:
            tree.audit()
            if {lifespan.handle for lifespan in tree} != handles:
                raise StructureInconsistencyError('segment trees disagree on the stored lifespans')
        located = set()
        for leaf in self.quadtree.leaves():
            located |= leaf.handles
        if located != handles:
            raise StructureInconsistencyError('quadtree handles differ from the lifespan table')

    def __repr__(self):
        return f'<RetroPointSet d={self.dimension} w={self.bits}: {len(self)} lifespans>'
