import math
from dataclasses import dataclass
from typing import Any, Union

from retrospace.exceptions import InvalidIntervalError, PreconditionError
from retrospace.models.point import Point

INF = math.inf

Timestamp = Union[int, float]


@dataclass
class Lifespan:
    """An element's existence interval [t_start, t_end) under an ordered key"""

    key: Any
    t_start: Timestamp
    t_end: Timestamp
    handle: int

    def __post_init__(self):
        if self.t_start == -INF or not self.t_start < self.t_end:
            raise InvalidIntervalError(f'lifespan [{self.t_start}, {self.t_end}) is empty or unbounded on the left')

    @property
    def sort_key(self):
        """Strict total order: key first, allocation handle as tie breaker"""
        return (self.key, self.handle)

    def is_alive(self, t: Timestamp) -> bool:
        return self.t_start <= t < self.t_end

    def __repr__(self):
        end = 'inf' if self.t_end == INF else self.t_end
        return f'<Lifespan #{self.handle} [{self.t_start}, {end}) {self.key!r}>'


@dataclass(frozen=True)
class RangeQuery:
    """Approximate ball query: radius r around center, slack eps, at time t"""

    center: Point
    radius: float
    eps: float
    t: Timestamp

    def __post_init__(self):
        if not self.radius > 0:
            raise PreconditionError(f'radius must be positive, got {self.radius}')
        if not self.eps > 0:
            raise PreconditionError(f'eps must be positive, got {self.eps}')

    def to_dict(self):
        """Convert query to dictionary"""
        return {
            'center': list(self.center.to_unit()),
            'radius': self.radius,
            'eps': self.eps,
            't': self.t
        }

    def __repr__(self):
        return f'<RangeQuery t={self.t} r={self.radius} eps={self.eps} at {self.center.coords}>'
