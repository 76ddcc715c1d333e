from .point import Point, QuadCell, MAX_DIMENSION
from .lifespan import Lifespan, RangeQuery, INF
from .workload import (
    AddCommand, RemoveCommand, RangeCommand, AnnCommand, EmptyCommand,
    WorkloadScript, QUERY_TYPES
)

__all__ = [
    'Point',
    'QuadCell',
    'MAX_DIMENSION',
    'Lifespan',
    'RangeQuery',
    'INF',
    'AddCommand',
    'RemoveCommand',
    'RangeCommand',
    'AnnCommand',
    'EmptyCommand',
    'WorkloadScript',
    'QUERY_TYPES'
]
