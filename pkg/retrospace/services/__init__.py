from .gveb import Gveb
from .gusf import GusfCatalog
from .segment_tree import RetroSegmentTree
from .quadtree import SkipQuadtree
from .point_set import RetroPointSet
from .oracle import NaiveTimeline, ref_z_sort
from .workload_parser import parse_workload, generate_workload, format_workload

__all__ = [
    'Gveb',
    'GusfCatalog',
    'RetroSegmentTree',
    'SkipQuadtree',
    'RetroPointSet',
    'NaiveTimeline',
    'ref_z_sort',
    'parse_workload',
    'generate_workload',
    'format_workload'
]
