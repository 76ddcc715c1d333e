from dataclasses import dataclass, fields


@dataclass
class OperationCounters:
    """Work counters read by the bench mode and the scaling tests"""

    nodes_visited: int = 0
    catalog_ops: int = 0
    gveb_levels: int = 0
    relabels: int = 0
    block_splits: int = 0
    rebuilds: int = 0
    rebuild_work: int = 0
    block_work: int = 0

    def reset(self):
        """Zero every counter"""
        for item in fields(self):
            setattr(self, item.name, 0)

    def to_dict(self):
        """Convert counters to dictionary"""
        return {item.name: getattr(self, item.name) for item in fields(self)}

    def __repr__(self):
        return (f'<OperationCounters visited={self.nodes_visited} catalog={self.catalog_ops} '
                f'gveb={self.gveb_levels} block={self.block_work}>')
