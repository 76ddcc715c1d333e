from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from retrospace.models.lifespan import Timestamp


@dataclass(frozen=True)
class AddCommand:
    """`add <id> <t_start> <t_end|inf> <x1>..<xd>`"""
    ident: int
    t_start: int
    t_end: Timestamp
    coords: Tuple[float, ...]
    line: int = 0


@dataclass(frozen=True)
class RemoveCommand:
    """`remove <id>`"""
    ident: int
    line: int = 0


@dataclass(frozen=True)
class RangeCommand:
    """`range <t> <r> <eps> <x1>..<xd>`"""
    t: int
    radius: float
    eps: float
    coords: Tuple[float, ...]
    line: int = 0


@dataclass(frozen=True)
class AnnCommand:
    """`ann <t> <eps> <x1>..<xd>`"""
    t: int
    eps: float
    coords: Tuple[float, ...]
    line: int = 0


@dataclass(frozen=True)
class EmptyCommand:
    """`empty <t> <r> <eps> <x1>..<xd>`"""
    t: int
    radius: float
    eps: float
    coords: Tuple[float, ...]
    line: int = 0


Command = Union[AddCommand, RemoveCommand, RangeCommand, AnnCommand, EmptyCommand]
QUERY_TYPES = (RangeCommand, AnnCommand, EmptyCommand)


@dataclass
class WorkloadScript:
    """Ordered commands of one workload file"""

    dimension: Optional[int] = None
    bits: Optional[int] = None
    commands: List[Command] = field(default_factory=list)

    @property
    def query_count(self) -> int:
        return sum(1 for command in self.commands if isinstance(command, QUERY_TYPES))

    def to_dict(self):
        """Convert script to dictionary"""
        return {
            'dimension': self.dimension,
            'bits': self.bits,
            'commands': len(self.commands),
            'queries': self.query_count
        }

    def __repr__(self):
        return f'<WorkloadScript d={self.dimension} w={self.bits}: {len(self.commands)} commands>'
