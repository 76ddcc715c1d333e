"""Exception hierarchy shared by the data structures and the workload runner."""


class RetroSpaceError(Exception):
    """Base class for every error raised by retrospace"""


class InvalidPointError(RetroSpaceError, ValueError):
    """A coordinate is outside the fixed-point universe or the dimension is wrong"""


class InvalidIntervalError(RetroSpaceError, ValueError):
    """A lifespan does not satisfy t_start < t_end"""


class DuplicateElementError(RetroSpaceError, KeyError):
    """An element (or handle) is already present"""


class MissingElementError(RetroSpaceError, KeyError):
    """An element (or handle) is not present"""


class PreconditionError(RetroSpaceError, ValueError):
    """An operation was called outside its documented precondition"""


class StructureInconsistencyError(RetroSpaceError, AssertionError):
    """A structural audit found a broken invariant"""


class WorkloadError(RetroSpaceError, ValueError):
    """A workload script could not be parsed"""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        location = ''
        if line is not None:
            location = f'line {line}'
            if column is not None:
                location += f', column {column}'
            location += ': '
        super().__init__(f'{location}{message}')
