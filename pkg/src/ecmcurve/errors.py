"""Exception hierarchy shared by all modules."""


class EcmError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(EcmError, ValueError):
    pass


class DomainError(EcmError, ValueError):
    pass


class PoleError(EcmError, ArithmeticError):
    """An evaluation point sits on (or numerically too close to) a pole."""


class CapacityError(EcmError):
    """An enumeration or size cap was exceeded."""


class ConvergenceError(EcmError, ArithmeticError):
    pass


class AlignmentError(EcmError, ValueError):
    """A requested shift is not a multiple of the lattice step."""


class WindowError(EcmError, IndexError):
    """Access outside the valid window of a lattice series."""


class StructureError(EcmError):
    """A structural property of the quantum curve failed to hold."""


class EvaluationZoneError(EcmError, ValueError):
    """Point lies where a product of a zero and a pole is numerically indeterminate."""


class ConfigError(EcmError, ValueError):
    pass
