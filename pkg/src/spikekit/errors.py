"""Exception types shared across the library."""


class SpikekitError(Exception):
    """Base class for all spikekit errors."""


class DimensionError(SpikekitError, ValueError):
    """Operand shapes or axes are incompatible."""


class RangeError(SpikekitError, ValueError):
    """A value lies outside its documented domain."""


class FormatError(SpikekitError, ValueError):
    """A file does not match its binary format contract."""


class ContractError(SpikekitError, ValueError):
    """An API precondition was violated."""
