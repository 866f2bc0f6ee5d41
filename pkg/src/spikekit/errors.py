"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: plain ``ValueError`` (bad parameter
values) is a usage error, ``FormatError`` and friends are data errors,
``NumericalError`` signals a diverged computation.
"""


class SpikeKitError(Exception):
    """Base class for toolkit-specific errors."""


class DimensionError(SpikeKitError, ValueError):
    """Shapes of operands do not satisfy an operation's contract."""


class ContractError(SpikeKitError):
    """An API precondition was violated (e.g. backward on a non-scalar)."""


class FormatError(SpikeKitError):
    """A byte stream does not conform to the expected file format."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(FormatError):
    """File declares a format version this reader does not support."""


class TruncatedPayloadError(FormatError):
    """File ends before the declared payload is complete."""


class ConfigMismatchError(SpikeKitError):
    """Input does not match the configuration it is evaluated against."""


class InsufficientFramesError(SpikeKitError):
    """A source sequence is too short for the requested windows."""


class NumericalError(SpikeKitError):
    """A computation produced non-finite values (e.g. diverged training)."""
