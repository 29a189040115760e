"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes (see ``diffbeam.cli``).
"""


class DiffbeamError(Exception):
    """Base class for every error raised by this package."""


class DomainError(DiffbeamError, ValueError):
    """Input violates a mathematical precondition (shape, symmetry, PSD...)."""


class NumericError(DiffbeamError, ArithmeticError):
    """An iterative routine failed to converge."""


class ResourceError(DiffbeamError, MemoryError):
    """A requested object would exceed a configured size cap."""


class ConfigError(DiffbeamError, ValueError):
    """Invalid experiment or session configuration."""


class LoadError(DiffbeamError, ValueError):
    """A codebook or matrix file could not be parsed or failed validation."""


class FramingError(DiffbeamError, ValueError):
    """A feedback bitstream ended in the middle of a codeword."""
