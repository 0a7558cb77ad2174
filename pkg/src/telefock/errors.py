"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, AccuracyError -> 3,
HeraldImpossibleError -> 4.
"""


class TelefockError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TelefockError):
    """Malformed or inconsistent configuration input."""


class AccuracyError(TelefockError):
    """A numerical result failed its convergence or validity check."""


class TruncationError(AccuracyError):
    """Fock-space truncation discards more weight than the caller allowed."""


class HeraldImpossibleError(TelefockError):
    """A conditional operation has (numerically) zero success probability."""


class SamplingError(TelefockError):
    """Rejection sampling exceeded its retry cap."""
