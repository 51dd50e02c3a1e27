"""Exception hierarchy shared by all qmeter modules."""


class QmeterError(Exception):
    """Base class for every error raised by qmeter."""


class DomainError(QmeterError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class TruncationError(QmeterError):
    """The Fock-space truncation cannot certify the requested tail tolerance."""


class UnsupportedError(QmeterError, NotImplementedError):
    """The requested combination of options has no implementation by design."""


class ConfigError(QmeterError):
    """Malformed or inconsistent run configuration."""


class ToleranceError(QmeterError):
    """A numerical invariant was violated beyond its tolerance."""
