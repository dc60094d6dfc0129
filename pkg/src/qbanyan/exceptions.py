"""Exception types raised by the simulator."""


class QBanyanError(Exception):
    """Base class for every domain error raised by this package."""


class NormError(QBanyanError, ValueError):
    """A qubit or state that should be normalized is not."""


class DomainError(QBanyanError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class ImpossibleOutcomeError(QBanyanError):
    """A post-selection whose probability is (numerically) zero."""


class UnsupportedControlError(QBanyanError, ValueError):
    """Control settings must be classical bits (0 or 1)."""


class UnsupportedContentionError(QBanyanError):
    """A fused payload competes with another payload for one switch."""
