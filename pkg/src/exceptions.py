"""Error hierarchy shared by every module of the lab.

All errors derive from ``ValueError`` as well, so callers that only know about
``ValueError`` keep catching precondition failures.
"""


class UmbralError(ValueError):
    """Root of all errors raised by the lab."""


class DomainError(UmbralError):
    """An operation was called outside of its precondition."""


class NotInvertibleError(DomainError):
    """A series or scalar has no multiplicative inverse in the working ring."""


class ParityError(DomainError):
    """Q' = (S + S^-1)/2 is singular on the requested finite lattice."""


class TruncationError(DomainError):
    """An operator was applied beyond the order it is exact to."""


class ResolutionError(DomainError):
    """A quadrature eigenfunction is not resolved on the truncated lattice (tails or residual)."""


class HermiticityError(DomainError):
    """A matrix that must be Hermitian is not."""
