"""Exception hierarchy.

Every error raised on bad input derives from :class:`ScrewCohomError`, so the
CLI can map the whole family to exit status 1.
"""


class ScrewCohomError(Exception):
    """Base class for all package errors."""


class InputError(ScrewCohomError, ValueError):
    """Malformed problem data (bad rational, duplicate coefficient, ...)."""


class ValidationError(InputError):
    """A rotation failed one of the lattice-rotation invariants."""


class NotOrthogonal(ValidationError):
    pass


class NotSpecial(ValidationError):
    pass


class NotSignedPermutation(ValidationError):
    pass


class NotARotation(InputError):
    pass


class EllTooLarge(InputError):
    pass


class SpecMismatch(InputError):
    """Coefficient data lies outside the truncation box."""


class DimensionMismatch(InputError):
    pass


class ClosureViolated(ScrewCohomError):
    """Forward recursion did not close up around the orbit."""


class NotLatticeRealizable(InputError):
    pass


class TooLarge(ScrewCohomError):
    pass


class MismatchDetected(ScrewCohomError):
    """Orbit solver and dense oracle disagree."""

    def __init__(self, message, blocks=()):
        super().__init__(message)
        self.blocks = list(blocks)
