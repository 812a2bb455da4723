"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class PreconditionError(ValueError):
    """A documented precondition does not hold.

    ``admissible`` carries the valid range when one can be stated, e.g. the
    interval of Hoeffding slacks allowed for a given blocklength.
    """

    def __init__(self, message, admissible=None):
        super().__init__(message)
        self.admissible = admissible


class UnsupportedRepresentationError(TypeError):
    """The requested operation is not available for this state representation."""
