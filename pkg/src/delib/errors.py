"""Shared exception types."""


class DelibError(Exception):
    """Base class for all library errors."""


class ValidationError(DelibError):
    """Input violates a documented precondition or invariant."""


class ConflictError(DelibError):
    """Optimistic-concurrency conflict: the caller's view of the pool is
    stale and the operation should be retried after a re-read."""


class NotFoundError(DelibError):
    """Referenced entity does not exist."""


class CorruptLogError(DelibError):
    """Event log has a sequence gap or out-of-order record."""


class GeneratorError(DelibError):
    """A text generator call failed; retryable by the caller."""


class ConvergenceError(DelibError):
    """An iterative fit hit its iteration cap before converging.

    Carries the last iterate so callers can inspect it.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class InsufficientSignalError(DelibError):
    """A statistic is undefined on the given input (e.g. zero decisive
    verdicts, fewer than two vectors, constant rank series)."""
