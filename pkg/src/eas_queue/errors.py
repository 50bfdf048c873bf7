"""Exception types raised by the solver, simulator and CLI."""


class QueueError(Exception):
    """Base class for every error raised by this package."""


class InvalidPmf(QueueError, ValueError):
    pass


class Unstable(QueueError, ValueError):
    """Traffic intensity is at or above one."""

    def __init__(self, rho: float):
        super().__init__(f"unstable model: rho = {rho:.6g} >= 1")
        self.rho = rho


class PoleAtArgument(QueueError, ZeroDivisionError):
    pass


class DegreeOverflow(QueueError):
    pass


class RootCountMismatch(QueueError):
    pass


class RepeatedRoot(QueueError):
    pass


class SingularSystem(QueueError):
    pass


class NotSpecialCase(QueueError, ValueError):
    pass


class EpochKindMismatch(QueueError, ValueError):
    pass


class ModelSpecError(QueueError, ValueError):
    """A model specification file could not be turned into a model.

    ``field`` names the offending ``section.key`` when known.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class IllConditioned(UserWarning):
    """Emitted (as a warning) when the constants system is badly conditioned."""
