"""Exception types shared across the toolkit."""


class OpticsBenchError(Exception):
    """Base class for all toolkit errors."""


class DomainError(OpticsBenchError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(OpticsBenchError):
    """A configuration value is inconsistent or would produce garbage output."""


class DegenerateKernelError(OpticsBenchError):
    """A kernel lost essentially all of its energy and cannot be normalized."""


class FormatError(OpticsBenchError):
    """A kernel file is malformed. Carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class MatchingError(OpticsBenchError):
    """Kernel matching could not produce a usable candidate."""
