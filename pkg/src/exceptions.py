# Errors raised by the transaction simulator.


class TransactionError(Exception):
    """Base class of every error raised by the package."""


class SchemaError(TransactionError):
    """A scenario document or manifest has missing, unknown or malformed keys."""


class CyclicContingency(SchemaError):
    """The contingency predicates reference each other in a cycle."""


class NormalizationError(TransactionError):
    """Channel weights do not sum to 1."""


class DanglingReference(TransactionError):
    """A contingency predicate names an absorber that does not exist."""


class UnknownAbsorber(TransactionError):
    pass


class TooLarge(TransactionError):
    """Too many absorbers for exhaustive history enumeration."""


class NotWellPosed(TransactionError):
    """The operation requires a well-posed setup."""

    def __init__(self, label: str, reasons=()):
        self.label = label
        self.reasons = list(reasons)
        detail = ", ".join(str(r) for r in self.reasons) or "no reason given"
        super().__init__(f"Setup '{label}' is not well-posed: {detail}")


class NoConsistentHistory(TransactionError):
    pass


class DeficitPresent(TransactionError):
    """The echo profile has unabsorbed weight, so outcomes cannot be sampled."""


class DuplicateDetector(TransactionError):
    pass


class PriorsNotNormalized(TransactionError):
    pass


class EmptyBatch(TransactionError):
    pass


class ConservationViolation(TransactionError, AssertionError):
    """Total branch weight drifted away from 1. This is a bug, not bad input."""


class UsageError(TransactionError):
    """Bad command-line usage."""
