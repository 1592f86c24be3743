"""Exception types shared across the package."""


class ModelCheckerError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(ModelCheckerError):
    """An operation was called with arguments that break its contract,
    e.g. mixing bit-vector widths or model-checking a structure with
    unknown labels using the two-valued checker."""


class SourceError(ModelCheckerError):
    """A diagnostic tied to a position in an input text (system
    description or property string)."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"{line}:{column}: " if column is not None else f"{line}: "
        super().__init__(where + message)


class ResourceLimit(ModelCheckerError):
    """A state cap or deadline was hit.  Carries the partial counts
    reached so far."""

    def __init__(self, message, states=0, transitions=0):
        self.states = states
        self.transitions = transitions
        super().__init__(message)


class RefinementFailure(ModelCheckerError):
    """The refinement loop could not make progress.  This indicates a bug
    in candidate generation, not a property of the verified system; the
    applied raises are included for diagnosis."""

    def __init__(self, message, applied=()):
        self.applied = tuple(applied)
        super().__init__(message)
