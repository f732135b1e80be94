"""Exception hierarchy shared by all modules.

Each error that the command line maps to an exit code carries an
``exit_code`` attribute.
"""


class MotivicError(Exception):
    exit_code = 1


class ParseError(MotivicError, SyntaxError):
    """Raised on malformed input text; ``pos`` is the offending offset."""

    def __init__(self, message, pos=None, expected=None):
        self.pos = pos
        self.expected = expected
        where = "" if pos is None else f" at position {pos}"
        if expected:
            message = f"{message}{where} (expected {expected})"
        else:
            message = f"{message}{where}"
        super().__init__(message)


class SortError(MotivicError, TypeError):
    pass


class VfQuantifierError(MotivicError):
    pass


class CaptureError(MotivicError):
    pass


class NotPrepared(MotivicError):
    exit_code = 2


class NotSummable(MotivicError):
    exit_code = 3


class PrecisionExhausted(MotivicError):
    exit_code = 4


class BudgetExceeded(MotivicError):
    exit_code = 5


class UnboundedDegenerate(MotivicError):
    pass


class IllFormed(MotivicError, ValueError):
    pass


class SignatureMismatch(MotivicError, ValueError):
    pass


class TruncationTooShallow(MotivicError, ValueError):
    pass
